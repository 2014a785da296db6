"""Frame-level spectral and temporal features and the 26-value window summary.

Every per-frame feature is computed on a Hann-windowed STFT (or the
matching centred time-domain framing) and averaged over the frames of a
1-second window.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct, rfft

from .audio_io import CANONICAL_RATE, AudioClip, resample, segment

N_FFT = 2048
HOP = 512
N_MELS = 128
N_MFCC = 20
ROLLOFF_FRACTION = 0.85
LOG_FLOOR = 1e-10
TOP_DB = 80.0

FEATURE_NAMES = (
    "chroma_mean", "rms_mean", "spectral_centroid_mean", "spectral_bandwidth_mean",
    "rolloff_mean", "zcr_mean", *(f"mfcc_{i}" for i in range(1, N_MFCC + 1)),
)
N_FEATURES = len(FEATURE_NAMES)


class WindowTooShort(ValueError):
    pass


@dataclass(frozen=True)
class Spectrogram:
    magnitudes: np.ndarray  # frames x (n_fft // 2 + 1)
    n_fft: int
    hop: int
    sample_rate_hz: int

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_fft // 2 + 1) * (self.sample_rate_hz / self.n_fft)

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]


@lru_cache(maxsize=8)
def hann(n: int) -> np.ndarray:
    """Periodic Hann window (the DFT-even variant used for spectral analysis)."""
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    w.flags.writeable = False
    return w


def _frames(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    n = 1 + (x.shape[0] - frame_len) // hop
    return np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop][:n]


def stft(window: AudioClip, n_fft: int = N_FFT, hop: int = HOP) -> Spectrogram:
    """Magnitude STFT with reflect-padded centred frames.

    Frame ``m`` is centred on sample ``m * hop`` of the unpadded signal.
    """
    if n_fft <= 0 or n_fft & (n_fft - 1):
        raise ValueError(f"n_fft must be a power of two, got {n_fft}")
    x = window.samples
    pad = n_fft // 2
    if x.shape[0] <= pad:
        raise WindowTooShort(f"{x.shape[0]} samples cannot be reflect-padded by {pad}")
    x = np.pad(x, pad, mode="reflect")
    if x.shape[0] < n_fft:
        raise WindowTooShort(f"padded length {x.shape[0]} is shorter than n_fft={n_fft}")
    frames = _frames(x, n_fft, hop) * hann(n_fft)
    mags = np.abs(rfft(frames, axis=1))
    return Spectrogram(mags, n_fft, hop, window.sample_rate_hz)


@lru_cache(maxsize=8)
def _pitch_classes(n_fft: int, sample_rate_hz: int) -> np.ndarray:
    freqs = np.arange(1, n_fft // 2 + 1) * (sample_rate_hz / n_fft)
    midi = np.round(12.0 * np.log2(freqs / 440.0) + 69.0).astype(np.int64)
    # bin 0 (DC) carries no pitch; -1 marks it for exclusion
    classes = np.concatenate([[-1], np.mod(midi, 12)])
    classes.flags.writeable = False
    return classes


def chromagram(spec: Spectrogram) -> np.ndarray:
    """Frames x 12 pitch-class energies, each frame scaled so its maximum is 1.

    Class 0 is C and class 9 is A. Silent frames stay all-zero.
    """
    classes = _pitch_classes(spec.n_fft, spec.sample_rate_hz)
    keep = classes >= 0
    onehot = np.zeros((keep.sum(), 12))
    onehot[np.arange(onehot.shape[0]), classes[keep]] = 1.0
    chroma = spec.magnitudes[:, keep] @ onehot
    peak = chroma.max(axis=1, keepdims=True)
    return np.divide(chroma, peak, out=np.zeros_like(chroma), where=peak > 0)


def chroma_mean(spec: Spectrogram) -> float:
    return float(chromagram(spec).mean())


def spectral_centroid(spec: Spectrogram) -> np.ndarray:
    """Magnitude-weighted mean frequency per frame, in Hz."""
    s = spec.magnitudes
    total = s.sum(axis=1)
    weighted = s @ spec.frequencies
    return np.divide(weighted, total, out=np.zeros_like(total), where=total > 0)


def spectral_bandwidth(spec: Spectrogram) -> np.ndarray:
    s = spec.magnitudes
    total = s.sum(axis=1)
    centroid = spectral_centroid(spec)
    dev2 = (spec.frequencies[None, :] - centroid[:, None]) ** 2
    var = np.divide((s * dev2).sum(axis=1), total, out=np.zeros_like(total), where=total > 0)
    return np.sqrt(var)


def spectral_rolloff(spec: Spectrogram, fraction: float = ROLLOFF_FRACTION) -> np.ndarray:
    """Lowest bin frequency at which the cumulative magnitude reaches ``fraction`` of the frame total."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    cum = np.cumsum(spec.magnitudes, axis=1)
    total = cum[:, -1]
    reached = cum >= fraction * total[:, None]
    idx = reached.argmax(axis=1)
    return np.where(total > 0, spec.frequencies[idx], 0.0)


def _time_frames(x: np.ndarray, frame_len: int, hop: int, center: bool, mode: str) -> np.ndarray:
    if center:
        x = np.pad(x, frame_len // 2, mode=mode)
    if frame_len > x.shape[0]:
        raise WindowTooShort(f"frame length {frame_len} exceeds {x.shape[0]} samples")
    return _frames(x, frame_len, hop)


def zero_crossing_rate(window: AudioClip, frame_len: int = N_FFT, hop: int = HOP,
                       center: bool = True) -> np.ndarray:
    """Per-frame fraction of adjacent sample pairs that change sign.

    Zero counts as positive, so silence never crosses. Centred framing pads
    by repeating the edge samples, which adds no crossings.
    """
    frames = _time_frames(window.samples, frame_len, hop, center, "edge")
    sgn = np.where(frames >= 0, 1.0, -1.0)
    return np.abs(np.diff(sgn, axis=1)).sum(axis=1) / (2.0 * frame_len)


def rms(window: AudioClip, frame_len: int = N_FFT, hop: int = HOP,
        center: bool = True) -> np.ndarray:
    frames = _time_frames(window.samples, frame_len, hop, center, "constant")
    return np.sqrt(np.mean(frames ** 2, axis=1))


def _hz_to_mel(f):
    # Slaney scale: linear below 1 kHz, logarithmic above
    f = np.asarray(f, dtype=np.float64)
    lin = f / (200.0 / 3)
    logstep = np.log(6.4) / 27.0
    return np.where(f >= 1000.0, 15.0 + np.log(np.maximum(f, 1e-12) / 1000.0) / logstep, lin)


def _mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    logstep = np.log(6.4) / 27.0
    return np.where(m >= 15.0, 1000.0 * np.exp(logstep * (m - 15.0)), m * (200.0 / 3))


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray  # n_mels x bins
    fmin: float
    fmax: float


@lru_cache(maxsize=8)
def mel_filterbank(sample_rate_hz: int, n_fft: int, n_mels: int = N_MELS,
                   fmin: float = 0.0, fmax: float | None = None) -> MelFilterbank:
    """Triangular filters evenly spaced on the mel scale, each normalised to unit area in Hz."""
    if fmax is None:
        fmax = sample_rate_hz / 2.0
    fft_freqs = np.linspace(0.0, sample_rate_hz / 2.0, n_fft // 2 + 1)
    edges = _mel_to_hz(np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2))
    widths = np.diff(edges)
    ramps = edges[:, None] - fft_freqs[None, :]
    rising = -ramps[:-2] / widths[:-1, None]
    falling = ramps[2:] / widths[1:, None]
    weights = np.maximum(0.0, np.minimum(rising, falling))
    weights *= (2.0 / (edges[2:] - edges[:-2]))[:, None]
    weights.flags.writeable = False
    return MelFilterbank(weights, float(fmin), float(fmax))


def power_to_db(power: np.ndarray, floor: float = LOG_FLOOR, top_db: float | None = TOP_DB) -> np.ndarray:
    db = 10.0 * np.log10(np.maximum(power, floor))
    if top_db is not None:
        db = np.maximum(db, db.max() - top_db)
    return db


def mfcc(spec: Spectrogram, n_mels: int = N_MELS, n_mfcc: int = N_MFCC) -> np.ndarray:
    """Frames x ``n_mfcc`` cepstral coefficients.

    Column ``j`` holds DCT coefficient ``j``, so the first column is the
    overall log-energy term. The dB range is clipped to ``TOP_DB`` below the
    loudest mel cell of the whole spectrogram.
    """
    if n_mfcc > n_mels:
        raise ValueError("n_mfcc cannot exceed n_mels")
    fb = mel_filterbank(spec.sample_rate_hz, spec.n_fft, n_mels)
    mel_power = (spec.magnitudes ** 2) @ fb.weights.T
    return dct(power_to_db(mel_power), type=2, norm="ortho", axis=1)[:, :n_mfcc]


def extract_features(window: AudioClip) -> np.ndarray:
    """Summarise one window as the 26 frame-averaged features in ``FEATURE_NAMES`` order."""
    if window.sample_rate_hz != CANONICAL_RATE:
        window = resample(window, CANONICAL_RATE)
    spec = stft(window, N_FFT, HOP)
    out = np.empty(N_FEATURES)
    out[0] = chroma_mean(spec)
    out[1] = rms(window, N_FFT, HOP).mean()
    out[2] = spectral_centroid(spec).mean()
    out[3] = spectral_bandwidth(spec).mean()
    out[4] = spectral_rolloff(spec).mean()
    out[5] = zero_crossing_rate(window, N_FFT, HOP).mean()
    out[6:] = mfcc(spec).mean(axis=0)
    return out


def features_from_clip(clip: AudioClip, window_seconds: float = 1.0) -> np.ndarray:
    """Segment at the native rate, then extract one feature row per full window."""
    windows = segment(clip, window_seconds)
    if not windows:
        return np.empty((0, N_FEATURES))
    return np.vstack([extract_features(w) for w in windows])
