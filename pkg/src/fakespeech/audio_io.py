"""WAV decoding, mono mixdown, resampling and 1-second segmentation."""
from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np
from scipy.signal import firwin, resample_poly

CANONICAL_RATE = 22050

_FORMAT_PCM = 0x0001
_FORMAT_FLOAT = 0x0003
_FORMAT_EXTENSIBLE = 0xFFFE
_COMPRESSED_NAMES = {0x0002: "MS ADPCM", 0x0006: "A-law", 0x0007: "mu-law",
                     0x0011: "IMA ADPCM", 0x0055: "MPEG layer 3"}

# sinc half-length measured in periods of the lower of the two rates
_RESAMPLE_HALF_TAPS = 8
_KAISER_BETA = 5.0


class AudioError(Exception):
    pass


class MalformedContainer(AudioError):
    pass


class UnsupportedEncoding(AudioError):
    pass


class EmptyAudio(AudioError):
    pass


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioClip holds mono samples only")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class WavFormat:
    """Decoded ``fmt `` chunk."""

    channels: int
    sample_rate_hz: int
    bits: int
    is_float: bool

    @property
    def frame_bytes(self) -> int:
        return self.channels * self.bits // 8


def decode_pcm(data: bytes, bits: int, channels: int, is_float: bool = False) -> np.ndarray:
    """Turn interleaved little-endian PCM bytes into mono float64 in [-1, 1].

    Trailing bytes that do not fill a whole frame are ignored.
    """
    width = bits // 8
    frame = width * channels
    n_frames = len(data) // frame
    raw = np.frombuffer(data, dtype=np.uint8, count=n_frames * frame)
    if is_float:
        if bits != 32:
            raise UnsupportedEncoding(f"{bits}-bit float samples are not supported")
        x = raw.view("<f4").astype(np.float64)
        x = np.clip(np.nan_to_num(x, nan=0.0, posinf=1.0, neginf=-1.0), -1.0, 1.0)
    elif bits == 16:
        x = raw.view("<i2") / 32768.0
    elif bits == 32:
        x = raw.view("<i4") / 2147483648.0
    elif bits == 24:
        b = raw.reshape(-1, 3).astype(np.int32)
        v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        v = np.where(v >= 1 << 23, v - (1 << 24), v)
        x = v / 8388608.0
    else:
        raise UnsupportedEncoding(f"{bits}-bit integer PCM is not supported")
    x = x.reshape(n_frames, channels)
    if channels == 1:
        return np.ascontiguousarray(x[:, 0])
    return x.mean(axis=1)


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise MalformedContainer(f"truncated {what}")
    return buf


def _parse_fmt(body: bytes) -> WavFormat:
    if len(body) < 16:
        raise MalformedContainer("fmt chunk shorter than 16 bytes")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if tag == _FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise MalformedContainer("extensible fmt chunk shorter than 40 bytes")
        tag = struct.unpack("<H", body[24:26])[0]
    if tag not in (_FORMAT_PCM, _FORMAT_FLOAT):
        name = _COMPRESSED_NAMES.get(tag, f"format tag 0x{tag:04x}")
        raise UnsupportedEncoding(f"compressed or unknown encoding: {name}")
    is_float = tag == _FORMAT_FLOAT
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels; only mono and stereo are supported")
    if is_float and bits != 32:
        raise UnsupportedEncoding(f"{bits}-bit float samples are not supported")
    if not is_float and bits not in (16, 24, 32):
        raise UnsupportedEncoding(f"{bits}-bit integer PCM is not supported")
    if rate <= 0:
        raise MalformedContainer("sample rate of zero")
    fmt = WavFormat(channels, rate, bits, is_float)
    if block_align != fmt.frame_bytes:
        raise MalformedContainer(
            f"block align {block_align} disagrees with {channels}x{bits}-bit frames")
    return fmt


def open_wav(f: BinaryIO) -> tuple[WavFormat, int]:
    """Parse the RIFF header up to the start of the ``data`` payload.

    Returns the format and the payload size in bytes. ``f`` is left
    positioned at the first sample byte. Chunks other than ``fmt `` and
    ``data`` are skipped.
    """
    header = f.read(12)
    if len(header) < 12 or header[:4] != b"RIFF" or header[8:12] != b"WAVE":
        raise MalformedContainer("not a RIFF/WAVE file")
    fmt = None
    while True:
        chunk = f.read(8)
        if len(chunk) == 0:
            raise MalformedContainer("no data chunk")
        if len(chunk) < 8:
            raise MalformedContainer("truncated chunk header")
        cid, size = chunk[:4], struct.unpack("<I", chunk[4:])[0]
        if cid == b"fmt ":
            fmt = _parse_fmt(_read_exact(f, size + (size & 1), "fmt chunk"))
        elif cid == b"data":
            if fmt is None:
                raise MalformedContainer("data chunk precedes fmt chunk")
            # streaming writers leave 0 or 0xFFFFFFFF as the size
            if size in (0, 0xFFFFFFFF):
                size = -1
            return fmt, size
        else:
            _read_exact(f, size + (size & 1), f"{cid!r} chunk")


def iter_wav_blocks(f: BinaryIO, block_frames: int) -> Iterator[tuple[WavFormat, np.ndarray]]:
    """Yield ``(format, mono_block)`` pairs of at most ``block_frames`` frames."""
    fmt, remaining = open_wav(f)
    step = block_frames * fmt.frame_bytes
    while remaining != 0:
        want = step if remaining < 0 else min(step, remaining)
        buf = f.read(want)
        if not buf:
            break
        if remaining > 0:
            remaining -= len(buf)
        block = decode_pcm(buf, fmt.bits, fmt.channels, fmt.is_float)
        if block.size:
            yield fmt, block
        if len(buf) < want:
            break


def read_wav(data: bytes | BinaryIO) -> AudioClip:
    f = io.BytesIO(data) if isinstance(data, (bytes, bytearray)) else data
    fmt, size = open_wav(f)
    payload = f.read() if size < 0 else f.read(size)
    samples = decode_pcm(payload, fmt.bits, fmt.channels, fmt.is_float)
    if samples.size == 0:
        raise EmptyAudio("WAV file contains no samples")
    return AudioClip(samples, fmt.sample_rate_hz)


def load_wav(path: str | Path) -> AudioClip:
    """Load a WAV file as a mono clip with samples scaled to [-1, 1]."""
    with open(path, "rb") as f:
        return read_wav(f)


def write_wav(path: str | Path, clip: AudioClip, bits: int = 16) -> None:
    """Write a mono clip as integer PCM, rounding to the nearest code."""
    full = 2 ** (bits - 1)
    codes = np.clip(np.round(clip.samples * full), -full, full - 1).astype(np.int64)
    if bits == 16:
        payload = codes.astype("<i2").tobytes()
    elif bits == 32:
        payload = codes.astype("<i4").tobytes()
    elif bits == 24:
        payload = codes.astype("<i4").view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    else:
        raise UnsupportedEncoding(f"cannot write {bits}-bit PCM")
    fmt = struct.pack("<HHIIHH", _FORMAT_PCM, 1, clip.sample_rate_hz,
                      clip.sample_rate_hz * bits // 8, bits // 8, bits)
    with open(path, "wb") as f:
        f.write(b"RIFF" + struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(payload)) + b"WAVE")
        f.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        f.write(b"data" + struct.pack("<I", len(payload)) + payload)
        if len(payload) & 1:
            f.write(b"\0")


def resample(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Polyphase resampling with a Kaiser-windowed sinc low-pass."""
    if len(clip) == 0:
        raise EmptyAudio("cannot resample an empty clip")
    if target_rate_hz <= 0:
        raise ValueError("target rate must be positive")
    if target_rate_hz == clip.sample_rate_hz:
        return clip
    g = math.gcd(clip.sample_rate_hz, target_rate_hz)
    up, down = target_rate_hz // g, clip.sample_rate_hz // g
    taps = _design_filter(up, down)
    out = resample_poly(clip.samples, up, down, window=taps)
    return AudioClip(np.clip(out, -1.0, 1.0), target_rate_hz)


def _design_filter(up: int, down: int) -> np.ndarray:
    max_rate = max(up, down)
    half_len = _RESAMPLE_HALF_TAPS * max_rate
    return firwin(2 * half_len + 1, 1.0 / max_rate, window=("kaiser", _KAISER_BETA))


def segment(clip: AudioClip, window_seconds: float = 1.0) -> list[AudioClip]:
    """Cut ``clip`` into consecutive non-overlapping windows.

    The trailing partial window is discarded rather than padded.
    """
    if len(clip) == 0:
        raise EmptyAudio("cannot segment an empty clip")
    if window_seconds <= 0:
        raise ValueError("window length must be positive")
    width = int(round(window_seconds * clip.sample_rate_hz))
    count = len(clip) // width
    return [AudioClip(clip.samples[i * width:(i + 1) * width], clip.sample_rate_hz)
            for i in range(count)]
