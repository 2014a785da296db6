"""Seeded synthetic audio for offline smoke runs: tonal clips versus noise clips."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio_io import AudioClip, write_wav


def sine(freq_hz: float, seconds: float, rate: int, amplitude: float = 0.5,
         phase: float = 0.0) -> AudioClip:
    t = np.arange(int(round(seconds * rate))) / rate
    return AudioClip(amplitude * np.sin(2.0 * np.pi * freq_hz * t + phase), rate)


def tonal_clip(rng: np.random.Generator, seconds: float, rate: int) -> AudioClip:
    """A few harmonics of a random fundamental with a little background noise."""
    f0 = rng.uniform(100.0, 300.0)
    t = np.arange(int(round(seconds * rate))) / rate
    x = sum(rng.uniform(0.2, 1.0) / h * np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi))
            for h in range(1, 6))
    x = 0.3 * x / np.abs(x).max() + 0.005 * rng.standard_normal(t.size)
    return AudioClip(np.clip(x, -1, 1), rate)


def noise_clip(rng: np.random.Generator, seconds: float, rate: int) -> AudioClip:
    n = int(round(seconds * rate))
    x = rng.uniform(0.05, 0.3) * rng.standard_normal(n)
    return AudioClip(np.clip(x, -1, 1), rate)


def write_corpus(root: str | Path, n_files: int = 6, seconds: float = 5.0, rate: int = 22050,
                 seed: int = 0) -> tuple[Path, Path]:
    """Write ``REAL/`` (tonal) and ``FAKE/`` (noise) WAV directories under ``root``."""
    rng = np.random.default_rng(seed)
    root = Path(root)
    real, fake = root / "REAL", root / "FAKE"
    real.mkdir(parents=True, exist_ok=True)
    fake.mkdir(parents=True, exist_ok=True)
    for i in range(n_files):
        write_wav(real / f"tone_{i:02d}.wav", tonal_clip(rng, seconds, rate))
        write_wav(fake / f"noise_{i:02d}.wav", noise_clip(rng, seconds, rate))
    return real, fake
