"""Deterministic synthetic test signals (stand-ins for recorded speech)."""
from __future__ import annotations

import numpy as np
from scipy.signal import chirp as _chirp

from .signal_io import Waveform


def sine(freq: float, seconds: float = 1.0, rate: int = 16000, amplitude: float = 1.0) -> Waveform:
    t = np.arange(int(round(seconds * rate))) / rate
    return Waveform(amplitude * np.sin(2 * np.pi * freq * t), rate)


def chirp(f0: float, f1: float, seconds: float = 4.0, rate: int = 16000) -> Waveform:
    t = np.arange(int(round(seconds * rate))) / rate
    return Waveform(0.9 * _chirp(t, f0, seconds, f1), rate)


def speech_like(seed: int, seconds: float = 4.0, rate: int = 16000, noise_db: float = -40.0) -> Waveform:
    """Voiced-speech surrogate.

    A harmonic source with a wandering pitch contour (90-250 Hz), a
    two-formant spectral envelope, syllable-rate amplitude modulation and a
    low background noise floor ``noise_db`` below full scale.
    """
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate))
    t = np.arange(n) / rate
    f0 = rng.uniform(100, 220) * (1 + 0.12 * np.sin(2 * np.pi * rng.uniform(0.3, 2.0) * t + rng.uniform(0, 6.3)))
    phase = 2 * np.pi * np.cumsum(f0) / rate
    formants = rng.uniform([400, 1200], [900, 2600])
    x = np.zeros(n)
    for k in range(1, int(4000 / f0.max())):
        fk = k * f0
        gain = sum(np.exp(-0.5 * ((fk - fm) / 250.0) ** 2) for fm in formants) + 0.05
        x += gain * np.sin(k * phase) / k**0.5
    syll = 0.55 + 0.45 * np.sin(2 * np.pi * rng.uniform(2.0, 5.0) * t + rng.uniform(0, 6.3)) ** 2
    x *= syll
    x *= 0.8 / np.max(np.abs(x))
    x += 10 ** (noise_db / 20) * rng.standard_normal(n)
    return Waveform(x, rate)


def chirp_mix(seed: int, seconds: float = 4.0, rate: int = 16000, noise_db: float = -40.0) -> Waveform:
    """Two crossing linear chirps over a weak noise floor."""
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate))
    t = np.arange(n) / rate
    x = sum(
        rng.uniform(0.3, 1.0) * _chirp(t, rng.uniform(100, 3000), seconds, rng.uniform(100, 6000), phi=rng.uniform(0, 360))
        for _ in range(2)
    )
    x *= 0.8 / np.max(np.abs(x))
    x += 10 ** (noise_db / 20) * rng.standard_normal(n)
    return Waveform(x, rate)
