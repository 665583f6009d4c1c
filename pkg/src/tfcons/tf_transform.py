"""Forward/inverse STFT and the spectral-convergence metric.

Frames are centred: frame ``t`` is centred on input sample ``t * hop``, with
the signal reflect-padded by ``fft_size // 2`` on both sides, so a clip of
``L`` samples gives ``ceil(L / hop)`` frames. The inverse is the exact
least-squares solution over that padded family (contributions that land in
the padding are folded back onto the samples they mirror), which makes
``stft(istft(.))`` an orthogonal projection onto consistent spectrograms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionError, NonInvertibleConfigError
from .signal_io import Waveform

WINDOWS = ("hann", "gaussian", "rectangular")


@dataclass(frozen=True)
class StftConfig:
    """STFT parameters.

    ``gaussian_lambda`` is the time spread of a Gaussian window
    ``exp(-pi t^2 / lambda)`` in samples^2; only used when
    ``window == "gaussian"``. That window is truncated at four standard
    deviations (``sqrt(lambda / 2pi)``) and at the frame edges.
    """

    frame_size: int = 512
    hop: int = 128
    window: str = "hann"
    fft_size: int | None = None
    centered: bool = True
    gaussian_lambda: float | None = None
    sample_rate: int = 16000

    def __post_init__(self):
        if self.fft_size is None:
            object.__setattr__(self, "fft_size", self.frame_size)
        if self.window not in WINDOWS:
            raise ValueError(f"unknown window {self.window!r}; choose from {WINDOWS}")
        if not 0 < self.hop <= self.frame_size <= self.fft_size:
            raise ValueError(
                f"need 0 < hop <= frame_size <= fft_size, got {self.hop}, {self.frame_size}, {self.fft_size}"
            )
        if self.window == "gaussian":
            if self.gaussian_lambda is None:
                # isotropic time-frequency sampling: hop^2/lambda == lambda/fft_size^2
                object.__setattr__(self, "gaussian_lambda", float(self.hop * self.fft_size))
            if self.gaussian_lambda <= 0:
                raise ValueError("gaussian_lambda must be positive")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    def n_frames(self, length: int) -> int:
        if self.centered:
            return max(1, math.ceil(length / self.hop))
        return 1 + max(0, math.ceil((length - self.fft_size) / self.hop))


def window_samples(cfg: StftConfig) -> np.ndarray:
    """The length-``frame_size`` analysis window."""
    n = np.arange(cfg.frame_size, dtype=np.float64)
    if cfg.window == "hann":
        # periodic Hann: sums to a constant at hop = frame_size / 4
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / cfg.frame_size)
    if cfg.window == "rectangular":
        return np.ones(cfg.frame_size)
    lam = cfg.gaussian_lambda
    t = n - cfg.frame_size // 2
    g = np.exp(-np.pi * t**2 / lam)
    g[np.abs(t) > 4.0 * math.sqrt(lam / (2.0 * np.pi))] = 0.0
    return g


def _frame_window(cfg: StftConfig) -> np.ndarray:
    # analysis window zero-padded (symmetrically) to fft_size
    w = np.zeros(cfg.fft_size)
    off = (cfg.fft_size - cfg.frame_size) // 2
    w[off:off + cfg.frame_size] = window_samples(cfg)
    return w


def cola_deviation(cfg: StftConfig) -> float:
    """Relative peak-to-peak ripple of the overlap-added window."""
    w = _frame_window(cfg)
    period = np.zeros(cfg.hop)
    for start in range(0, cfg.fft_size, cfg.hop):
        chunk = w[start:start + cfg.hop]
        period[:len(chunk)] += chunk
    return float(np.ptp(period) / np.max(np.abs(period)))


def _source_index(length: int, cfg: StftConfig, n_frames: int) -> np.ndarray:
    """For each sample of the padded signal, the input sample it copies (-1 for zeros)."""
    idx = np.arange(length)
    if cfg.centered:
        pad = cfg.fft_size // 2
        idx = np.pad(idx, pad, mode="reflect") if length > 1 else np.zeros(length + 2 * pad, dtype=int)
    need = (n_frames - 1) * cfg.hop + cfg.fft_size
    if len(idx) < need:
        idx = np.concatenate([idx, np.full(need - len(idx), -1)])
    return idx


@dataclass(eq=False)
class ComplexSpectrogram:
    """One-sided STFT coefficients, shape ``(fft_size // 2 + 1, n_frames)``."""

    values: np.ndarray
    config: StftConfig
    original_length: int
    sample_rate: int = field(default=16000)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 2 or self.values.shape[0] != self.config.n_bins:
            raise DimensionError(
                f"expected {self.config.n_bins} frequency rows, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrogram contains NaN or Inf")

    @property
    def shape(self):
        return self.values.shape

    def with_values(self, values) -> "ComplexSpectrogram":
        return ComplexSpectrogram(values, self.config, self.original_length, self.sample_rate)


def stft(w: Waveform, cfg: StftConfig) -> ComplexSpectrogram:
    samples = w.samples if isinstance(w, Waveform) else np.asarray(w, dtype=np.float64)
    rate = w.sample_rate if isinstance(w, Waveform) else cfg.sample_rate
    if len(samples) == 0:
        raise ValueError("cannot transform an empty waveform")
    n_frames = cfg.n_frames(len(samples))
    idx = _source_index(len(samples), cfg, n_frames)
    padded = np.where(idx >= 0, samples[np.maximum(idx, 0)], 0.0)
    frames = sliding_window_view(padded, cfg.fft_size)[::cfg.hop][:n_frames]
    spec = np.fft.rfft(frames * _frame_window(cfg), axis=1).T
    return ComplexSpectrogram(spec, cfg, len(samples), rate)


def istft(s: ComplexSpectrogram) -> Waveform:
    cfg = s.config
    n_frames = s.values.shape[1]
    length = s.original_length
    w = _frame_window(cfg)
    frames = np.fft.irfft(s.values, n=cfg.fft_size, axis=0).T * w
    total = (n_frames - 1) * cfg.hop + cfg.fft_size
    num = np.zeros(total)
    den = np.zeros(total)
    w2 = w * w
    for t in range(n_frames):
        sl = slice(t * cfg.hop, t * cfg.hop + cfg.fft_size)
        num[sl] += frames[t]
        den[sl] += w2
    idx = _source_index(length, cfg, n_frames)[:total]
    keep = idx >= 0
    num_f = np.bincount(idx[keep], weights=num[:len(idx)][keep], minlength=length)[:length]
    den_f = np.bincount(idx[keep], weights=den[:len(idx)][keep], minlength=length)[:length]
    bad = np.flatnonzero(den_f < 1e-12)
    if bad.size:
        raise NonInvertibleConfigError(
            f"window sum vanishes at {bad.size} sample(s), first at index {bad[0]}"
        )
    return Waveform(num_f / den_f, s.sample_rate)


def spectral_convergence(target_mag, s) -> float:
    """``|| |s| - target ||_F / || target ||_F``; ``|| |s| ||_F`` when the target is zero."""
    target = np.asarray(getattr(target_mag, "values", target_mag), dtype=np.float64)
    mag = np.abs(getattr(s, "values", s))
    if target.shape != mag.shape:
        raise DimensionError(f"shape mismatch: target {target.shape} vs spectrogram {mag.shape}")
    ref = np.linalg.norm(target)
    diff = np.linalg.norm(mag - target)
    return float(diff / ref) if ref > 0 else float(diff)
