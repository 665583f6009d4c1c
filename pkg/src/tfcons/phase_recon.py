"""Griffin-Lim phase reconstruction with a per-iteration convergence trace."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericError
from .signal_io import Waveform
from .tf_transform import ComplexSpectrogram, StftConfig, istft, spectral_convergence, stft


@dataclass(frozen=True)
class GlaConfig:
    max_iterations: int = 100
    tolerance: float = 1e-4
    momentum: float = 0.0
    init_phase: str = "zero"  # or "random"
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.init_phase not in ("zero", "random"):
            raise ValueError(f"init_phase must be 'zero' or 'random', got {self.init_phase!r}")


@dataclass(eq=False)
class GlaResult:
    waveform: Waveform
    convergence_trace: list[float] = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False


def unit_phase(z: np.ndarray) -> np.ndarray:
    """``z / |z|`` with the phase of an exact zero defined as 1."""
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


def griffin_lim(target, cfg: StftConfig, gla: GlaConfig = GlaConfig(),
                original_length: int | None = None, sample_rate: int | None = None) -> GlaResult:
    """Estimate a waveform whose STFT magnitude matches ``target``.

    ``target`` is a linear-scale, full-height (Nyquist row included) magnitude,
    either an array or anything with a ``.values`` attribute. With
    ``momentum > 0`` the fast Griffin-Lim extrapolation step is applied.
    """
    mag = np.asarray(getattr(target, "values", target), dtype=np.float64)
    if mag.ndim != 2 or mag.shape[0] != cfg.n_bins:
        raise DimensionError(f"target must have {cfg.n_bins} rows (restore the Nyquist row first), got {mag.shape}")
    if np.any(mag < 0) or not np.all(np.isfinite(mag)):
        raise ValueError("target magnitude must be finite and nonnegative")
    n_frames = mag.shape[1]
    if original_length is None:
        original_length = n_frames * cfg.hop if cfg.centered else (n_frames - 1) * cfg.hop + cfg.fft_size
    rate = sample_rate or cfg.sample_rate

    if gla.init_phase == "random":
        rng = np.random.default_rng(gla.seed)
        phase = np.exp(2j * np.pi * rng.random(mag.shape))
    else:
        phase = np.ones(mag.shape, dtype=np.complex128)

    def project(values):
        spec = ComplexSpectrogram(values, cfg, original_length, rate)
        return stft(istft(spec), cfg).values

    trace = []
    converged = False
    estimate = mag * phase
    previous = None
    for it in range(1, gla.max_iterations + 1):
        projected = project(estimate)
        if not np.all(np.isfinite(projected)):
            raise NumericError(f"non-finite spectrogram at Griffin-Lim iteration {it}")
        trace.append(spectral_convergence(mag, projected))
        if gla.momentum > 0 and previous is not None:
            accelerated = projected + gla.momentum * (projected - previous)
        else:
            accelerated = projected
        previous = projected
        estimate = mag * unit_phase(accelerated)
        if trace[-1] < gla.tolerance:
            converged = True
            break

    wave = istft(ComplexSpectrogram(estimate, cfg, original_length, rate))
    return GlaResult(wave, trace, len(trace), converged)


def iterations_to_threshold(result, threshold: float) -> int | None:
    """1-based index of the first trace value below ``threshold``, else None."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    trace = getattr(result, "convergence_trace", result)
    for i, value in enumerate(trace, start=1):
        if value < threshold:
            return i
    return None
