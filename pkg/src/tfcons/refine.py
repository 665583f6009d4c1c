"""Gradient ascent on rho inside an L-infinity trust region, and a GLA comparison harness.

This is a controlled proxy: the consistency term is optimized directly on a
given spectrogram instead of through a trained generator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import consistency as cons
from .errors import DimensionError
from .phase_recon import GlaConfig, griffin_lim, iterations_to_threshold
from .spec_pipeline import MagnitudeSpectrogram
from .tf_transform import StftConfig


@dataclass(frozen=True)
class RefineConfig:
    """``max_deviation=None`` means 5% of the input's dynamic range.

    ``step_size`` multiplies the raw gradient, whose entries shrink roughly
    like 1/(number of bins); the default suits full-size (257 x T) inputs.
    """

    step_size: float = 300.0
    max_steps: int = 200
    target_rho: float = 0.75
    max_deviation: float | None = None

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0 < self.target_rho <= 1:
            raise ValueError("target_rho must lie in (0, 1]")
        if self.max_deviation is not None and self.max_deviation < 0:
            raise ValueError("max_deviation must be nonnegative")


def refine_spectrogram(M, cfg: cons.ConsistencyConfig, rc: RefineConfig = RefineConfig()):
    """Returns ``(refined, rho_trace)``; the trace starts with rho of the input."""
    base = M.values if isinstance(M, MagnitudeSpectrogram) else np.asarray(M, dtype=np.float64)
    report = cons.rho(M, cfg)
    if report.degenerate:
        raise ValueError("rho of the input is degenerate; refinement needs a non-constant, non-analytic input")
    radius = rc.max_deviation if rc.max_deviation is not None else 0.05 * float(np.ptp(base))
    lo, hi = base - radius, base + radius
    if isinstance(M, MagnitudeSpectrogram) and M.scale == "normalized":
        lo, hi = np.maximum(lo, -1.0), np.minimum(hi, 1.0)

    def wrap(values):
        if isinstance(M, MagnitudeSpectrogram):
            return MagnitudeSpectrogram(values, M.scale, M.norm_params, M.floor_db)
        return values

    current = base.copy()
    trace = [report.rho]
    for _ in range(rc.max_steps):
        if trace[-1] >= rc.target_rho:
            break
        _, grad = cons.rho_and_gradient(wrap(current), cfg)
        current = np.clip(current + rc.step_size * grad, lo, hi)
        trace.append(cons.rho(wrap(current), cfg).rho)
    return wrap(current), trace


@dataclass(frozen=True)
class GlaComparison:
    iterations_raw: int | None
    iterations_refined: int | None
    final_raw: float
    final_refined: float


def compare_gla_convergence(raw_linear, refined_linear, cfg: StftConfig, gla: GlaConfig,
                            threshold: float = 0.1, original_length: int | None = None) -> GlaComparison:
    """Run Griffin-Lim on both linear, full-height magnitudes and compare convergence."""
    a = np.asarray(getattr(raw_linear, "values", raw_linear))
    b = np.asarray(getattr(refined_linear, "values", refined_linear))
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    ra = griffin_lim(a, cfg, gla, original_length)
    rb = ra if b is a or np.array_equal(a, b) else griffin_lim(b, cfg, gla, original_length)
    return GlaComparison(iterations_to_threshold(ra, threshold), iterations_to_threshold(rb, threshold),
                         ra.convergence_trace[-1], rb.convergence_trace[-1])


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    rho_before: float
    rho_after: float
    iters_raw: int | None
    iters_refined: int | None
    final_raw: float
    final_refined: float

    def csv_row(self) -> str:
        fmt = lambda v: "" if v is None else str(v)
        return (f"{self.trial},{self.seed},{self.rho_before:.10g},{self.rho_after:.10g},"
                f"{fmt(self.iters_raw)},{fmt(self.iters_refined)}")


TRIAL_CSV_HEADER = "trial,seed,rho_before,rho_after,iters_raw,iters_refined"


def corruption_trial(trial: int, seed: int, log_mag: np.ndarray, cfg: StftConfig, gla: GlaConfig,
                     noise_fraction: float = 0.01, rc: RefineConfig = RefineConfig(),
                     threshold: float = 0.1, original_length: int | None = None) -> TrialRow:
    """Corrupt a clean log magnitude with Gaussian noise (std = ``noise_fraction`` x dynamic range),
    refine it, and compare Griffin-Lim on the corrupted and refined versions."""
    rng = np.random.default_rng(seed)
    noisy = log_mag + noise_fraction * float(np.ptp(log_mag)) * rng.standard_normal(log_mag.shape)
    cc = cons.ConsistencyConfig.for_stft(cfg)
    refined, trace = refine_spectrogram(noisy, cc, rc)
    cmp = compare_gla_convergence(np.exp(noisy), np.exp(refined), cfg, gla, threshold, original_length)
    return TrialRow(trial, seed, trace[0], trace[-1], cmp.iterations_raw, cmp.iterations_refined,
                    cmp.final_raw, cmp.final_refined)
