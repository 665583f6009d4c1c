"""Spectrogram consistency: projection residual, DM maps, rho, gamma and d(rho)/dM.

The consistency condition for a Gaussian window ``exp(-pi t^2 / lam)``
says that the log magnitude ``L`` satisfies, on the STFT grid,

    (lam / a^2) d2_n L + (K^2 / lam) d2_m L = -2 pi

with ``a`` the hop and ``K`` the number of DFT channels (the frequency grid
step is ``1/K`` cycles per sample). Rewriting each second difference as a
deviation from half the right-hand side gives

    DM_n = |d2_n L + pi a^2 / lam|,    DM_m = |d2_m L + pi lam / K^2|,

which are proportional to each other wherever the condition holds, so their
Pearson correlation ``rho`` is close to 1 for consistent magnitudes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateMeasureError, DimensionError
from .spec_pipeline import MagnitudeSpectrogram
from .tf_transform import ComplexSpectrogram, StftConfig, istft, stft, window_samples


@lru_cache(maxsize=32)
def _fit_lambda(window: tuple) -> float:
    w = np.asarray(window)
    t = np.arange(len(w)) - len(w) // 2
    w = w / w.max()

    def sse(log_lam):
        return float(np.sum((w - np.exp(-np.pi * t**2 / math.exp(log_lam))) ** 2))

    lo, hi = math.log(1e-2), math.log(4.0 * len(w) ** 2)
    return math.exp(minimize_scalar(sse, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}).x)


def fit_gaussian_lambda(cfg: StftConfig) -> float:
    """Least-squares fit of ``exp(-pi t^2 / lam)`` to the analysis window (peak-normalized).

    For a Gaussian window the configured lambda is returned as-is. Hann
    ``N`` gives roughly ``0.258 N^2``.
    """
    if cfg.window == "gaussian":
        return float(cfg.gaussian_lambda)
    return _fit_lambda(tuple(window_samples(cfg)))


@dataclass(frozen=True)
class ConsistencyConfig:
    a: float
    K: float
    lam: float
    degenerate_epsilon: float = 1e-9

    def __post_init__(self):
        if not (self.a > 0 and self.K > 0 and self.lam > 0):
            raise ValueError("a, K and lam must be positive")
        if self.degenerate_epsilon < 0:
            raise ValueError("degenerate_epsilon must be nonnegative")

    @classmethod
    def for_stft(cls, cfg: StftConfig, lam: float | None = None, **kw) -> "ConsistencyConfig":
        return cls(a=cfg.hop, K=cfg.fft_size, lam=lam if lam is not None else fit_gaussian_lambda(cfg), **kw)

    @property
    def time_offset(self) -> float:
        return math.pi * self.a**2 / self.lam

    @property
    def freq_offset(self) -> float:
        return math.pi * self.lam / self.K**2


@dataclass(eq=False)
class ConsistencyReport:
    dm_time: np.ndarray
    dm_freq: np.ndarray
    rho: float
    degenerate: bool

    def to_json(self) -> dict:
        return {
            "rho": float(self.rho),
            "degenerate": bool(self.degenerate),
            "dm_time_mean": float(self.dm_time.mean()),
            "dm_freq_mean": float(self.dm_freq.mean()),
        }


def projection_residual(s: ComplexSpectrogram) -> float:
    """Relative distance of ``s`` from its projection ``stft(istft(s))``."""
    proj = stft(istft(s), s.config).values
    return float(np.linalg.norm(proj - s.values) / max(np.linalg.norm(s.values), 1e-12))


def _values_and_slope(M):
    if isinstance(M, MagnitudeSpectrogram):
        if M.scale == "linear":
            raise ValueError("consistency is measured on log or normalized magnitudes, not linear")
        return M.values, M.norm_slope
    return np.asarray(M, dtype=np.float64), 1.0


def _second_differences(L: np.ndarray):
    if L.ndim != 2 or L.shape[0] < 3 or L.shape[1] < 3:
        raise DimensionError(f"need at least 3 rows and 3 columns, got shape {L.shape}")
    d2n = L[1:-1, 2:] - 2.0 * L[1:-1, 1:-1] + L[1:-1, :-2]
    d2m = L[2:, 1:-1] - 2.0 * L[1:-1, 1:-1] + L[:-2, 1:-1]
    return d2n, d2m


def _signed_maps(M, cfg: ConsistencyConfig):
    L, slope = _values_and_slope(M)
    d2n, d2m = _second_differences(L)
    # normalization scales d2 by the slope; scale the offsets to match
    return d2n + slope * cfg.time_offset, d2m + slope * cfg.freq_offset


def dm_maps(M, cfg: ConsistencyConfig):
    """Interior ``(K-2) x (T-2)`` maps ``(DM_n, DM_m)``."""
    a, b = _signed_maps(M, cfg)
    return np.abs(a), np.abs(b)


def _is_constant(x: np.ndarray) -> bool:
    return float(np.ptp(x)) <= 1e-12 * max(1.0, float(np.max(np.abs(x))))


def pearson(x, y) -> float | None:
    """Sample Pearson correlation; ``None`` if either input has zero variance."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DimensionError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise DimensionError("need at least two samples")
    if _is_constant(x) or _is_constant(y):
        return None
    xc = x - x.mean()
    yc = y - y.mean()
    r = float(np.dot(xc, yc) / math.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))
    return min(1.0, max(-1.0, r))


def rho(M, cfg: ConsistencyConfig) -> ConsistencyReport:
    dm_n, dm_m = dm_maps(M, cfg)
    eps = cfg.degenerate_epsilon
    if dm_n.max() < eps and dm_m.max() < eps:
        # the discretized condition holds exactly
        return ConsistencyReport(dm_n, dm_m, 1.0, True)
    r = pearson(dm_n, dm_m)
    if r is None:
        return ConsistencyReport(dm_n, dm_m, 0.0, True)
    return ConsistencyReport(dm_n, dm_m, r, False)


def rho_value(M, cfg: ConsistencyConfig) -> float:
    return rho(M, cfg).rho


@dataclass(frozen=True)
class GammaReport:
    gamma: float
    mean_rho_real: float
    mean_rho_fake: float
    degenerate_real: int
    degenerate_fake: int


def _mean_rho(samples, cfg, label):
    if len(samples) == 0:
        raise ValueError(f"{label} set is empty")
    values, skipped = [], 0
    for m in samples:
        rep = rho(m, cfg)
        if rep.degenerate:
            skipped += 1
        else:
            values.append(rep.rho)
    if not values:
        raise DegenerateMeasureError(f"all {len(samples)} {label} samples are degenerate")
    return math.fsum(values) / len(values), skipped


def gamma_report(real_set, fake_set, cfg: ConsistencyConfig) -> GammaReport:
    real, dr = _mean_rho(real_set, cfg, "real")
    fake, df = _mean_rho(fake_set, cfg, "fake")
    return GammaReport(abs(real - fake), real, fake, dr, df)


def gamma(real_set, fake_set, cfg: ConsistencyConfig) -> float:
    """``|mean rho(real) - mean rho(fake)|`` over non-degenerate samples."""
    return gamma_report(real_set, fake_set, cfg).gamma


def gamma_cross(x1_set, x1_translated_set, x2_set, x2_translated_set, cfg: ConsistencyConfig) -> float:
    """Two-domain critic: ``gamma(x2, x1->2) + gamma(x1, x2->1)``."""
    return gamma(x2_set, x1_translated_set, cfg) + gamma(x1_set, x2_translated_set, cfg)


def _stencil_adjoint(g_time: np.ndarray, g_freq: np.ndarray, shape) -> np.ndarray:
    out = np.zeros(shape)
    out[1:-1, 2:] += g_time
    out[1:-1, 1:-1] -= 2.0 * g_time
    out[1:-1, :-2] += g_time
    out[2:, 1:-1] += g_freq
    out[1:-1, 1:-1] -= 2.0 * g_freq
    out[:-2, 1:-1] += g_freq
    return out


def rho_and_gradient(M, cfg: ConsistencyConfig):
    """``(report, d rho / d M)``; the gradient is zero when rho is degenerate.

    The absolute value contributes ``sign(.)``, i.e. a zero subgradient at kinks.
    """
    L, _ = _values_and_slope(M)
    a, b = _signed_maps(M, cfg)
    report = rho(M, cfg)
    if report.degenerate:
        return report, np.zeros_like(L)
    x, y = np.abs(a), np.abs(b)
    xc, yc = x - x.mean(), y - y.mean()
    sxx, syy = float(np.dot(xc.ravel(), xc.ravel())), float(np.dot(yc.ravel(), yc.ravel()))
    norm = math.sqrt(sxx * syy)
    r = float(np.dot(xc.ravel(), yc.ravel())) / norm
    gx = yc / norm - r * xc / sxx
    gy = xc / norm - r * yc / syy
    return report, _stencil_adjoint(gx * np.sign(a), gy * np.sign(b), L.shape)


def rho_gradient(M, cfg: ConsistencyConfig) -> np.ndarray:
    return rho_and_gradient(M, cfg)[1]
