"""Frechet distance between Gaussian fits of two feature sets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-8


@dataclass(eq=False)
class GaussianStats:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        self.covariance = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        d = self.mean.shape[0]
        if self.covariance.shape != (d, d):
            raise DimensionError(f"covariance shape {self.covariance.shape} does not match mean length {d}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_gaussian(features) -> GaussianStats:
    """Sample mean and unbiased (n - 1) covariance of row vectors."""
    try:
        x = np.asarray(features, dtype=np.float64)
    except ValueError as exc:
        raise DimensionError("feature vectors have unequal lengths") from exc
    if x.ndim != 2:
        raise DimensionError(f"features must be a 2-D array of row vectors, got shape {x.shape}")
    if x.shape[0] < 2:
        raise ValueError("need at least two feature vectors")
    return GaussianStats(x.mean(axis=0), np.cov(x, rowvar=False, ddof=1).reshape(x.shape[1], x.shape[1]))


def matrix_sqrt_psd(a) -> np.ndarray:
    """Symmetric square root via eigendecomposition; small negative eigenvalues clamp to 0."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(g1: GaussianStats, g2: GaussianStats) -> float:
    """|mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2)."""
    if g1.dim != g2.dim:
        raise DimensionError(f"dimension mismatch {g1.dim} vs {g2.dim}")
    diff = g1.mean - g2.mean
    root1 = matrix_sqrt_psd(g1.covariance)
    middle = root1 @ g2.covariance @ root1
    cross = matrix_sqrt_psd(0.5 * (middle + middle.T))
    value = float(diff @ diff + np.trace(g1.covariance) + np.trace(g2.covariance) - 2.0 * np.trace(cross))
    if -1e-6 < value < 0:
        value = 0.0
    return value


def read_features_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if rows and len({len(r) for r in rows}) != 1:
        raise DimensionError(f"{path}: rows have unequal lengths")
    return np.array(rows, dtype=np.float64)
