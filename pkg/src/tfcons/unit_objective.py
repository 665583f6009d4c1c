"""UNIT-style loss terms (VAE, LS-GAN, cycle) plus the weighted consistency term.

All terms are nonnegative penalties to minimize: the log-likelihood terms are
implemented as negative log-likelihoods with constants dropped.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError

CONVENTIONS = ("verbatim", "standard")


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 0.01   # VAE KL
    lambda2: float = 10.0   # VAE reconstruction
    lambda3: float = 0.01   # cycle KL
    lambda4: float = 10.0   # cycle reconstruction
    lambda_c: float = 3e-4  # consistency critic
    lambda_c_decay: float = 0.9
    lambda_c_interval: int = 10_000

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4", "lambda_c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not 0 < self.lambda_c_decay <= 1:
            raise ValueError("lambda_c_decay must lie in (0, 1]")
        if self.lambda_c_interval < 1:
            raise ValueError("lambda_c_interval must be a positive integer")


@dataclass(eq=False)
class BatchOutputs:
    """What one domain's encoder/decoder/discriminator produced for a batch.

    ``disc_fake_scores`` are the discriminator's scores on samples translated
    *into* this domain from the other one.
    """

    latent_means: np.ndarray
    reconstructions: np.ndarray
    originals: np.ndarray
    disc_real_scores: np.ndarray
    disc_fake_scores: np.ndarray
    cycle_latent_means: np.ndarray
    cycle_reconstructions: np.ndarray

    def __post_init__(self):
        for name in ("latent_means", "reconstructions", "originals", "disc_real_scores",
                     "disc_fake_scores", "cycle_latent_means", "cycle_reconstructions"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.reconstructions.shape != self.originals.shape:
            raise DimensionError("reconstructions and originals differ in shape")
        if self.cycle_reconstructions.shape != self.originals.shape:
            raise DimensionError("cycle_reconstructions and originals differ in shape")


def kl_unit_gaussian(means) -> float:
    """Mean over rows of KL(N(mu, I) || N(0, I)) = |mu|^2 / 2."""
    mu = np.atleast_2d(np.asarray(means, dtype=np.float64))
    return float(0.5 * np.mean(np.sum(mu * mu, axis=1)))


def laplacian_recon_loss(x, x_hat) -> float:
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {x_hat.shape}")
    return float(np.mean(np.abs(x - x_hat)))


def _scores(s, label):
    s = np.asarray(s, dtype=np.float64).ravel()
    if s.size == 0:
        raise ValueError(f"{label} scores are empty")
    return s


def lsgan_loss(disc_real_scores, disc_fake_scores, convention: str = "verbatim") -> float:
    """Discriminator-side LS-GAN loss.

    ``verbatim``: 0.5 (E[D(x)^2] + E[(1 - D(G(z)))^2]) -- real scored toward 0,
    fake toward 1. ``standard``: 0.5 (E[(D(x) - 1)^2] + E[D(G(z))^2]).
    """
    real = _scores(disc_real_scores, "real")
    fake = _scores(disc_fake_scores, "fake")
    if convention == "verbatim":
        return float(0.5 * (np.mean(real**2) + np.mean((1.0 - fake) ** 2)))
    if convention == "standard":
        return float(0.5 * (np.mean((real - 1.0) ** 2) + np.mean(fake**2)))
    raise ValueError(f"convention must be one of {CONVENTIONS}")


def lsgan_generator_loss(disc_fake_scores, convention: str = "verbatim") -> float:
    fake = _scores(disc_fake_scores, "fake")
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    # both conventions reduce to the same expression on the generator side
    return float(np.mean((1.0 - fake) ** 2))


def vae_loss(b: BatchOutputs, w: LossWeights) -> float:
    return w.lambda1 * kl_unit_gaussian(b.latent_means) + w.lambda2 * laplacian_recon_loss(b.originals, b.reconstructions)


def cycle_loss(latent_means, cycle_latent_means, x, x_cycle_hat, w: LossWeights) -> float:
    """lambda3 (KL(q(z|x)) + KL(q(z|x_translated))) + lambda4 * L1(x, x_cycle_hat)."""
    kl = kl_unit_gaussian(latent_means) + kl_unit_gaussian(cycle_latent_means)
    return w.lambda3 * kl + w.lambda4 * laplacian_recon_loss(x, x_cycle_hat)


def lambda_c_at(iteration: int, w: LossWeights) -> float:
    if iteration < 0:
        raise ValueError("iteration must be nonnegative")
    return w.lambda_c * w.lambda_c_decay ** (iteration // w.lambda_c_interval)


@dataclass(frozen=True)
class ObjectiveBreakdown:
    vae_1: float
    vae_2: float
    gan_1: float
    gan_2: float
    cycle_1: float
    cycle_2: float
    consistency: float
    total: float

    def to_json(self) -> dict:
        return asdict(self)


def total_objective(domain1: BatchOutputs, domain2: BatchOutputs, gamma_value: float, w: LossWeights,
                    iteration: int | None = None, convention: str = "verbatim") -> ObjectiveBreakdown:
    """Sum of both VAE, both GAN and both cycle terms plus ``lambda_c * gamma``.

    ``gan_i`` uses domain ``i``'s discriminator scores on its real samples and
    on samples translated into domain ``i``. If ``iteration`` is given the
    decayed ``lambda_c`` is used.
    """
    lam_c = w.lambda_c if iteration is None else lambda_c_at(iteration, w)
    terms = {
        "vae_1": vae_loss(domain1, w),
        "vae_2": vae_loss(domain2, w),
        "gan_1": lsgan_loss(domain1.disc_real_scores, domain1.disc_fake_scores, convention),
        "gan_2": lsgan_loss(domain2.disc_real_scores, domain2.disc_fake_scores, convention),
        "cycle_1": cycle_loss(domain1.latent_means, domain1.cycle_latent_means, domain1.originals,
                              domain1.cycle_reconstructions, w),
        "cycle_2": cycle_loss(domain2.latent_means, domain2.cycle_latent_means, domain2.originals,
                              domain2.cycle_reconstructions, w),
        "consistency": lam_c * float(gamma_value),
    }
    return ObjectiveBreakdown(**terms, total=math.fsum(terms.values()))
