import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tfcons.errors import DimensionError
from tfcons.unit_objective import (BatchOutputs, LossWeights, cycle_loss, kl_unit_gaussian, lambda_c_at,
                                   laplacian_recon_loss, lsgan_generator_loss, lsgan_loss, total_objective,
                                   vae_loss)


def kl_quadrature(mu, half_width=10.0, n=801):
    """KL(N(mu, I) || N(0, I)) in 2-D by trapezoidal integration of q log(q/p)."""
    g = np.linspace(-half_width, half_width, n)
    x, y = np.meshgrid(g, g, indexing="ij")
    log_q = -0.5 * ((x - mu[0]) ** 2 + (y - mu[1]) ** 2) - math.log(2 * math.pi)
    log_p = -0.5 * (x**2 + y**2) - math.log(2 * math.pi)
    integrand = np.exp(log_q) * (log_q - log_p)
    return float(np.trapezoid(np.trapezoid(integrand, g, axis=1), g))


def batch(rng, n=4, d=3, shape=(4, 5, 5)):
    return BatchOutputs(
        latent_means=rng.standard_normal((n, d)),
        reconstructions=rng.standard_normal(shape),
        originals=rng.standard_normal(shape),
        disc_real_scores=rng.uniform(0, 1, n),
        disc_fake_scores=rng.uniform(0, 1, n),
        cycle_latent_means=rng.standard_normal((n, d)),
        cycle_reconstructions=rng.standard_normal(shape),
    )


def ideal_batch(n=3, d=2, shape=(3, 4)):
    x = np.linspace(-1, 1, n * shape[1]).reshape(shape)
    return BatchOutputs(np.zeros((n, d)), x, x, np.zeros(n), np.ones(n), np.zeros((n, d)), x)


def test_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(lambda1=-1)
    with pytest.raises(ValueError):
        LossWeights(lambda_c=float("nan"))
    with pytest.raises(ValueError):
        LossWeights(lambda_c_decay=0)
    with pytest.raises(ValueError):
        LossWeights(lambda_c_interval=0)


def test_batch_shape_checks(rng):
    b = batch(rng)
    with pytest.raises(DimensionError):
        BatchOutputs(b.latent_means, b.reconstructions[:2], b.originals, b.disc_real_scores,
                     b.disc_fake_scores, b.cycle_latent_means, b.cycle_reconstructions)


def test_kl_examples():
    assert kl_unit_gaussian(np.zeros((3, 4))) == 0.0
    assert kl_unit_gaussian([[1.0, 1.0]]) == 1.0


def test_kl_against_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(3):
        mu = rng.uniform(-2, 2, 2)
        assert kl_unit_gaussian([mu]) == pytest.approx(kl_quadrature(mu), abs=1e-3)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.floats(-100, 100)))
def test_kl_quadratic_scaling(mu):
    assert kl_unit_gaussian(2 * mu) == pytest.approx(4 * kl_unit_gaussian(mu), rel=1e-12, abs=1e-300)
    assert kl_unit_gaussian(mu) >= 0


def test_laplacian_examples(rng):
    assert laplacian_recon_loss([0.0, 0.0], [1.0, 3.0]) == 2.0
    x = rng.standard_normal((3, 4))
    assert laplacian_recon_loss(x, x) == 0.0
    y = rng.standard_normal((3, 4))
    assert laplacian_recon_loss(x, y) == pytest.approx(
        sum(abs(a - b) for a, b in zip(x.ravel(), y.ravel())) / 12, abs=1e-15)
    with pytest.raises(DimensionError):
        laplacian_recon_loss(x, y.T)


def test_lsgan_examples(rng):
    assert lsgan_loss([0.0, 0.0], [1.0, 1.0]) == 0.0
    assert lsgan_loss([1.0], [0.0]) == 1.0
    assert lsgan_loss([1.0], [0.0], "standard") == 0.0
    real, fake = rng.uniform(-1, 2, 7), rng.uniform(-1, 2, 5)
    direct = 0.5 * (sum(r * r for r in real) / 7 + sum((1 - f) ** 2 for f in fake) / 5)
    assert lsgan_loss(real, fake) == pytest.approx(direct, abs=1e-12)
    standard = 0.5 * (sum((r - 1) ** 2 for r in real) / 7 + sum(f * f for f in fake) / 5)
    assert lsgan_loss(real, fake, "standard") == pytest.approx(standard, abs=1e-12)
    for conv in ("verbatim", "standard"):
        assert lsgan_generator_loss(fake, conv) == pytest.approx(sum((f - 1) ** 2 for f in fake) / 5, abs=1e-12)


def test_lsgan_errors():
    with pytest.raises(ValueError):
        lsgan_loss([], [1.0])
    with pytest.raises(ValueError):
        lsgan_generator_loss([])
    with pytest.raises(ValueError):
        lsgan_loss([1.0], [1.0], "wgan")


def test_cycle_loss(rng):
    w = LossWeights()
    x = rng.standard_normal((2, 6))
    z = np.zeros((2, 3))
    assert cycle_loss(z, z, x, x, w) == 0.0
    y = rng.standard_normal((2, 6))
    mu, cmu = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))
    l1_only = LossWeights(lambda3=0.0, lambda4=1.0)
    assert cycle_loss(mu, cmu, x, y, l1_only) == laplacian_recon_loss(x, y)
    composed = w.lambda3 * (kl_unit_gaussian(mu) + kl_unit_gaussian(cmu)) + w.lambda4 * laplacian_recon_loss(x, y)
    assert cycle_loss(mu, cmu, x, y, w) == pytest.approx(composed, abs=1e-12)
    with pytest.raises(DimensionError):
        cycle_loss(mu, cmu, x, y[:1], w)


def test_lambda_c_schedule():
    w = LossWeights()
    assert lambda_c_at(0, w) == 3e-4
    assert lambda_c_at(10_000, w) == pytest.approx(2.7e-4, rel=1e-12)
    assert lambda_c_at(25_000, w) == pytest.approx(2.43e-4, rel=1e-12)
    with pytest.raises(ValueError):
        lambda_c_at(-1, w)


@given(st.integers(0, 10**7), st.integers(0, 10**7))
def test_lambda_c_non_increasing(i, j):
    w = LossWeights()
    lo, hi = sorted((i, j))
    assert lambda_c_at(hi, w) <= lambda_c_at(lo, w)


def test_total_objective_ideal_is_zero():
    out = total_objective(ideal_batch(), ideal_batch(), 0.0, LossWeights())
    assert out.total == 0.0


def test_total_objective_is_additive(rng):
    w = LossWeights()
    d1, d2 = batch(rng), batch(rng)
    out = total_objective(d1, d2, 0.37, w)
    expected = (vae_loss(d1, w) + vae_loss(d2, w) + lsgan_loss(d1.disc_real_scores, d1.disc_fake_scores)
                + lsgan_loss(d2.disc_real_scores, d2.disc_fake_scores)
                + cycle_loss(d1.latent_means, d1.cycle_latent_means, d1.originals, d1.cycle_reconstructions, w)
                + cycle_loss(d2.latent_means, d2.cycle_latent_means, d2.originals, d2.cycle_reconstructions, w)
                + 3e-4 * 0.37)
    assert out.total == pytest.approx(expected, abs=1e-12)
    parts = out.to_json()
    assert math.fsum(v for k, v in parts.items() if k != "total") == out.total
    assert all(v >= 0 for v in parts.values())


def test_lambda_c_zero_is_baseline(rng):
    d1, d2 = batch(rng), batch(rng)
    base = total_objective(d1, d2, 0.0, LossWeights())
    off = total_objective(d1, d2, 0.9, LossWeights(lambda_c=0.0))
    assert off.total == base.total and off.consistency == 0.0


def test_total_objective_uses_decayed_weight(rng):
    d1, d2 = batch(rng), batch(rng)
    out = total_objective(d1, d2, 1.0, LossWeights(), iteration=20_000)
    assert out.consistency == pytest.approx(3e-4 * 0.81)
