import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tfcons import synth
from tfcons.consistency import (ConsistencyConfig, dm_maps, fit_gaussian_lambda, gamma, gamma_cross,
                                gamma_report, pearson, projection_residual, rho, rho_and_gradient,
                                rho_gradient, rho_value)
from tfcons.errors import DegenerateMeasureError, DimensionError
from tfcons.spec_pipeline import MagnitudeSpectrogram, magnitude, normalize, to_log
from tfcons.tf_transform import ComplexSpectrogram, StftConfig, stft

CFG = ConsistencyConfig(a=4.0, K=16.0, lam=48.0)


def dm_oracle(M, cfg):
    rows, cols = M.shape
    dn = np.zeros((rows - 2, cols - 2))
    dm = np.zeros((rows - 2, cols - 2))
    for m in range(1, rows - 1):
        for n in range(1, cols - 1):
            dn[m - 1, n - 1] = abs(M[m, n + 1] - 2 * M[m, n] + M[m, n - 1] + math.pi * cfg.a**2 / cfg.lam)
            dm[m - 1, n - 1] = abs(M[m + 1, n] - 2 * M[m, n] + M[m - 1, n] + math.pi * cfg.lam / cfg.K**2)
    return dn, dm


def pearson_oracle(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    return cov / math.sqrt(vx * vy)


def exact_surface(rows, cols, cfg):
    m, n = np.mgrid[0:rows, 0:cols].astype(float)
    return -(math.pi * cfg.a**2 / (2 * cfg.lam)) * n**2 - (math.pi * cfg.lam / (2 * cfg.K**2)) * m**2


def log_mag(w, cfg):
    return to_log(magnitude(stft(w, cfg)))


def test_config_validation():
    with pytest.raises(ValueError):
        ConsistencyConfig(a=0, K=4, lam=1)
    with pytest.raises(ValueError):
        ConsistencyConfig(a=1, K=4, lam=1, degenerate_epsilon=-1)


def test_lambda_fit_for_hann_512():
    lam = fit_gaussian_lambda(StftConfig())
    assert 0.25 * 512**2 < lam < 0.27 * 512**2
    assert fit_gaussian_lambda(StftConfig(window="gaussian", gaussian_lambda=1234.0)) == 1234.0


def test_projection_residual():
    cfg = StftConfig()
    w = synth.speech_like(0, 0.5)
    assert projection_residual(stft(w, cfg)) < 1e-6
    zero = ComplexSpectrogram(np.zeros((257, 63), complex), cfg, 8000)
    assert projection_residual(zero) == 0.0
    rng = np.random.default_rng(5)
    noise = rng.standard_normal((257, 63)) + 1j * rng.standard_normal((257, 63))
    assert projection_residual(ComplexSpectrogram(noise, cfg, 8000)) > 0.1


def test_dm_maps_constant():
    dn, dm = dm_maps(np.full((6, 7), 3.0), CFG)
    assert dn.shape == (4, 5)
    np.testing.assert_allclose(dn, math.pi * 16 / 48)
    np.testing.assert_allclose(dm, math.pi * 48 / 256)


def test_dm_maps_exact_solution():
    dn, dm = dm_maps(exact_surface(9, 11, CFG), CFG)
    assert np.abs(dn).max() < 1e-12 and np.abs(dm).max() < 1e-12
    report = rho(exact_surface(9, 11, CFG), CFG)
    assert report.rho == 1.0 and report.degenerate


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 7), st.integers(3, 7)), elements=st.floats(-50, 50)))
def test_dm_maps_match_triple_loop(M):
    dn, dm = dm_maps(M, CFG)
    on, om = dm_oracle(M, CFG)
    np.testing.assert_allclose(dn, on, atol=1e-12)
    np.testing.assert_allclose(dm, om, atol=1e-12)
    assert (dn >= 0).all() and (dm >= 0).all()


def test_dm_maps_too_small():
    with pytest.raises(DimensionError):
        dm_maps(np.zeros((2, 5)), CFG)
    with pytest.raises(DimensionError):
        dm_maps(np.zeros((5, 2)), CFG)


def test_linear_scale_rejected():
    with pytest.raises(ValueError):
        rho(MagnitudeSpectrogram(np.ones((4, 4)), "linear"), CFG)


def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0)
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-15)
    assert pearson([1, 1, 1], [1, 2, 3]) is None
    with pytest.raises(DimensionError):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(DimensionError):
        pearson([1], [1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=3, max_size=30))
def test_pearson_against_oracle(pairs):
    x, y = zip(*pairs)
    r = pearson(x, y)
    if r is None:
        return
    assert -1.0 <= r <= 1.0
    vx = sum((a - sum(x) / len(x)) ** 2 for a in x)
    vy = sum((b - sum(y) / len(y)) ** 2 for b in y)
    if vx > 1e-6 and vy > 1e-6:
        assert r == pytest.approx(pearson_oracle(x, y), abs=1e-9)


def test_rho_one_map_constant_is_degenerate():
    # exact curvature along time, random rows along frequency: DM_n vanishes, DM_m does not
    _, n = np.mgrid[0:8, 0:8].astype(float)
    M = -(math.pi * CFG.a**2 / (2 * CFG.lam)) * n**2 + np.random.default_rng(0).standard_normal((8, 1))
    report = rho(M, CFG)
    assert report.degenerate and report.rho == 0.0


def test_rho_on_normalized_matches_log():
    cfg = StftConfig()
    ccfg = ConsistencyConfig.for_stft(cfg)
    L = log_mag(synth.speech_like(2, 0.5), cfg)
    assert rho_value(normalize(L), ccfg) == pytest.approx(rho_value(L, ccfg), abs=1e-9)


def test_rho_beats_permutation():
    cfg = StftConfig()
    ccfg = ConsistencyConfig.for_stft(cfg)
    rng = np.random.default_rng(11)
    for trial in range(100):
        w = synth.speech_like(trial, 0.25) if trial % 2 == 0 else synth.chirp_mix(trial, 0.25)
        L = log_mag(w, cfg).values
        shuffled = rng.permutation(L.ravel()).reshape(L.shape)
        assert rho_value(L, ccfg) > rho_value(shuffled, ccfg)


def test_gamma_examples_and_properties(rng):
    sets = [[rng.standard_normal((6, 6)) * s for _ in range(4)] for s in (0.1, 1.0, 3.0)]
    a, b, c = sets
    assert gamma(a, a, CFG) == 0.0
    assert gamma(a, b, CFG) == gamma(b, a, CFG)
    assert gamma(a, c, CFG) <= gamma(a, b, CFG) + gamma(b, c, CFG) + 1e-15
    brute = abs(sum(rho_value(m, CFG) for m in a) / 4 - sum(rho_value(m, CFG) for m in b) / 4)
    assert gamma(a, b, CFG) == pytest.approx(brute, abs=1e-12)


def test_gamma_report_means(rng):
    real = [rng.standard_normal((6, 6)) for _ in range(3)]
    fake = [rng.standard_normal((6, 6)) * 5 for _ in range(2)]
    rep = gamma_report(real, fake, CFG)
    assert rep.mean_rho_real == pytest.approx(np.mean([rho_value(m, CFG) for m in real]), abs=1e-15)
    assert rep.gamma == pytest.approx(abs(rep.mean_rho_real - rep.mean_rho_fake), abs=1e-15)


def test_gamma_excludes_degenerate(rng):
    real = [rng.standard_normal((6, 6)), np.full((6, 6), 1.0)]
    rep = gamma_report(real, real[:1], CFG)
    assert rep.degenerate_real == 1 and rep.gamma == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DegenerateMeasureError):
        gamma([np.zeros((5, 5))], real, CFG)
    with pytest.raises(ValueError):
        gamma([], real, CFG)


def test_gamma_cross_composes(rng):
    x1, x12, x2, x21 = ([rng.standard_normal((6, 7)) * (k + 1) for _ in range(3)] for k in range(4))
    x1, x12, x2, x21 = list(x1), list(x12), list(x2), list(x21)
    assert gamma_cross(x1, x12, x2, x21, CFG) == gamma(x2, x12, CFG) + gamma(x1, x21, CFG)
    # translations that land exactly on the target sets cost nothing
    assert gamma_cross(x1, x2, x2, x1, CFG) == 0.0


def fd_gradient(M, cfg, h=1e-5):
    g = np.zeros_like(M)
    for idx in np.ndindex(M.shape):
        up, dn = M.copy(), M.copy()
        up[idx] += h
        dn[idx] -= h
        g[idx] = (rho_value(up, cfg) - rho_value(dn, cfg)) / (2 * h)
    return g


def min_kink_distance(M, cfg):
    from tfcons.consistency import _signed_maps
    a, b = _signed_maps(M, cfg)
    return min(np.abs(a).min(), np.abs(b).min())


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(20):
        M = rng.standard_normal((8, 8))
        if min_kink_distance(M, CFG) < 1e-3:
            continue
        g = rho_gradient(M, CFG)
        ref = fd_gradient(M, CFG)
        assert np.max(np.abs(g - ref)) / np.max(np.abs(ref)) < 1e-4
        checked += 1
    assert checked >= 5


def test_gradient_degenerate_and_support():
    report, g = rho_and_gradient(np.full((6, 6), 2.0), CFG)
    assert report.degenerate and not g.any()
    g = rho_gradient(np.random.default_rng(3).standard_normal((7, 9)), CFG)
    for corner in [(0, 0), (0, -1), (-1, 0), (-1, -1)]:
        assert g[corner] == 0.0
