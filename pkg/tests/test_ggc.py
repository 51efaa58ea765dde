import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from exactsv.ggc import (Constant, DirichletMeanSpec, GgcExampleSpec,
                         KernelKind, ScaledBeta, bfry_cdf, bfry_pdf,
                         compose_dirichlet_mean, decompose_delta,
                         dirichlet_mean_moments, empirical_acceptance_rate,
                         hill_estimator, sample_bfry, sample_y,
                         tilted_acceptance_rate, tilted_bfry_cdf,
                         tilted_bfry_pdf, y_moments)
from exactsv.rng import RandomStream

from conftest import zscore


def test_table_y_moments(table_spec):
    m1, m2 = y_moments(table_spec(1.0))
    assert m1 == pytest.approx(math.exp(-1) / 2, rel=1e-14)
    var = m2 - m1 ** 2
    assert var == pytest.approx(2 / 3 * math.exp(-1) - math.exp(-2) / 6 - 1 / 6 + 0.0, abs=0.05)
    assert var == pytest.approx(0.022196, abs=5e-6)


def test_dirichlet_variance_scales(table_spec):
    _, v1 = dirichlet_mean_moments(table_spec(1.0))
    _, v2 = dirichlet_mean_moments(table_spec(2.0))
    assert v1 == pytest.approx(0.01110, abs=5e-6)
    assert v2 == pytest.approx(0.00740, abs=5e-6)


@pytest.mark.parametrize("kernel", list(KernelKind))
@pytest.mark.parametrize("scale", [Constant(0.7), ScaledBeta(2.0, 0.5, 3.0)])
def test_y_moments_match_samples(kernel, scale):
    spec = DirichletMeanSpec(0.5, kernel, 1.3, 0.8, scale)
    y = sample_y(spec, RandomStream(21), size=200_000)
    m1, m2 = y_moments(spec)
    if spec.is_degenerate:
        assert np.all(y == m1) and m2 == m1 * m1
        return
    assert abs(zscore(y, m1)) < 4.5
    assert abs(zscore(y * y, m2)) < 4.5
    assert y.max() <= spec.y_bound


def test_small_rate_series_is_continuous():
    a = DirichletMeanSpec(1.0, KernelKind.ONE_MINUS_DECAY, 1e-3 * (1 - 1e-9), 1.0, Constant(1.0))
    b = DirichletMeanSpec(1.0, KernelKind.ONE_MINUS_DECAY, 1e-3 * (1 + 1e-9), 1.0, Constant(1.0))
    for x, y in zip(y_moments(a), y_moments(b)):
        assert x == pytest.approx(y, rel=1e-8)


def test_mixture_moments_match_samples():
    spec = DirichletMeanSpec(1.0, KernelKind.ONE_MINUS_DECAY, 2.3, 1.0,
                             Constant(0.5), ((2.0, 0.8), (0.3, 0.2)))
    y = sample_y(spec, RandomStream(22), size=200_000)
    m1, m2 = y_moments(spec)
    assert abs(zscore(y, m1)) < 4.5
    assert abs(zscore(y * y, m2)) < 4.5


@given(st.floats(min_value=1e-3, max_value=50.0))
def test_decompose_delta(delta):
    blocks = decompose_delta(delta)
    assert math.fsum(blocks) == pytest.approx(delta, rel=1e-12)
    assert all(0.0 < b <= 1.0 for b in blocks)
    assert len(blocks) == max(1, math.ceil(delta))


def test_compose_single_block_is_identity():
    assert compose_dirichlet_mean([(0.4, 0.123)], RandomStream(0)) == 0.123


def test_compose_is_convex_combination():
    val = compose_dirichlet_mean([(0.5, 0.1), (0.5, 0.9), (0.5, 0.4)], RandomStream(3))
    assert 0.1 <= val <= 0.9


def test_spec_validation():
    with pytest.raises(ValueError):
        DirichletMeanSpec(0.0, KernelKind.UNIT, 1.0, 1.0, Constant(1.0))
    with pytest.raises(ValueError):
        DirichletMeanSpec(1.0, KernelKind.DECAY, 1.0, 1.0, Constant(1.0), ((1.0, 1.0),))
    with pytest.raises(ValueError):
        Constant(0.0)
    with pytest.raises(ValueError):
        GgcExampleSpec(1.0)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_bfry_density_integrates_to_cdf(alpha):
    for x in (0.1, 1.0, 7.0):
        val, _ = integrate.quad(bfry_pdf, 0.0, x, args=(alpha,), limit=200)
        assert val == pytest.approx(float(bfry_cdf(x, alpha)), abs=1e-7)


@pytest.mark.parametrize("alpha,c", [(0.5, 1.0), (0.3, 0.2), (0.8, 4.0)])
def test_tilted_density_integrates_to_cdf(alpha, c):
    total, _ = integrate.quad(tilted_bfry_pdf, 0.0, np.inf, args=(alpha, c), limit=200)
    assert total == pytest.approx(1.0, abs=1e-7)
    for x in (0.2, 2.0):
        val, _ = integrate.quad(tilted_bfry_pdf, 0.0, x, args=(alpha, c), limit=200)
        assert val == pytest.approx(float(tilted_bfry_cdf(x, alpha, c)), abs=1e-7)


def test_tilted_acceptance_rate():
    rate = tilted_acceptance_rate(0.5, 1.0)
    emp = empirical_acceptance_rate(0.5, 1.0, RandomStream(8), 400_000)
    assert emp == pytest.approx(rate, abs=4 * math.sqrt(rate * (1 - rate) / 4e5))


def test_bfry_tail_index():
    x = sample_bfry(0.5, RandomStream(9), size=400_000)
    assert hill_estimator(x, 2000) == pytest.approx(0.5, abs=0.05)
