import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactsv.ggc import (Constant, DirichletMeanSpec, KernelKind, ScaledBeta,
                         dirichlet_mean_moments, sample_y)
from exactsv.rng import RandomStream
from exactsv.truncation import (MACHINE_EPSILON, FixedN, StoppingBounded,
                                StoppingMean, l1_error_bound, sample_coupled,
                                sample_joint_pair, sample_truncated,
                                sample_truncated_batch,
                                sample_truncated_generic)

from conftest import zscore


def test_rule_validation():
    with pytest.raises(ValueError):
        FixedN(0)
    with pytest.raises(ValueError):
        StoppingBounded(0.0)
    with pytest.raises(ValueError):
        StoppingMean(-1.0)


def test_l1_bound_values(table_spec):
    spec = table_spec(1.0)
    assert l1_error_bound(spec, 10) == pytest.approx(0.18394 * 0.5 ** 11, rel=1e-4)
    assert l1_error_bound(spec, 0) == pytest.approx(0.09197, rel=1e-4)
    with pytest.raises(ValueError):
        l1_error_bound(spec, -1)


@given(delta=st.floats(min_value=0.05, max_value=20.0),
       n=st.integers(min_value=0, max_value=200))
def test_l1_bound_monotone(delta, n):
    spec = DirichletMeanSpec(delta, KernelKind.UNIT, 1.0, 1.0, ScaledBeta(1, 1, 1))
    assert l1_error_bound(spec, n + 1) < l1_error_bound(spec, n)


def test_fixed_n_counts(table_spec):
    b = sample_truncated_batch(table_spec(2.0), FixedN(17), 1000, RandomStream(1))
    assert np.all(b.n_used == 17)


@pytest.mark.parametrize("delta", [0.1, 1.0, 10.0])
def test_stopping_count_matches_log_formula(table_spec, delta):
    # residual after n sticks is exp(-E_n / delta) with E_n ~ Gamma(n), so
    # the stopping count is one plus a Poisson(delta log(c / eps)) variable
    spec = table_spec(delta)
    b = sample_truncated_batch(spec, StoppingBounded(), 100_000, RandomStream(2))
    expected = 1.0 + delta * math.log(spec.y_bound / MACHINE_EPSILON)
    assert abs(zscore(b.n_used, expected)) < 4.5


def test_stopping_mean_uses_fewer_sticks(table_spec):
    spec = table_spec(1.0)
    a = sample_truncated_batch(spec, StoppingBounded(), 20_000, RandomStream(3))
    b = sample_truncated_batch(spec, StoppingMean(), 20_000, RandomStream(3))
    assert b.n_used.mean() < a.n_used.mean()


@pytest.mark.parametrize("rule", [FixedN(100), StoppingBounded(), StoppingMean()])
def test_truncated_moments(table_spec, rule):
    spec = table_spec(0.8)
    b = sample_truncated_batch(spec, rule, 100_000, RandomStream(4))
    m, v = dirichlet_mean_moments(spec)
    assert abs(zscore(b.values, m)) < 4.5
    d = b.values - b.values.mean()
    assert abs(zscore(d * d, v)) < 4.5


def test_generic_matches_kernel_in_mean(table_spec):
    spec = table_spec(1.0)
    s = RandomStream(5)
    vals = [sample_truncated_generic(lambda st: sample_y(spec, st), 1.0,
                                     FixedN(30), s)[0] for _ in range(20_000)]
    assert abs(zscore(vals, dirichlet_mean_moments(spec)[0])) < 4.5
    with pytest.raises(ValueError):
        sample_truncated_generic(lambda st: 1.0, 1.0, StoppingBounded(), s)


def test_single_draw_advances_stream(table_spec):
    s = RandomStream(6)
    val, n = sample_truncated(table_spec(1.0), FixedN(5), s)
    assert n == 5 and s.counter > 0 and 0 <= val <= 1


@pytest.mark.parametrize("delta,n", [(0.5, 1), (1.0, 5), (5.0, 10)])
def test_coupled_error_below_bound(table_spec, delta, n):
    spec = table_spec(delta)
    ex, tr = sample_coupled(spec, n, 20_000, RandomStream(7))
    err = np.abs(ex - tr)
    assert err.mean() <= l1_error_bound(spec, n) + 4 * err.std() / math.sqrt(err.size)
    m, _ = dirichlet_mean_moments(spec)
    assert abs(zscore(ex, m)) < 4.5


def test_joint_pair_consistency():
    s = RandomStream(8)
    lam, h, delta = 1.5, 1.0, 0.7
    draws = np.array([sample_joint_pair(delta, lam, h, Constant(0.3), s)
                      for _ in range(40_000)])
    o1, o2, g = draws.T
    assert np.all(o2 <= o1 + 1e-15) and np.all(o2 >= 0)
    np.testing.assert_allclose(o1, 0.3 * g, rtol=1e-12)
    # E[o2] = c E[gamma] E[exp(-lam U h)]
    expected = 0.3 * delta * -math.expm1(-lam * h) / (lam * h)
    assert abs(zscore(o2, expected)) < 4.5
    with pytest.raises(ValueError):
        sample_joint_pair(delta, lam, h, Constant(0.3), s, StoppingMean())
