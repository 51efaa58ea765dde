import math

import numpy as np
import pytest
from scipy import stats

from exactsv.cftp import (CftpConfig, CftpStats, sample_exact,
                          sample_exact_batch, sample_exact_composite)
from exactsv.errors import DegenerateYError, InvalidDeltaError
from exactsv.ggc import (Constant, DirichletMeanSpec, KernelKind, ScaledBeta,
                         dirichlet_mean_moments)
from exactsv.rng import RandomStream
from exactsv.truncation import FixedN, sample_truncated_batch

from conftest import zscore


def test_config_constants(table_spec):
    cfg = CftpConfig.from_spec(table_spec(0.4))
    assert cfg.c_h == 0.4
    assert cfg.c_y == pytest.approx(1.0 - math.exp(-1.0))
    with pytest.raises(InvalidDeltaError):
        CftpConfig.from_spec(table_spec(1.5))


def test_single_draw_in_bounds(table_spec):
    s = RandomStream(1)
    for _ in range(200):
        x, st = sample_exact(table_spec(0.7), s)
        assert 0.0 <= x <= table_spec(0.7).y_bound
        assert isinstance(st, CftpStats) and st.stack_size >= 1


def test_degenerate_scale_rejected():
    spec = DirichletMeanSpec(0.5, KernelKind.UNIT, 1.0, 1.0, Constant(2.0))
    with pytest.raises(DegenerateYError):
        sample_exact(spec, RandomStream(0))
    val, _ = sample_exact_composite(spec, RandomStream(0))
    assert val == 2.0


def test_exact_rejects_large_delta(table_spec):
    with pytest.raises(InvalidDeltaError):
        sample_exact(table_spec(2.0), RandomStream(0))


@pytest.mark.parametrize("delta", [0.3, 1.0, 3.0])
def test_moments_match_recursion(table_spec, delta):
    spec = table_spec(delta)
    b = sample_exact_batch(spec, 200_000, RandomStream(7))
    m, v = dirichlet_mean_moments(spec)
    assert abs(zscore(b.values, m)) < 4.5
    d = b.values - b.values.mean()
    assert abs(zscore(d * d, v)) < 4.5


def test_stack_size_at_one(table_spec):
    b = sample_exact_batch(table_spec(1.0), 200_000, RandomStream(8))
    assert b.stack_sizes.mean() == pytest.approx(7.615, rel=0.02)


def test_matches_deep_truncation_in_distribution():
    spec = DirichletMeanSpec(0.5, KernelKind.DECAY, 2.0, 1.0, ScaledBeta(1.0, 0.5, 2.0))
    exact = sample_exact_batch(spec, 50_000, RandomStream(9)).values
    approx = sample_truncated_batch(spec, FixedN(200), 50_000, RandomStream(10)).values
    assert stats.ks_2samp(exact, approx).pvalue > 1e-3


def test_batch_independent_of_threads(table_spec):
    a = sample_exact_batch(table_spec(0.5), 9000, RandomStream(3), threads=1)
    b = sample_exact_batch(table_spec(0.5), 9000, RandomStream(3), threads=3)
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.stack_sizes, b.stack_sizes)


def test_batch_draw_i_uses_split_i(table_spec):
    root = RandomStream(4)
    b = sample_exact_batch(table_spec(0.5), 5, root)
    x, _ = sample_exact(table_spec(0.5), root.split(3))
    assert b.values[3] == x


def test_composite_mixture_spec():
    spec = DirichletMeanSpec(2.6, KernelKind.ONE_MINUS_DECAY, 2.3, 1.0,
                             Constant(0.5), ((2.0, 0.8), (0.3, 0.2)))
    b = sample_exact_batch(spec, 100_000, RandomStream(5))
    m, _ = dirichlet_mean_moments(spec)
    assert abs(zscore(b.values, m)) < 4.5
    assert b.values.max() <= spec.y_bound
