import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from exactsv.errors import ValidationError
from exactsv.ggc import Constant, ScaledBeta
from exactsv.model import ModelSpec, Truncated
from exactsv.pricing import (EuropeanCall, ForwardStartOption, RunningMoments,
                             black_scholes_call, price_european,
                             price_european_both, price_forward_start,
                             price_forward_start_both, price_path_dependent)
from exactsv.rng import RandomStream
from exactsv.truncation import StoppingBounded

FITTED = ModelSpec.build("ou-gamma", -4.88115, 0.81303, Constant(0.00981),
                         [2.24323], [0.00437], r=0.0319)


def test_black_scholes_reference():
    # textbook value: S=K=100, r=5%, sigma=20%, T=1
    assert black_scholes_call(100, 100, 0.05, 0.0, 0.2, 1.0) == pytest.approx(10.450583572185565, rel=1e-12)
    assert black_scholes_call(100, 90, 0.05, 0.02, 0.0, 1.0) == pytest.approx(
        100 * math.exp(-0.02) - 90 * math.exp(-0.05))
    with pytest.raises(ValueError):
        black_scholes_call(-1, 90, 0.0, 0.0, 0.2, 1.0)


@given(k=st.floats(50, 150), s=st.floats(0.01, 1.0), t=st.floats(0.05, 5.0))
def test_black_scholes_parity_bounds(k, s, t):
    c = black_scholes_call(100.0, k, 0.03, 0.01, s, t)
    fwd = 100 * math.exp(-0.01 * t)
    assert max(fwd - k * math.exp(-0.03 * t), 0.0) - 1e-9 <= c <= fwd + 1e-9


@given(arrays(np.float64, st.integers(2, 3000), elements=st.floats(-1e3, 1e3)),
       st.integers(1, 700))
@settings(max_examples=60, deadline=None)
def test_running_moments_match_numpy(x, chunk):
    acc = RunningMoments().add(x, chunk=chunk)
    assert acc.mean == pytest.approx(np.mean(x), abs=1e-9 * (1 + np.abs(x).max()))
    assert acc.variance == pytest.approx(np.var(x, ddof=1), rel=1e-8, abs=1e-9)


def test_running_moments_constant_is_exact():
    acc = RunningMoments().add(np.full(10_000, 0.1), chunk=333)
    assert acc.mean == 0.1 and acc.variance == 0.0


def test_option_validation():
    with pytest.raises(ValidationError):
        EuropeanCall(-1, 1)
    with pytest.raises(ValidationError):
        ForwardStartOption(1.0, 2.0, 1.0)


def test_fsp_skips_terminal_normal():
    opt = EuropeanCall(100.0, 1.0)
    f = price_european(FITTED, 100.0, opt, 2000, RandomStream(1), "fsp")
    p = price_european(FITTED, 100.0, opt, 2000, RandomStream(1), "psp")
    assert f.diagnostics["normals_per_path"] == 0.0
    assert p.diagnostics["normals_per_path"] == 1.0
    fo = price_forward_start(FITTED, 100.0, ForwardStartOption(1, 1, 2), 2000,
                             RandomStream(1), "fsp")
    assert fo.diagnostics["normals_per_path"] == 1.0


@pytest.mark.parametrize("model", [
    FITTED,
    ModelSpec.build("ou-gamma", -1.0, 0.5, Constant(0.2), [1.0], [0.04], r=0.02),
    ModelSpec.build("gl-ou-ggc", -0.3, 1.0, ScaledBeta(0.3, 1.0, 2.0), [1.5, 0.3],
                    [0.03, 0.01], r=0.01, q=0.02),
])
def test_psp_fsp_agree_and_fsp_reduces_variance(model):
    res = price_european_both(model, 100.0, EuropeanCall(105.0, 1.0), 100_000,
                              RandomStream(2))
    p, f = res["psp"], res["fsp"]
    assert abs(p.estimate - f.estimate) <= 3 * math.hypot(p.std_error, f.std_error)
    assert f.std_error < p.std_error


def test_strike_monotonicity_with_common_numbers():
    prices = [price_european(FITTED, 100.0, EuropeanCall(k, 0.5), 20_000,
                             RandomStream(3)).estimate
              for k in (80, 90, 95, 100, 105, 110, 120)]
    assert all(a >= b for a, b in zip(prices, prices[1:]))


def test_deep_in_the_money_limit():
    r = price_european(FITTED, 100.0, EuropeanCall(1e-6, 1.0), 20_000, RandomStream(4))
    assert r.estimate == pytest.approx(100.0, abs=3 * r.std_error + 1e-4)


def test_forward_start_homogeneity():
    both = price_forward_start_both(FITTED, 100.0, ForwardStartOption(1.0, 1.0, 2.0),
                                    20_000, RandomStream(5))
    half = price_forward_start_both(FITTED, 50.0, ForwardStartOption(1.0, 1.0, 2.0),
                                    20_000, RandomStream(5))
    assert half["fsp"].estimate == pytest.approx(both["fsp"].estimate / 2, rel=1e-12)


def test_path_dependent_matches_forward_start_psp():
    opt = ForwardStartOption(1.0, 1.0, 2.0)
    ref = price_forward_start_both(FITTED, 100.0, opt, 5000, RandomStream(6))
    disc = math.exp(-FITTED.r * 2.0)
    r = price_path_dependent(FITTED, 100.0,
                             lambda p: disc * np.maximum(p[:, 1] - p[:, 0], 0.0),
                             [1.0, 2.0], 5000, RandomStream(6))
    assert r.estimate == ref["psp"].estimate


def test_truncated_sampler_prices_close():
    opt = EuropeanCall(100.0, 1.0)
    a = price_european(FITTED, 100.0, opt, 50_000, RandomStream(7))
    b = price_european(FITTED, 100.0, opt, 50_000, RandomStream(8),
                       sampler=Truncated(StoppingBounded()))
    assert abs(a.estimate - b.estimate) <= 3 * math.hypot(a.std_error, b.std_error)
    assert b.diagnostics["approximate"] and not a.diagnostics["approximate"]
