import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactsv.calibration import (CalibrationProblem, OptionQuote,
                                 ParameterTransform, calibrate,
                                 maturity_stream, model_from_params,
                                 model_prices, mse, mse_objective)
from exactsv.errors import ValidationError
from exactsv.optimize import NelderMeadConfig
from exactsv.pricing import black_scholes_call

TRUTH = {"rho": -4.9, "theta": 0.8, "c": 0.01, "lambda_j": [2.2], "v0_j": [0.0044]}


def test_mse_arithmetic():
    assert mse([10.0, 20.0], [11.0, 17.0]) == 5.0


def test_quote_and_problem_validation():
    with pytest.raises(ValidationError):
        OptionQuote(100.0, 0.0, 1.0)
    q = [OptionQuote(100.0, 1.0, 5.0)]
    with pytest.raises(ValidationError):
        CalibrationProblem(q, 100.0, 0.0, 0.0, "ou-gamma", 1, trials=100)
    with pytest.raises(ValidationError):
        CalibrationProblem(q, 100.0, 0.0, 0.0, "ou-gamma", 3, trials=10_000)


coord = st.floats(min_value=-6.0, max_value=3.0)


@pytest.mark.parametrize("variant,l", [("ou-gamma", 1), ("ou-gamma", 2),
                                       ("gl-ou-ggc", 1), ("gl-ou-ggc", 2)])
@given(data=st.data())
@settings(max_examples=40, deadline=None)
def test_transform_roundtrip_and_validity(variant, l, data):
    tr = ParameterTransform(variant, l)
    x = np.array(data.draw(st.lists(coord, min_size=tr.dim, max_size=tr.dim)))
    params = tr.transform(x)
    np.testing.assert_allclose(tr.inverse(params), x, rtol=0, atol=1e-12)
    if l == 2:
        assert params["lambda_j"][0] >= params["lambda_j"][1]
    assert params["rho"] <= 0.0
    # every image must be a valid model, unless the kappa log argument
    # is out of range, which the objective reports as +inf
    if 1.0 - params["rho"] * (params["c"] if variant == "ou-gamma" else 1.0) > 0:
        model_from_params(params, variant)


def test_transform_fixed_parameters():
    tr = ParameterTransform("ou-gamma", 1, fixed={"rho": 0.0, "theta": 0.0})
    assert tr.names == ["c", "lambda_1", "v0_1"]
    p = tr.transform([0.0, 0.0, 0.0])
    assert p["rho"] == 0.0 and p["theta"] == 0.0 and p["c"] == 1.0
    with pytest.raises(ValidationError):
        ParameterTransform("ou-gamma", 1, fixed={"sigma": 1.0})


def _problem(trials=10_000, seed=3):
    model = model_from_params(TRUTH, "ou-gamma", 0.0319, 0.0)
    skel = [OptionQuote(k, t, 1.0) for t in (0.5, 1.0) for k in (95.0, 100.0, 105.0)]
    base = CalibrationProblem(skel, 100.0, 0.0319, 0.0, "ou-gamma", 1, trials, seed)
    prices = model_prices(base, model)
    quotes = [OptionQuote(q.strike, q.maturity_years, p) for q, p in zip(skel, prices)]
    return CalibrationProblem(quotes, 100.0, 0.0319, 0.0, "ou-gamma", 1, trials, seed)


def test_self_priced_quotes_give_zero_mse():
    p = _problem()
    assert mse_objective(p, TRUTH) == 0.0
    assert mse_objective(p, TRUTH) == mse_objective(p, TRUTH)


def test_invalid_parameters_give_inf():
    p = _problem()
    bad = dict(TRUTH, c=300.0)
    assert mse_objective(p, bad) == math.inf


def test_maturity_stream_depends_only_on_maturity():
    assert maturity_stream(1, 0.5).stream_id == maturity_stream(1, 0.5).stream_id
    assert maturity_stream(1, 0.5).stream_id != maturity_stream(1, 1.0).stream_id


def test_black_scholes_limit_recovers_variance():
    # theta = 0: the model is Black-Scholes with sigma^2 = tau_det / T
    lam, v0 = 1.0, 0.04
    tau = -math.expm1(-lam) * v0 / lam
    quotes = [OptionQuote(k, 1.0, float(black_scholes_call(100, k, 0.01, 0.0, math.sqrt(tau), 1.0)))
              for k in (90.0, 100.0, 110.0)]
    p = CalibrationProblem(quotes, 100.0, 0.01, 0.0, "ou-gamma", 1, 10_000, 0)
    fixed = {"rho": 0.0, "theta": 0.0, "c": 1.0, "lambda_j": [lam]}
    start = {"rho": 0.0, "theta": 0.0, "c": 1.0, "lambda_j": [lam], "v0_j": [0.02]}
    res = calibrate(p, start, fixed, NelderMeadConfig(tol=1e-10))
    assert res.params["v0_j"][0] == pytest.approx(v0, rel=1e-6)
    assert res.mse < 1e-12


def test_synthetic_roundtrip_small():
    p = _problem()
    start = {"rho": -4.0, "theta": 1.0, "c": 0.012, "lambda_j": [2.0], "v0_j": [0.005]}
    res = calibrate(p, start, config=NelderMeadConfig(tol=1e-3, max_iter=150))
    assert res.mse < 10 * res.noise_floor
    assert res.optimizer.history[-1] <= res.optimizer.history[0]


def test_two_factor_output_is_ordered():
    quotes = [OptionQuote(100.0, 1.0, 6.0), OptionQuote(110.0, 1.0, 2.0)]
    p = CalibrationProblem(quotes, 100.0, 0.02, 0.0, "ou-gamma", 2, 10_000, 0)
    start = {"rho": -1.0, "theta": 0.8, "c": 0.01, "lambda_j": [2.0, 0.5],
             "v0_j": [0.004, 0.001]}
    res = calibrate(p, start, config=NelderMeadConfig(max_iter=15))
    lam = res.params["lambda_j"]
    assert lam[0] >= lam[1]
