import csv
import json

import pytest

from exactsv.calibration import OptionQuote
from exactsv.cli import main
from exactsv.io import load_params, parse_params, read_quotes, write_quotes

PARAMS = {"variant": "ou-gamma", "rho": -4.88115, "theta": 0.81303,
          "c": 0.00981, "v0_j": [0.00437], "lambda_j": [2.24323], "r": 0.0319}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_params_roundtrip(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps(PARAMS))
    model = load_params(path)
    assert model.rho == -4.88115 and model.r == 0.0319
    with pytest.raises(ValueError, match="unknown"):
        parse_params(dict(PARAMS, sigma=0.2))
    with pytest.raises(ValueError, match="alpha"):
        parse_params(dict(PARAMS, variant="gl-ou-ggc"))
    with pytest.raises(ValueError):
        parse_params(dict(PARAMS, rho=0.3))


def test_quotes_csv(tmp_path):
    path = tmp_path / "q.csv"
    write_quotes(path, [OptionQuote(100.0, 0.5, 4.2), OptionQuote(90.0, 1.0, 12.1)])
    qs = read_quotes(path)
    assert qs[1] == OptionQuote(90.0, 1.0, 12.1)
    path.write_text("k,t,p\n1,2,3\n")
    with pytest.raises(ValueError):
        read_quotes(path)


def test_dmean_json(capsys):
    code, out, _ = run(capsys, "dmean", "--delta", "1", "--trials", "20000")
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["mean"] == pytest.approx(0.18394, abs=0.005)
    assert row["mean_work"] == pytest.approx(7.615, rel=0.05)


def test_dmean_fixed_csv(capsys):
    code, out, _ = run(capsys, "dmean", "--delta", "0.5,2", "--sampler", "fixed",
                       "--n", "100", "--trials", "2000", "--format", "csv")
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0 and len(rows) == 2 and rows[0]["mean_work"] == "100.0"


@pytest.mark.parametrize("argv", [
    ["dmean", "--delta", "0"],
    ["dmean", "--delta", "1", "--trials", "0"],
    ["price", "--rho", "1"],
    ["nonsense"],
    ["returns", "--variant", "gl-ou-ggc"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "error" in err


def test_invalid_params_file(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(dict(PARAMS, extra=1)))
    code, _, err = run(capsys, "price", "--params", path)
    assert code == 2 and json.loads(err)["error"] == "ValidationError"


def test_returns_theta_zero(capsys):
    code, out, _ = run(capsys, "returns", "--theta", "0", "--v0", "0.09",
                       "--trials", "1000")
    res = json.loads(out)
    assert code == 0 and res["derived_sd"] == pytest.approx(
        (0.09 * (1 - 2.718281828459045 ** -1)) ** 0.5)


def test_returns_histogram(capsys, tmp_path):
    hist = tmp_path / "h.csv"
    code, _, _ = run(capsys, "returns", "--trials", "5000", "--histogram", hist,
                     "--bins", "20")
    rows = list(csv.DictReader(hist.read_text().splitlines()))
    assert code == 0 and sum(int(r["count"]) for r in rows) == 5000


def test_price_black_scholes_limit(capsys):
    code, out, _ = run(capsys, "price", "--theta", "0", "--v0", "0.04",
                       "--trials", "1000", "--strike", "100")
    res = json.loads(out)
    assert code == 0 and res["fsp"]["std_error"] == 0.0
    assert set(res) >= {"psp", "fsp", "model_echo"}


def test_paths_shape(capsys):
    code, out, _ = run(capsys, "paths", "--times", "1,2", "--trials", "10")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 21
    assert lines[0] == "path_id,time,price,tau,lev,v_1"


def test_timings_only_in_metadata(capsys):
    _, out, _ = run(capsys, "price", "--trials", "500", "--timings")
    res = json.loads(out)
    assert "elapsed_seconds" in res["metadata"]
    assert "elapsed_seconds" not in res["fsp"]


def test_rerun_is_byte_identical(tmp_path):
    outs = []
    for th in (1, 2):
        path = tmp_path / f"o{th}.json"
        assert main(["price", "--payoff", "forward-start", "--trials", "5000",
                     "--threads", str(th), "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_calibrate_command(capsys, tmp_path):
    from exactsv.calibration import CalibrationProblem, model_prices
    params = tmp_path / "p.json"
    params.write_text(json.dumps(PARAMS))
    model = load_params(params)
    skel = [OptionQuote(k, 1.0, 1.0) for k in (95.0, 100.0, 105.0)]
    prices = model_prices(CalibrationProblem(skel, 100.0, 0.0319, 0.0, "ou-gamma",
                                             1, 10_000, 0), model)
    quotes = tmp_path / "q.csv"
    write_quotes(quotes, [OptionQuote(q.strike, 1.0, p) for q, p in zip(skel, prices)])
    code, out, _ = run(capsys, "calibrate", "--quotes", quotes, "--params", params,
                       "--trials", "10000", "--fix", "rho,theta,c,lambda_j",
                       "--tol", "1e-8")
    res = json.loads(out)
    assert code == 0
    assert res["mse"] < 1e-6
    assert set(res) >= {"rho", "theta", "c", "v0_j", "lambda_j", "mse"}


def test_validate_list_and_unknown(capsys):
    code, out, _ = run(capsys, "validate", "--list")
    assert code == 0 and "truncation" in out.split()
    code, _, _ = run(capsys, "validate", "--suite", "nope")
    assert code == 2


def test_validate_suite_json(capsys):
    code, out, _ = run(capsys, "validate", "--suite", "bs-limit")
    res = json.loads(out)
    assert code == 0 and res["passed"] and len(res["checks"]) == 6
