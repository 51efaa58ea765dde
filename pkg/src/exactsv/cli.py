"""Command-line driver.

Every subcommand is deterministic given its flags and ``--seed``; timings
and thread counts only appear under ``metadata`` when ``--timings`` is set.

Exit codes: 0 success, 1 failed validation checks, 2 invalid input,
3 runtime or numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .cftp import sample_exact_batch
from .errors import ExactSvError, ValidationError
from .ggc import (Constant, DirichletMeanSpec, KernelKind, ScaledBeta,
                  dirichlet_mean_moments)
from .io import dump_result, load_params, model_to_params, read_quotes, write_paths_csv
from .model import Exact, ModelSpec, Truncated, model_return_moments, simulate
from .parallel import resolve_threads
from .rng import RandomStream
from .truncation import (MACHINE_EPSILON, FixedN, StoppingBounded, StoppingMean,
                         sample_truncated_batch)

EXIT_OK, EXIT_CHECKS, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list: {text!r}")


def _positive_int(text: str) -> int:
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if val < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return val


def _seed(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return val


# --------------------------------------------------------------------------
# argument groups

def _add_common(p, trials=100_000):
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--trials", type=_positive_int, default=trials)
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker cap; defaults to ENGINE_THREADS or 1")
    p.add_argument("--out", default="-", help="output file, '-' for stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--timings", action="store_true",
                   help="add wall-clock timings under 'metadata'")


def _add_model(p, **defaults):
    p.add_argument("--params", help="model parameter JSON file")
    p.add_argument("--variant", choices=("ou-gamma", "gl-ou-ggc"),
                   default=defaults.get("variant", "ou-gamma"))
    p.add_argument("--rho", type=float, default=defaults.get("rho", 0.0))
    p.add_argument("--theta", type=float, default=defaults.get("theta", 1.0))
    p.add_argument("--c", type=float, default=defaults.get("c", 1.0))
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--lambda", dest="lambdas", type=_floats,
                   default=defaults.get("lambdas", [1.0]))
    p.add_argument("--v0", type=_floats, default=defaults.get("v0", [0.0]))
    p.add_argument("--r", type=float, default=defaults.get("r", 0.0))
    p.add_argument("--q", type=float, default=0.0)


def _add_sampler(p):
    p.add_argument("--sampler", choices=("exact", "fixed", "stopping"),
                   default="exact")
    p.add_argument("--n", type=_positive_int, default=100,
                   help="sticks kept by the fixed sampler")
    p.add_argument("--eps", type=float, default=MACHINE_EPSILON)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="exactsv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("dmean", help="sample Dirichlet means")
    _add_common(p, 1_000_000)
    p.add_argument("--delta", type=_floats, required=True,
                   help="one shape or a comma-separated list")
    p.add_argument("--sampler", choices=("cftp", "fixed", "stopping",
                                         "stopping-mean"), default="cftp")
    p.add_argument("--n", type=_positive_int, default=100)
    p.add_argument("--eps", type=float, default=MACHINE_EPSILON)
    p.add_argument("--kernel", choices=("unit", "decay", "one-minus-decay"),
                   default="one-minus-decay")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--scale", choices=("constant", "beta"), default="beta")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)

    p = sub.add_parser("returns", help="moments of simulated log-returns")
    _add_common(p, 1_000_000)
    _add_model(p)
    _add_sampler(p)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--independent-leverage", action="store_true",
                   help="diagnostic: leverage gamma drawn independently")
    p.add_argument("--histogram", help="write a histogram CSV here")
    p.add_argument("--bins", type=_positive_int, default=200)

    p = sub.add_parser("price", help="price a European or forward-start call")
    _add_common(p)
    _add_model(p)
    _add_sampler(p)
    p.add_argument("--payoff", choices=("european", "forward-start"),
                   default="european")
    p.add_argument("--s0", type=float, default=100.0)
    p.add_argument("--strike", type=float, default=100.0)
    p.add_argument("--maturity", type=float, default=1.0)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--t2", type=float, default=2.0)

    p = sub.add_parser("paths", help="export simulated paths as CSV")
    _add_common(p, 10)
    _add_model(p)
    _add_sampler(p)
    p.add_argument("--times", type=_floats, required=True)
    p.add_argument("--s0", type=float, default=100.0)
    p.set_defaults(format="csv")

    p = sub.add_parser("calibrate", help="fit a model to call quotes")
    _add_common(p, 100_000)
    p.add_argument("--quotes", required=True)
    p.add_argument("--params", required=True, help="starting parameters JSON")
    p.add_argument("--s0", type=float, default=100.0)
    p.add_argument("--fix", default="",
                   help="comma-separated parameter names held at their start")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=_positive_int, default=2000)

    p = sub.add_parser("validate", help="run acceptance suites")
    _add_common(p)
    p.add_argument("--suite", default="all",
                   help="suite name, comma-separated list, or 'all'")
    p.add_argument("--scale", type=float, default=1.0,
                   help="multiplier on the default trial counts")
    p.add_argument("--list", action="store_true", help="list suite names")
    return parser


# --------------------------------------------------------------------------
# helpers

def _model(args) -> ModelSpec:
    if args.params:
        return load_params(args.params)
    if args.variant == "ou-gamma":
        scale = Constant(args.c)
    else:
        if args.alpha is None or args.beta is None:
            raise ValidationError("gl-ou-ggc needs --alpha and --beta")
        scale = ScaledBeta(args.c, args.alpha, args.beta)
    return ModelSpec.build(args.variant, args.rho, args.theta, scale,
                           args.lambdas, args.v0, args.r, args.q)


def _sampler(args):
    if args.sampler == "exact":
        return Exact()
    if args.sampler == "fixed":
        return Truncated(FixedN(args.n))
    return Truncated(StoppingBounded(args.eps))


def _emit(args, text: str) -> None:
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _metadata(args, t0):
    if not args.timings:
        return None
    return {"elapsed_seconds": time.perf_counter() - t0,
            "threads": resolve_threads(args.threads)}


def _rows_csv(rows: list[dict]) -> str:
    buf = _stdio.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v)
                    for k, v in row.items()})
    return buf.getvalue()


def _output(args, result: dict, rows: list[dict], t0) -> None:
    if args.format == "csv":
        _emit(args, _rows_csv(rows))
    else:
        _emit(args, dump_result(result, _metadata(args, t0)))


def _moments(x):
    x = np.asarray(x, dtype=float)
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d * d))
    sd = math.sqrt(m2)
    skew = float(np.mean(d ** 3)) / m2 ** 1.5 if m2 > 0 else float("nan")
    kurt = float(np.mean(d ** 4)) / m2 ** 2 if m2 > 0 else float("nan")
    return mean, sd, skew, kurt


# --------------------------------------------------------------------------
# subcommands

def cmd_dmean(args) -> int:
    t0 = time.perf_counter()
    kernel = {"unit": KernelKind.UNIT, "decay": KernelKind.DECAY,
              "one-minus-decay": KernelKind.ONE_MINUS_DECAY}[args.kernel]
    scale = (Constant(args.c) if args.scale == "constant"
             else ScaledBeta(args.c, args.a, args.b))
    stream = RandomStream(args.seed)
    rows = []
    for delta in args.delta:
        if not (delta > 0.0 and math.isfinite(delta)):
            raise ValidationError("--delta values must be positive")
        spec = DirichletMeanSpec(delta, kernel, args.lam, args.horizon, scale)
        if args.sampler == "cftp":
            batch = sample_exact_batch(spec, args.trials, stream, args.threads)
            work = batch.stack_sizes
        else:
            rule = {"fixed": lambda: FixedN(args.n),
                    "stopping": lambda: StoppingBounded(args.eps),
                    "stopping-mean": lambda: StoppingMean(args.eps)}[args.sampler]()
            batch = sample_truncated_batch(spec, rule, args.trials, stream,
                                           args.threads)
            work = batch.n_used
        true_mean, true_var = dirichlet_mean_moments(spec)
        vals = batch.values
        rows.append({"delta": delta, "sampler": args.sampler,
                     "trials": args.trials,
                     "mean": float(np.mean(vals)),
                     "variance": float(np.var(vals, ddof=1)) if vals.size > 1 else 0.0,
                     "true_mean": true_mean, "true_variance": true_var,
                     "mean_work": float(np.mean(work)),
                     "work_kind": "stack" if args.sampler == "cftp" else "sticks"})
    _output(args, {"rows": rows, "seed": args.seed}, rows, t0)
    return EXIT_OK


def cmd_returns(args) -> int:
    t0 = time.perf_counter()
    model = _model(args)
    if not (args.horizon > 0.0):
        raise ValidationError("--horizon must be positive")
    batch = simulate(model, 1.0, [args.horizon], args.trials,
                     RandomStream(args.seed), _sampler(args),
                     independent_leverage=args.independent_leverage,
                     threads=args.threads)
    x = np.log(batch.price[:, 0])
    mean, sd, skew, kurt = _moments(x)
    d_mean, d_var = model_return_moments(model, args.horizon,
                                         args.independent_leverage)
    row = {"trials": args.trials, "mean": mean, "sd": sd, "skewness": skew,
           "kurtosis": kurt, "derived_mean": d_mean,
           "derived_sd": math.sqrt(d_var)}
    if args.histogram:
        counts, edges = np.histogram(x, bins=args.bins)
        width = np.diff(edges)
        with open(args.histogram, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["left", "right", "count", "density"])
            for lo, hi, cnt, wd in zip(edges[:-1], edges[1:], counts, width):
                w.writerow([repr(float(lo)), repr(float(hi)), int(cnt),
                            repr(float(cnt / (x.size * wd)))])
    result = dict(row, model_echo=model_to_params(model),
                  horizon=args.horizon, seed=args.seed)
    _output(args, result, [row], t0)
    return EXIT_OK


def cmd_price(args) -> int:
    from .pricing import (EuropeanCall, ForwardStartOption,
                          price_european_both, price_forward_start_both)
    t0 = time.perf_counter()
    model = _model(args)
    stream = RandomStream(args.seed)
    if args.payoff == "european":
        option = EuropeanCall(args.strike, args.maturity)
        res = price_european_both(model, args.s0, option, args.trials, stream,
                                  _sampler(args), threads=args.threads)
        contract = {"payoff": "european", "strike": args.strike,
                    "maturity": args.maturity}
    else:
        option = ForwardStartOption(args.k, args.t1, args.t2)
        res = price_forward_start_both(model, args.s0, option, args.trials,
                                       stream, _sampler(args),
                                       threads=args.threads)
        contract = {"payoff": "forward-start", "k": args.k, "t1": args.t1,
                    "t2": args.t2}
    contract["s0"] = args.s0
    rows = [{k: v for k, v in r.to_dict(timings=False).items()
             if k != "diagnostics"} for r in res.values()]
    result = {"psp": res["psp"].to_dict(timings=False),
              "fsp": res["fsp"].to_dict(timings=False),
              "contract": contract, "sampler": args.sampler,
              "model_echo": model_to_params(model), "seed": args.seed}
    meta = _metadata(args, t0)
    if meta is not None:
        meta["psp_elapsed_seconds"] = res["psp"].elapsed_seconds
        meta["fsp_elapsed_seconds"] = res["fsp"].elapsed_seconds
    if args.format == "csv":
        _emit(args, _rows_csv(rows))
    else:
        _emit(args, dump_result(result, meta))
    return EXIT_OK


def cmd_paths(args) -> int:
    model = _model(args)
    batch = simulate(model, args.s0, args.times, args.trials,
                     RandomStream(args.seed), _sampler(args),
                     path_dependent=True, threads=args.threads)
    if args.format == "json":
        result = {"times": batch.times, "price": batch.price, "tau": batch.tau,
                  "lev": batch.lev, "v": batch.v, "seed": args.seed}
        _emit(args, dump_result(result))
        return EXIT_OK
    buf = _stdio.StringIO()
    write_paths_csv(buf, batch)
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .calibration import CalibrationProblem, calibrate, params_from_model
    from .optimize import NelderMeadConfig
    t0 = time.perf_counter()
    start = load_params(args.params)
    quotes = read_quotes(args.quotes)
    problem = CalibrationProblem(quotes, args.s0, start.r, start.q,
                                 start.variant, len(start.factors),
                                 args.trials, args.seed, args.threads)
    init = params_from_model(start)
    fixed = {}
    for name in (s.strip() for s in args.fix.split(",") if s.strip()):
        if name in ("lambda_j", "v0_j"):
            fixed[name] = init[name]
        elif name in init:
            fixed[name] = init[name]
        else:
            raise ValidationError(f"unknown parameter to fix: {name}")
    res = calibrate(problem, init, fixed,
                    NelderMeadConfig(tol=args.tol, max_iter=args.max_iter))
    result = res.to_dict(timings=False)
    result["variant"] = start.variant.value
    result["r"] = start.r
    result["q"] = start.q
    result["seed"] = args.seed
    rows = [{k: (json.dumps(v) if isinstance(v, list) else v)
             for k, v in result.items()}]
    _output(args, result, rows, t0)
    return EXIT_OK


def cmd_validate(args) -> int:
    from . import validate
    if args.list:
        _emit(args, "\n".join(validate.SUITES) + "\n")
        return EXIT_OK
    t0 = time.perf_counter()
    names = (list(validate.SUITES) if args.suite == "all"
             else [s.strip() for s in args.suite.split(",") if s.strip()])
    unknown = [n for n in names if n not in validate.SUITES]
    if unknown:
        raise ValidationError(f"unknown suites {unknown}; use --list")
    checks = []
    for name in names:
        checks.extend(validate.run_suite(name, scale=args.scale,
                                         seed=args.seed, threads=args.threads))
    rows = [c.to_dict() for c in checks]
    ok = all(c.passed for c in checks)
    if args.format == "csv":
        _emit(args, _rows_csv([{k: (json.dumps(v) if isinstance(v, dict) else v)
                                for k, v in r.items()} for r in rows]))
    else:
        _emit(args, dump_result({"passed": ok, "checks": rows},
                                _metadata(args, t0)))
    return EXIT_OK if ok else EXIT_CHECKS


COMMANDS = {"dmean": cmd_dmean, "returns": cmd_returns, "price": cmd_price,
            "paths": cmd_paths, "calibrate": cmd_calibrate,
            "validate": cmd_validate}


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail(EXIT_USAGE, "usage", str(exc))
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, ValueError, FileNotFoundError) as exc:
        return _fail(EXIT_USAGE, type(exc).__name__, str(exc))
    except (ExactSvError, ArithmeticError, MemoryError) as exc:
        return _fail(EXIT_RUNTIME, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
