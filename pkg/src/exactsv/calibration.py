"""Least-squares calibration of the OU models to call quotes.

The objective is the plain mean-square error between quoted prices and
conditional (FSP) model prices. Each maturity is simulated from a stream
derived from the bit pattern of that maturity, so repeated evaluations reuse
the same random numbers and the simplex sees a deterministic surface.
"""

from __future__ import annotations

import math
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ExactSvError, ValidationError
from .ggc import Constant, ScaledBeta
from .model import Exact, ModelSpec, Variant, simulate
from .optimize import NelderMeadConfig, NelderMeadResult, nelder_mead
from .pricing import RunningMoments, european_fsp_values
from .rng import RandomStream

MIN_TRIALS = 10_000


@dataclass(frozen=True)
class OptionQuote:
    strike: float
    maturity_years: float
    market_price: float

    def __post_init__(self):
        if not (self.strike > 0.0 and self.maturity_years > 0.0
                and self.market_price > 0.0):
            raise ValidationError("quote fields must be positive")


@dataclass(frozen=True)
class CalibrationProblem:
    """Quotes plus everything needed to price them.

    Parameters
    ----------
    quotes : tuple of OptionQuote
    s0, r, q : float
    variant : Variant
    n_factors : int
        1 or 2.
    trials : int
        Paths per maturity and objective evaluation.
    seed : int
        Fixes the common random numbers.
    """

    quotes: tuple
    s0: float
    r: float
    q: float
    variant: Variant
    n_factors: int = 1
    trials: int = 100_000
    seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "quotes", tuple(self.quotes))
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.quotes:
            raise ValidationError("at least one quote is required")
        if not (self.s0 > 0.0):
            raise ValidationError("s0 must be positive")
        if self.n_factors not in (1, 2):
            raise ValidationError("n_factors must be 1 or 2")
        if int(self.trials) < MIN_TRIALS:
            raise ValidationError(f"trials must be at least {MIN_TRIALS}")

    @property
    def maturities(self) -> list[float]:
        return sorted({qt.maturity_years for qt in self.quotes})


# --------------------------------------------------------------------------
# parameters

def _sigmoid(u):
    if u >= 0.0:
        return 1.0 / (1.0 + math.exp(-u))
    e = math.exp(u)
    return e / (1.0 + e)


def _logit(p):
    return math.log(p) - math.log1p(-p)


def model_from_params(params: dict, variant, r: float = 0.0,
                      q: float = 0.0) -> ModelSpec:
    """Build a :class:`ModelSpec` from natural-unit parameters.

    ``params`` holds ``rho``, ``theta``, ``c``, ``lambda_j`` and ``v0_j``,
    plus ``alpha`` and ``beta`` for the GGC variant.
    """
    variant = Variant(variant)
    if variant == Variant.OU_GAMMA:
        scale = Constant(params["c"])
    else:
        scale = ScaledBeta(params["c"], params["alpha"], params["beta"])
    return ModelSpec.build(variant, params["rho"], params["theta"], scale,
                           params["lambda_j"], params["v0_j"], r, q)


def params_from_model(model: ModelSpec) -> dict:
    out = {"rho": model.rho, "theta": model.theta, "c": model.scale.c,
           "lambda_j": [f.lambda_j for f in model.factors],
           "v0_j": [f.v0_j for f in model.factors]}
    if isinstance(model.scale, ScaledBeta):
        out["alpha"] = model.scale.a
        out["beta"] = model.scale.b
    return out


class ParameterTransform:
    """Map between unconstrained coordinates and model parameters.

    Positive quantities are exponentials, ``rho = -exp(u)`` and, for two
    factors, ``lambda_2 = lambda_1 * sigmoid(u)`` so the rates stay ordered.
    Entries of ``fixed`` are held at the given value and take no coordinate.
    """

    def __init__(self, variant, n_factors: int = 1, fixed: dict | None = None):
        self.variant = Variant(variant)
        self.n_factors = int(n_factors)
        if self.n_factors not in (1, 2):
            raise ValidationError("n_factors must be 1 or 2")
        self.fixed = dict(fixed or {})
        names = ["theta", "c"]
        if self.variant == Variant.GL_OU_GGC:
            names += ["alpha", "beta"]
        names += ["rho"]
        names += [f"lambda_{j + 1}" for j in range(self.n_factors)]
        names += [f"v0_{j + 1}" for j in range(self.n_factors)]
        known = set(names) | {"lambda_j", "v0_j"}
        unknown = set(self.fixed) - known
        if unknown:
            raise ValidationError(f"unknown fixed parameters {sorted(unknown)}")
        self._all = names
        self.names = [n for n in names if n not in self._flat_fixed()]

    def _flat_fixed(self):
        flat = {k: v for k, v in self.fixed.items() if k not in ("lambda_j", "v0_j")}
        for key in ("lambda_j", "v0_j"):
            if key in self.fixed:
                for j, val in enumerate(self.fixed[key]):
                    flat[f"{key[:-2]}_{j + 1}"] = val
        return flat

    @property
    def dim(self) -> int:
        return len(self.names)

    def _flat(self, params):
        flat = {k: params[k] for k in ("theta", "c", "rho")}
        if self.variant == Variant.GL_OU_GGC:
            flat["alpha"] = params["alpha"]
            flat["beta"] = params["beta"]
        for j in range(self.n_factors):
            flat[f"lambda_{j + 1}"] = params["lambda_j"][j]
            flat[f"v0_{j + 1}"] = params["v0_j"][j]
        return flat

    def inverse(self, params: dict) -> np.ndarray:
        """Coordinates of natural-unit ``params``."""
        flat = self._flat(params)
        x = []
        for name in self.names:
            val = float(flat[name])
            if name == "rho":
                x.append(math.log(-val))
            elif name == "lambda_2":
                x.append(_logit(val / flat["lambda_1"]))
            else:
                x.append(math.log(val))
        return np.array(x)

    def transform(self, x) -> dict:
        """Natural-unit parameters of coordinates ``x``."""
        x = np.asarray(x, dtype=float)
        if x.size != self.dim:
            raise ValidationError(f"expected {self.dim} coordinates, got {x.size}")
        flat = dict(self._flat_fixed())
        free = dict(zip(self.names, (float(v) for v in x)))
        for name in self._all:
            if name in flat:
                continue
            u = free[name]
            if name == "rho":
                flat[name] = -math.exp(u)
            elif name == "lambda_2":
                continue
            else:
                flat[name] = math.exp(u)
        if "lambda_2" in free:
            flat["lambda_2"] = flat["lambda_1"] * _sigmoid(free["lambda_2"])
        out = {k: flat[k] for k in ("theta", "c", "rho")}
        if self.variant == Variant.GL_OU_GGC:
            out["alpha"] = flat["alpha"]
            out["beta"] = flat["beta"]
        out["lambda_j"] = [flat[f"lambda_{j + 1}"] for j in range(self.n_factors)]
        out["v0_j"] = [flat[f"v0_{j + 1}"] for j in range(self.n_factors)]
        return out


# --------------------------------------------------------------------------
# objective

def maturity_stream(seed: int, maturity: float) -> RandomStream:
    """Stream used for every quote with this maturity."""
    bits = struct.unpack("<Q", struct.pack("<d", float(maturity)))[0]
    return RandomStream(seed).split(bits)


def model_prices(problem: CalibrationProblem, model: ModelSpec,
                 with_errors: bool = False):
    """FSP prices of every quote, in quote order.

    Returns the prices, and their standard errors when ``with_errors``.
    """
    prices = np.empty(len(problem.quotes))
    errors = np.empty(len(problem.quotes))
    superposed = len(model.factors) > 1
    for mat in problem.maturities:
        batch = simulate(model, problem.s0, [mat], problem.trials,
                         maturity_stream(problem.seed, mat), Exact(),
                         superposed=superposed, skip_terminal_normal=True,
                         threads=problem.threads)
        for i, qt in enumerate(problem.quotes):
            if qt.maturity_years != mat:
                continue
            vals = european_fsp_values(model, problem.s0, qt.strike, mat,
                                       batch.tau[:, 0], batch.lev[:, 0])
            acc = RunningMoments().add(vals)
            prices[i] = acc.mean
            errors[i] = acc.std_error
    return (prices, errors) if with_errors else prices


def mse(market, model) -> float:
    market = np.asarray(market, dtype=float)
    model = np.asarray(model, dtype=float)
    return float(np.mean((market - model) ** 2))


def mse_objective(problem: CalibrationProblem, params: dict) -> float:
    """Unweighted mean-square pricing error; ``inf`` if pricing fails."""
    try:
        model = model_from_params(params, problem.variant, problem.r, problem.q)
        prices = model_prices(problem, model)
    except (ExactSvError, ValueError, ArithmeticError):
        return math.inf
    market = [qt.market_price for qt in problem.quotes]
    val = mse(market, prices)
    return val if math.isfinite(val) else math.inf


@dataclass
class CalibrationResult:
    model: ModelSpec
    params: dict
    mse: float
    optimizer: NelderMeadResult
    noise_floor: float
    elapsed_seconds: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, timings: bool = False) -> dict:
        out = dict(self.params)
        out["mse"] = self.mse
        out["noise_floor"] = self.noise_floor
        out["iterations"] = self.optimizer.iterations
        out["evaluations"] = self.optimizer.evaluations
        out["converged"] = self.optimizer.converged
        if timings:
            out["elapsed_seconds"] = self.elapsed_seconds
        return out


def calibrate(problem: CalibrationProblem, initial_params: dict,
              fixed: dict | None = None,
              config: NelderMeadConfig | None = None) -> CalibrationResult:
    """Fit the free parameters by Nelder-Mead on the transformed scale.

    ``noise_floor`` in the result is the mean squared FSP standard error
    of the fitted prices, the scale below which MSE differences are noise.
    """
    t0 = time.perf_counter()
    tr = ParameterTransform(problem.variant, problem.n_factors, fixed)
    x0 = tr.inverse(initial_params)
    res = nelder_mead(lambda x: mse_objective(problem, tr.transform(x)), x0,
                      config or NelderMeadConfig(tol=1e-6, max_iter=2000))
    params = tr.transform(res.x)
    model = model_from_params(params, problem.variant, problem.r, problem.q)
    prices, errs = model_prices(problem, model, with_errors=True)
    floor = float(np.mean(errs ** 2))
    return CalibrationResult(model, params, res.fun, res, floor,
                             time.perf_counter() - t0,
                             {"model_prices": prices.tolist(),
                              "std_errors": errs.tolist()})
