"""Monte Carlo option pricing with plain and conditional estimators.

PSP (plain simulation price) averages discounted payoffs of simulated
prices. FSP (formula simulation price) integrates out the Brownian part:
conditional on the subordinator over ``[t, T]`` the log-price is Gaussian,
so the call value is a Black-Scholes price with spot
``S_t exp(-lam kappa (T - t) + rho * lev)`` and volatility
``sqrt(tau / (T - t))``. Both estimators are computed from the same paths,
so they share common random numbers.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import ValidationError
from .model import Exact, ModelSpec, kappa, simulate
from .parallel import CHUNK_SIZE
from .rng import RandomStream


class Estimator(str, enum.Enum):
    PSP = "psp"
    FSP = "fsp"


@dataclass(frozen=True)
class EuropeanCall:
    strike: float
    maturity: float

    def __post_init__(self):
        if not (self.strike > 0.0 and self.maturity > 0.0):
            raise ValidationError("strike and maturity must be positive")


@dataclass(frozen=True)
class ForwardStartOption:
    """Pays ``(S(t2) - k S(t1))^+`` at ``t2``."""

    k: float
    t1: float
    t2: float

    def __post_init__(self):
        if not (self.k > 0.0):
            raise ValidationError("k must be positive")
        if not (0.0 < self.t1 < self.t2):
            raise ValidationError("need 0 < t1 < t2")


@dataclass
class MonteCarloResult:
    """Estimate with standard error ``sd / sqrt(trials)``."""

    estimate: float
    std_error: float
    trials: int
    elapsed_seconds: float
    estimator: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, timings: bool = True) -> dict:
        out = {"estimate": self.estimate, "std_error": self.std_error,
               "trials": self.trials, "estimator": self.estimator}
        if self.diagnostics:
            out["diagnostics"] = self.diagnostics
        if timings:
            out["elapsed_seconds"] = self.elapsed_seconds
        return out


class RunningMoments:
    """Streaming mean and variance, merged chunk by chunk (Chan et al.).

    Chunks are merged in the order given, so for a fixed chunking the
    result is bit-reproducible.
    """

    __slots__ = ("n", "mean", "m2")

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add_chunk(self, values) -> None:
        values = np.asarray(values, dtype=np.float64)
        nb = values.size
        if nb == 0:
            return
        # shifting by the first value keeps constant chunks exactly constant
        shift = values[0]
        d = values - shift
        db = float(np.mean(d))
        mb = float(shift + db)
        m2b = float(np.sum((d - db) ** 2))
        if self.n == 0:
            self.n, self.mean, self.m2 = nb, mb, m2b
            return
        n = self.n + nb
        d = mb - self.mean
        self.mean += d * nb / n
        self.m2 += m2b + d * d * self.n * nb / n
        self.n = n

    def add(self, values, chunk: int = CHUNK_SIZE) -> "RunningMoments":
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        for s in range(0, values.size, chunk):
            self.add_chunk(values[s:s + chunk])
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n > 0 else float("nan")


def black_scholes_call(spot, strike, rate, dividend, sigma, tenor):
    """Black-Scholes call value; vectorized over array arguments.

    Parameters
    ----------
    spot, strike, tenor : float or array
        Must be positive.
    rate, dividend : float or array
        Continuously compounded.
    sigma : float or array
        Non-negative volatility; ``sigma = 0`` gives the discounted
        intrinsic value of the forward.
    """
    spot = np.asarray(spot, dtype=np.float64)
    strike = np.asarray(strike, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    tenor = np.asarray(tenor, dtype=np.float64)
    if np.any(spot <= 0.0) or np.any(strike <= 0.0) or np.any(tenor <= 0.0):
        raise ValueError("spot, strike and tenor must be positive")
    if np.any(sigma < 0.0):
        raise ValueError("sigma must be non-negative")
    fwd_spot = spot * np.exp(-dividend * tenor)
    disc_k = strike * np.exp(-rate * tenor)
    vol = sigma * np.sqrt(tenor)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(fwd_spot / disc_k)) / vol + 0.5 * vol
        d2 = d1 - vol
        value = fwd_spot * ndtr(d1) - disc_k * ndtr(d2)
    intrinsic = np.maximum(fwd_spot - disc_k, 0.0)
    out = np.where(vol > 0.0, value, intrinsic)
    return float(out) if out.ndim == 0 else out


def _result(values, name, elapsed, batch=None):
    acc = RunningMoments().add(values)
    diag = {}
    if batch is not None:
        diag = {"mean_sampler_work": float(np.mean(batch.work)),
                "approximate": bool(batch.approximate)}
    return MonteCarloResult(acc.mean, acc.std_error, acc.n, elapsed, name, diag)


def european_fsp_values(model: ModelSpec, s0, strike, maturity, tau, lev):
    """Per-path conditional Black-Scholes values."""
    spot0 = s0 * np.exp(-model.lam * kappa(model) * maturity + model.rho * lev)
    sig = np.sqrt(np.maximum(tau, 0.0) / maturity)
    return black_scholes_call(spot0, strike, model.r, model.q, sig, maturity)


def price_european_both(model: ModelSpec, s0: float, option: EuropeanCall,
                        trials: int, stream: RandomStream, sampler=None,
                        superposed: bool = False, threads: int | None = None):
    """PSP and FSP from the same simulated paths."""
    batch = simulate(model, s0, [option.maturity], trials, stream, sampler,
                     superposed=superposed, threads=threads)
    t0 = time.perf_counter()
    disc = math.exp(-model.r * option.maturity)
    psp = disc * np.maximum(batch.price[:, 0] - option.strike, 0.0)
    fsp = european_fsp_values(model, s0, option.strike, option.maturity,
                              batch.tau[:, 0], batch.lev[:, 0])
    el = batch.elapsed_seconds + time.perf_counter() - t0
    return {"psp": _result(psp, "psp", el, batch),
            "fsp": _result(fsp, "fsp", el, batch)}


def price_european(model: ModelSpec, s0: float, option: EuropeanCall,
                   trials: int, stream: RandomStream, estimator="fsp",
                   sampler=None, superposed: bool = False,
                   threads: int | None = None) -> MonteCarloResult:
    """European call by PSP or FSP.

    The FSP run never draws the terminal normal; the PSP run does. The
    jump draws are identical in both runs because the normal comes last.
    """
    estimator = Estimator(estimator)
    fsp = estimator == Estimator.FSP
    batch = simulate(model, s0, [option.maturity], trials, stream, sampler,
                     superposed=superposed, skip_terminal_normal=fsp,
                     threads=threads)
    t0 = time.perf_counter()
    if fsp:
        vals = european_fsp_values(model, s0, option.strike, option.maturity,
                                   batch.tau[:, 0], batch.lev[:, 0])
    else:
        vals = (math.exp(-model.r * option.maturity)
                * np.maximum(batch.price[:, 0] - option.strike, 0.0))
    el = batch.elapsed_seconds + time.perf_counter() - t0
    res = _result(vals, estimator.value, el, batch)
    res.diagnostics["normals_per_path"] = float(np.mean(batch.normals))
    return res


def _forward_values(model, option, batch):
    s1 = batch.price[:, 0]
    d2 = option.t2 - option.t1
    fsp = (math.exp(-model.r * option.t1) * s1
           * european_fsp_values(model, 1.0, option.k, d2, batch.tau[:, 1],
                                 batch.lev[:, 1]))
    return fsp


def price_forward_start_both(model: ModelSpec, s0: float,
                             option: ForwardStartOption, trials: int,
                             stream: RandomStream, sampler=None,
                             threads: int | None = None):
    """PSP and FSP of a forward-start call from the same paths."""
    batch = simulate(model, s0, [option.t1, option.t2], trials, stream,
                     sampler, threads=threads)
    t0 = time.perf_counter()
    psp = (math.exp(-model.r * option.t2)
           * np.maximum(batch.price[:, 1] - option.k * batch.price[:, 0], 0.0))
    fsp = _forward_values(model, option, batch)
    el = batch.elapsed_seconds + time.perf_counter() - t0
    return {"psp": _result(psp, "psp", el, batch),
            "fsp": _result(fsp, "fsp", el, batch)}


def price_forward_start(model: ModelSpec, s0: float,
                        option: ForwardStartOption, trials: int,
                        stream: RandomStream, estimator="fsp", sampler=None,
                        threads: int | None = None) -> MonteCarloResult:
    """Forward-start call by PSP or FSP.

    FSP uses linear homogeneity: the value at ``t1`` is ``S(t1)`` times a
    unit-spot conditional call with strike ``k`` over ``t2 - t1``.
    """
    estimator = Estimator(estimator)
    fsp = estimator == Estimator.FSP
    batch = simulate(model, s0, [option.t1, option.t2], trials, stream,
                     sampler, skip_terminal_normal=fsp, threads=threads)
    t0 = time.perf_counter()
    if fsp:
        vals = _forward_values(model, option, batch)
    else:
        vals = (math.exp(-model.r * option.t2)
                * np.maximum(batch.price[:, 1] - option.k * batch.price[:, 0],
                             0.0))
    el = batch.elapsed_seconds + time.perf_counter() - t0
    res = _result(vals, estimator.value, el, batch)
    res.diagnostics["normals_per_path"] = float(np.mean(batch.normals))
    return res


def price_path_dependent(model: ModelSpec, s0: float, payoff, times,
                         trials: int, stream: RandomStream, sampler=None,
                         threads: int | None = None) -> MonteCarloResult:
    """PSP of an arbitrary discrete-date payoff.

    Parameters
    ----------
    payoff : callable
        Maps the ``(trials, len(times))`` price matrix to a vector of
        discounted payoffs.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    batch = simulate(model, s0, times, trials, stream, sampler,
                     path_dependent=True, threads=threads)
    t0 = time.perf_counter()
    vals = np.broadcast_to(np.asarray(payoff(batch.price), dtype=float),
                           (batch.trials,))
    el = batch.elapsed_seconds + time.perf_counter() - t0
    return _result(vals, "psp", el, batch)
