"""Stick-breaking truncation of Dirichlet means.

``M = sum_j W_j Y_j`` with ``W_j = V_j prod_{i<j} (1 - V_i)`` and
``V_j ~ Beta(1, delta)``. A truncated draw keeps ``N`` sticks and closes the
remaining mass with one more independent ``Y``. The residual mass is carried
as the running product of ``1 - V_i``, never as ``1 - sum W``, because the
latter stalls at about 1e-16 in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import parallel
from ._backend import core
from .cftp import ITERATION_CAP, _batch
from .errors import raise_for_code
from .ggc import Constant, DirichletMeanSpec, ScaledBeta, y_moments
from .rng import RandomStream

MACHINE_EPSILON = 2.220446049250313e-16


@dataclass(frozen=True)
class FixedN:
    """Keep exactly ``n`` sticks."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("FixedN requires n >= 1")


@dataclass(frozen=True)
class StoppingBounded:
    """Stop once ``y_bound * residual < epsilon`` (bounded ``Y``)."""

    epsilon: float = MACHINE_EPSILON

    def __post_init__(self):
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class StoppingMean:
    """Stop once ``E[Y] * residual < epsilon`` (integrable ``Y``)."""

    epsilon: float = MACHINE_EPSILON

    def __post_init__(self):
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be positive")


TruncationRule = FixedN | StoppingBounded | StoppingMean


def rule_code(rule) -> tuple[int, int, float]:
    """``(method, n_fixed, epsilon)`` as consumed by the kernels."""
    if isinstance(rule, FixedN):
        return core.M_FIXED, int(rule.n), 0.0
    if isinstance(rule, StoppingBounded):
        return core.M_STOP_BOUNDED, 0, float(rule.epsilon)
    if isinstance(rule, StoppingMean):
        return core.M_STOP_MEAN, 0, float(rule.epsilon)
    raise TypeError(f"unknown truncation rule {rule!r}")


def _tail_scale(spec, rule):
    if isinstance(rule, StoppingMean):
        return y_moments(spec)[0]
    return spec.y_bound


def sample_truncated(spec: DirichletMeanSpec, rule, stream: RandomStream):
    """One truncated draw.

    Returns
    -------
    value : float
    n_used : int
        Number of sticks before the closing draw.
    """
    method, n_fixed, eps = rule_code(rule)
    val, count, _, err, stream.counter = core.dm_draw(
        stream.seed, stream.stream_id, stream.counter, spec.law(), spec.delta,
        method, n_fixed, eps, _tail_scale(spec, rule), ITERATION_CAP)
    raise_for_code(err)
    return val, int(count)


@dataclass
class TruncatedBatch:
    values: np.ndarray
    n_used: np.ndarray
    unused: np.ndarray


def sample_truncated_batch(spec: DirichletMeanSpec, rule, trials: int,
                           stream: RandomStream,
                           threads: int | None = None) -> TruncatedBatch:
    """``trials`` independent truncated draws; draw ``i`` uses ``split(i)``."""
    method, n_fixed, eps = rule_code(rule)
    return _batch(spec, trials, stream, method, n_fixed, eps,
                  _tail_scale(spec, rule), threads, ITERATION_CAP,
                  TruncatedBatch)


def sample_truncated_generic(draw_y, delta: float, rule, stream: RandomStream,
                             y_mean: float | None = None,
                             y_bound: float | None = None):
    """Truncated draw for an arbitrary scale sampler ``draw_y(stream)``.

    Slow reference path for scale laws outside the built-in enum. The
    stopping rules need ``y_bound`` (bounded) or ``y_mean`` (mean).
    """
    if isinstance(rule, StoppingBounded):
        if y_bound is None:
            raise ValueError("StoppingBounded needs y_bound")
        tail = y_bound
    elif isinstance(rule, StoppingMean):
        if y_mean is None:
            raise ValueError("StoppingMean needs y_mean")
        tail = y_mean
    acc = 0.0
    prod = 1.0
    n = 0
    while True:
        n += 1
        t = math.log(stream.uniform_open()) / delta
        v = -math.expm1(t)
        acc += v * prod * draw_y(stream)
        prod *= math.exp(t)
        if isinstance(rule, FixedN):
            if n >= rule.n:
                break
        elif tail * prod < rule.epsilon:
            break
    return acc + prod * draw_y(stream), n


def l1_error_bound(spec: DirichletMeanSpec, n: int) -> float:
    """``E[Y] (delta / (delta + 1))**(n + 1)`` bounds ``E|M - M^n|``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return y_moments(spec)[0] * (spec.delta / (spec.delta + 1.0)) ** (n + 1)


def sample_coupled(spec: DirichletMeanSpec, n: int, trials: int,
                   stream: RandomStream, threads: int | None = None):
    """Coupled ``(exact, n-stick truncated)`` draws sharing their sticks.

    The exact draw continues the same stick sequence and replaces the
    closing ``Y`` by an exact Dirichlet-mean tail, so ``exact - truncated``
    isolates the truncation error.
    """
    trials = int(trials)
    ex = np.empty(trials)
    tr = np.empty(trials)
    law = spec.law()

    def work(a, b):
        return core.dm_coupled_batch(stream.seed, stream.stream_id, a, law,
                                     spec.delta, int(n), ITERATION_CAP,
                                     ex[a:b], tr[a:b])

    for code in parallel.run_chunks(work, trials, threads):
        raise_for_code(code)
    return ex, tr


def sample_joint_pair(delta: float, lam: float, horizon: float, scale,
                      stream: RandomStream, rule=None):
    """Shared-stick draw of the OU innovation pair and its gamma part.

    With ``gamma ~ Gamma(delta)`` and common sticks ``W_j`` attached to
    ``(R_j, U_j)``:

    * ``o1 = gamma * sum W_j R_j``
    * ``o2 = gamma * sum W_j R_j exp(-lam U_j horizon)``
    * ``gamma`` itself (the leverage increment).

    Parameters
    ----------
    rule : FixedN or StoppingBounded, optional
        Defaults to stopping at machine precision of the ``R`` bound.
    """
    if rule is None:
        rule = StoppingBounded()
    if isinstance(rule, StoppingMean):
        raise ValueError("joint pair supports FixedN or StoppingBounded")
    if not isinstance(scale, (Constant, ScaledBeta)):
        raise TypeError("scale must be Constant or ScaledBeta")
    method, n_fixed, eps = rule_code(rule)
    rkind, c, a, b = scale.code
    o1, o2, g, _, stream.counter = core.joint_pair(
        stream.seed, stream.stream_id, stream.counter, rkind, c, a, b,
        float(lam), float(horizon), float(delta), method, n_fixed, eps,
        scale.bound())
    return o1, o2, g
