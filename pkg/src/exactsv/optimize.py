"""Derivative-free minimization by the Nelder-Mead simplex method."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NelderMeadConfig:
    """Simplex coefficients and stopping rule.

    ``tol`` bounds the simplex size, measured as the largest max-norm
    distance of a vertex from the best vertex.
    """

    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    tol: float = 1e-8
    max_iter: int = 5000
    initial_step: float = 0.1
    zero_step: float = 0.1


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool
    history: list = field(default_factory=list)


def initial_simplex(x0, config: NelderMeadConfig) -> np.ndarray:
    """Vertices ``x0`` and ``x0 + step_i e_i``; step is 10% or an absolute 0.1."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        step = config.initial_step * x0[i] if x0[i] != 0.0 else config.zero_step
        simplex[i + 1, i] += step
    return simplex


def nelder_mead(objective, initial, config: NelderMeadConfig | None = None,
                simplex=None) -> NelderMeadResult:
    """Minimize ``objective`` starting from ``initial``.

    Non-finite objective values are treated as ``+inf`` so that infeasible
    points are simply never accepted. When ``max_iter`` is reached the best
    vertex so far is returned with ``converged=False``.
    """
    config = config or NelderMeadConfig()
    x0 = np.atleast_1d(np.asarray(initial, dtype=float))
    if x0.size < 1:
        raise ValueError("dimension must be at least one")
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        val = float(objective(x))
        return val if math.isfinite(val) else math.inf

    pts = initial_simplex(x0, config) if simplex is None else np.array(simplex, float)
    vals = np.array([f(p) for p in pts])
    n = x0.size
    history = []
    it = 0
    converged = False
    a, g, c, s = (config.reflection, config.expansion, config.contraction,
                  config.shrink)
    while True:
        order = np.argsort(vals, kind="stable")
        pts, vals = pts[order], vals[order]
        history.append(float(vals[0]))
        size = float(np.max(np.abs(pts[1:] - pts[0])))
        if size < config.tol:
            converged = True
            break
        if it >= config.max_iter:
            break
        it += 1
        centroid = pts[:-1].mean(axis=0)
        worst = pts[-1]
        xr = centroid + a * (centroid - worst)
        fr = f(xr)
        if vals[0] <= fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[0]:
            xe = centroid + g * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = centroid + c * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                pts[-1], vals[-1] = xc, fc
                continue
        else:
            xc = centroid + c * (worst - centroid)
            fc = f(xc)
            if fc < vals[-1]:
                pts[-1], vals[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            pts[i] = pts[0] + s * (pts[i] - pts[0])
            vals[i] = f(pts[i])
    return NelderMeadResult(pts[0].copy(), float(vals[0]), it, evals,
                            converged, history)
