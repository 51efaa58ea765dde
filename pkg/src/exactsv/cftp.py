"""Perfect sampling of Dirichlet means by double coupling from the past.

For ``delta <= 1`` the Beta(1, delta) density ``delta (1 - v)^(delta - 1)`` is
bounded below by ``c_h = delta`` on [0, 1], and ``Y`` is bounded above by
``c_y``. The backward phase stores pairs ``(Y, Y')`` until a uniform falls
under ``|Y - Y'| c_h / (2 c_y)``; at that point every chain has coalesced
onto a single uniform starting value. The forward phase replays the stored
pairs with a rejection step that preserves the map's transition law.

Larger shapes are split into blocks of shape ``delta / ceil(delta)`` and
recombined with Gamma weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import parallel
from ._backend import core
from .errors import DegenerateYError, InvalidDeltaError, raise_for_code
from .ggc import DirichletMeanSpec
from .rng import RandomStream

#: primitive 64-bit words a single draw may consume before giving up
ITERATION_CAP = 10 ** 9


@dataclass(frozen=True)
class CftpConfig:
    """Constants of the coupling: density floor ``c_h`` and bound ``c_y``."""

    c_h: float
    c_y: float

    @classmethod
    def from_spec(cls, spec: DirichletMeanSpec) -> "CftpConfig":
        if spec.delta > 1.0:
            raise InvalidDeltaError(
                f"coupling needs delta <= 1, got {spec.delta}; "
                "use sample_exact_composite")
        return cls(c_h=spec.delta, c_y=spec.y_bound)


@dataclass
class CftpStats:
    """Diagnostics of one exact draw (or a sum over blocks).

    ``stack_size`` counts stored ``(Y, Y')`` pairs, which equals the number
    of backward steps. ``forward_rejections`` counts proposals rejected
    during the replay.
    """

    stack_size: int = 0
    backward_steps: int = 0
    forward_rejections: int = 0


def _draw(spec, stream, cap):
    val, count, rej, err, stream.counter = core.dm_draw(
        stream.seed, stream.stream_id, stream.counter, spec.law(), spec.delta,
        core.M_EXACT, 0, 0.0, spec.y_bound, cap)
    raise_for_code(err)
    return val, CftpStats(int(count), int(count), int(rej))


def sample_exact(spec: DirichletMeanSpec, stream: RandomStream,
                 cap: int = ITERATION_CAP):
    """One exact draw of ``M`` for ``spec.delta <= 1``.

    Returns
    -------
    value : float
        Lies in ``[0, spec.y_bound]``.
    stats : CftpStats

    Raises
    ------
    DegenerateYError
        ``Y`` is a point mass, so the backward phase never terminates.
    InvalidDeltaError
        ``spec.delta > 1``.
    """
    if spec.is_degenerate:
        raise DegenerateYError("scale variable is constant; M equals it")
    CftpConfig.from_spec(spec)
    return _draw(spec, stream, cap)


def sample_exact_composite(spec: DirichletMeanSpec, stream: RandomStream,
                           cap: int = ITERATION_CAP):
    """Exact draw for any ``delta > 0``; a constant ``Y`` is returned as is."""
    if spec.is_degenerate:
        return spec.scale.bound(), CftpStats()
    return _draw(spec, stream, cap)


@dataclass
class ExactBatch:
    """Arrays of independent exact draws and their diagnostics."""

    values: np.ndarray
    stack_sizes: np.ndarray
    forward_rejections: np.ndarray


def sample_exact_batch(spec: DirichletMeanSpec, trials: int,
                       stream: RandomStream, threads: int | None = None,
                       cap: int = ITERATION_CAP) -> ExactBatch:
    """``trials`` independent draws; draw ``i`` uses ``stream.split(i)``."""
    return _batch(spec, trials, stream, core.M_EXACT, 0, 0.0, spec.y_bound,
                  threads, cap, ExactBatch)


def _batch(spec, trials, stream, method, n_fixed, eps, tail_scale, threads,
           cap, kind):
    trials = int(trials)
    vals = np.empty(trials)
    counts = np.empty(trials, dtype=np.int64)
    rejs = np.empty(trials, dtype=np.int64)
    law = spec.law()

    def work(a, b):
        return core.dm_batch(stream.seed, stream.stream_id, a, law, spec.delta,
                             method, n_fixed, eps, tail_scale, cap, vals[a:b],
                             counts[a:b], rejs[a:b])

    for code in parallel.run_chunks(work, trials, threads):
        raise_for_code(code)
    return kind(vals, counts, rejs)
