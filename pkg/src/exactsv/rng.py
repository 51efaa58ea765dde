"""Counter-based random streams.

Every stream is a Philox4x64-10 key ``(seed, stream_id)`` plus a position
counter. Word ``k`` of a stream is word ``k % 4`` of the block function applied
to counter ``(k // 4, 0, 0, 0)``, so the raw words agree with
``numpy.random.Philox(key=[seed, stream_id])``. Splitting derives a child key
by hashing the split index through the same block function under a different
counter lane, which makes ``split`` O(1) and independent of how many draws
the parent has made.
"""

from __future__ import annotations

import numpy as np

from ._backend import core

MASK64 = (1 << 64) - 1


def _as_u64(value: int, name: str) -> int:
    value = int(value)
    if value < 0 or value > MASK64:
        raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")
    return value


class RandomStream:
    """Single-owner, splittable source of primitive random draws.

    Parameters
    ----------
    seed : int
        64-bit seed; the first half of the Philox key.
    stream_id : int, optional
        64-bit lineage identifier; the second half of the key. Children
        produced by :meth:`split` carry a derived ``stream_id``.
    counter : int, optional
        Position of the next raw word.

    Notes
    -----
    A stream is mutable (the counter advances) and must not be shared
    between threads. Parallel work should call :meth:`split` once per task.
    """

    __slots__ = ("seed", "stream_id", "counter")

    def __init__(self, seed: int, stream_id: int = 0, counter: int = 0):
        self.seed = _as_u64(seed, "seed")
        self.stream_id = _as_u64(stream_id, "stream_id")
        self.counter = int(counter)

    def __repr__(self) -> str:
        return (f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, "
                f"counter={self.counter})")

    @property
    def key(self) -> tuple[int, int]:
        return self.seed, self.stream_id

    def split(self, index: int) -> "RandomStream":
        """Child stream keyed by ``(lineage, index)``; deterministic, O(1)."""
        child = core.split_id(self.seed, self.stream_id, int(index) & MASK64)
        return RandomStream(self.seed, child, 0)

    def copy(self) -> "RandomStream":
        return RandomStream(self.seed, self.stream_id, self.counter)

    # raw and scalar draws -------------------------------------------------

    def next_u64(self) -> int:
        w, self.counter = core.draw_u64(self.seed, self.stream_id, self.counter)
        return w

    def _fill(self, fn, size, *args):
        out = np.empty(int(size), dtype=np.float64)
        self.counter = fn(self.seed, self.stream_id, self.counter, *args, out)
        return out

    def uniform(self, size=None):
        """Uniform draw(s) on [0, 1) with 53 random bits."""
        if size is None:
            x, self.counter = core.draw_uniform(self.seed, self.stream_id,
                                                self.counter)
            return x
        return self._fill(core.uniform_array, size)

    def uniform_open(self, size=None):
        """Uniform draw(s) on the open interval (0, 1)."""
        if size is None:
            return float(self._fill(core.uniform_open_array, 1)[0])
        return self._fill(core.uniform_open_array, size)

    def normal(self, size=None):
        """Standard normal draw(s) by the Box-Muller cosine branch."""
        if size is None:
            x, self.counter = core.draw_normal(self.seed, self.stream_id,
                                               self.counter)
            return x
        return self._fill(core.normal_array, size)

    def gamma(self, shape: float, scale: float = 1.0, size=None):
        """Gamma(shape, scale) draw(s).

        Shapes of at least one use the Marsaglia-Tsang squeeze; smaller
        shapes draw Gamma(shape + 1) and multiply by ``U**(1/shape)``, which
        is exact.
        """
        shape = float(shape)
        scale = float(scale)
        if not (shape > 0.0) or not (scale > 0.0):
            raise ValueError("gamma requires shape > 0 and scale > 0")
        if size is None:
            x, self.counter = core.draw_gamma(self.seed, self.stream_id,
                                              self.counter, shape)
            return x * scale
        return self._fill(core.gamma_array, size, shape) * scale

    def beta(self, a: float, b: float, size=None):
        """Beta(a, b) draw(s); inverse CDF when a or b equals one."""
        a = float(a)
        b = float(b)
        if not (a > 0.0) or not (b > 0.0):
            raise ValueError("beta requires a > 0 and b > 0")
        if size is None:
            x, self.counter = core.draw_beta(self.seed, self.stream_id,
                                             self.counter, a, b)
            return x
        return self._fill(core.beta_array, size, a, b)


def as_stream(seed_or_stream) -> RandomStream:
    """Accept either an integer seed or an existing stream."""
    if isinstance(seed_or_stream, RandomStream):
        return seed_or_stream
    return RandomStream(int(seed_or_stream))
