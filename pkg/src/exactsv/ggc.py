"""Scale laws, Dirichlet-mean specifications and GGC example samplers.

A Dirichlet mean ``M`` with shape ``delta`` and scale variable ``Y`` is the
stationary solution of ``M = V*Y + (1 - V)*M`` with ``V ~ Beta(1, delta)``
independent of ``Y`` and ``M``. The scale variables used here are
``Y = R * k(U)`` with ``U`` uniform, ``R`` either a constant or a scaled
Beta variable, and ``k`` one of three kernels.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._backend import core
from .rng import RandomStream


# --------------------------------------------------------------------------
# scale variables

@dataclass(frozen=True)
class Constant:
    """Point mass ``R = c``."""

    c: float

    def __post_init__(self):
        if not (self.c > 0.0):
            raise ValueError("Constant scale requires c > 0")

    def bound(self) -> float:
        return float(self.c)

    def mean(self) -> float:
        return float(self.c)

    def second_moment(self) -> float:
        return float(self.c) ** 2

    @property
    def code(self):
        return core.R_CONST, float(self.c), 0.0, 0.0


@dataclass(frozen=True)
class ScaledBeta:
    """``R = c * Beta(a, b)``; bounded by ``c``."""

    c: float
    a: float
    b: float

    def __post_init__(self):
        if not (self.c > 0.0 and self.a > 0.0 and self.b > 0.0):
            raise ValueError("ScaledBeta requires c, a, b > 0")

    def bound(self) -> float:
        return float(self.c)

    def mean(self) -> float:
        return self.c * self.a / (self.a + self.b)

    def second_moment(self) -> float:
        a, b = self.a, self.b
        return self.c ** 2 * a * (a + 1.0) / ((a + b) * (a + b + 1.0))

    @property
    def code(self):
        return core.R_BETA, float(self.c), float(self.a), float(self.b)


ScaleVariable = Constant | ScaledBeta


class KernelKind(enum.IntEnum):
    """How ``U`` enters ``Y``.

    UNIT gives ``Y = R``, DECAY gives ``Y = R exp(-lam U h)`` and
    ONE_MINUS_DECAY gives ``Y = R (1 - exp(-lam U h))``.
    """

    UNIT = 0
    DECAY = 1
    ONE_MINUS_DECAY = 2


# --------------------------------------------------------------------------
# kernel moments E[k(U)], E[k(U)^2] as functions of x = lam*h

def _decay_m1(x: float) -> float:
    return -math.expm1(-x) / x if x > 0.0 else 1.0


def _decay_m2(x: float) -> float:
    return _decay_m1(2.0 * x)


def _omd_m1(x: float) -> float:
    if x < 1e-3:
        return x / 2.0 - x * x / 6.0 + x ** 3 / 24.0
    return 1.0 - _decay_m1(x)


def _omd_m2(x: float) -> float:
    if x < 1e-3:
        return x * x / 3.0 - x ** 3 / 4.0 + 7.0 * x ** 4 / 60.0
    return 1.0 - 2.0 * _decay_m1(x) + _decay_m2(x)


@dataclass(frozen=True)
class DirichletMeanSpec:
    """Parameters of a Dirichlet mean.

    Parameters
    ----------
    delta : float
        Shape of the stick-breaking Beta(1, delta) weights.
    kernel : KernelKind
    lam : float
        Decay rate in the kernel.
    horizon : float
        Time span ``h`` multiplying ``lam * U``.
    scale : Constant or ScaledBeta
    mixture : tuple of (rate, probability), optional
        When given (ONE_MINUS_DECAY only) the rate is itself random: with
        probability ``p_j`` the draw is ``R (1 - exp(-rate_j U h)) / rate_j``.
        This is the aggregated scale variable of a superposition of OU
        factors; ``lam`` is then ignored.
    """

    delta: float
    kernel: KernelKind
    lam: float
    horizon: float
    scale: Constant | ScaledBeta
    mixture: tuple = field(default=())

    def __post_init__(self):
        if not (self.delta > 0.0 and math.isfinite(self.delta)):
            raise ValueError("delta must be positive and finite")
        if not (self.lam > 0.0 and self.horizon > 0.0):
            raise ValueError("lam and horizon must be positive")
        if self.mixture:
            if self.kernel != KernelKind.ONE_MINUS_DECAY:
                raise ValueError("mixtures are only defined for ONE_MINUS_DECAY")
            probs = np.array([p for _, p in self.mixture], dtype=float)
            rates = np.array([r for r, _ in self.mixture], dtype=float)
            if np.any(probs <= 0.0) or np.any(rates <= 0.0):
                raise ValueError("mixture rates and probabilities must be positive")
            if abs(probs.sum() - 1.0) > 1e-12:
                raise ValueError("mixture probabilities must sum to one")

    @property
    def y_bound(self) -> float:
        """Almost-sure upper bound of ``Y``."""
        rb = self.scale.bound()
        if self.kernel != KernelKind.ONE_MINUS_DECAY:
            return rb
        if self.mixture:
            return max(rb * -math.expm1(-r * self.horizon) / r
                       for r, _ in self.mixture)
        return rb * -math.expm1(-self.lam * self.horizon)

    @property
    def is_degenerate(self) -> bool:
        return self.kernel == KernelKind.UNIT and isinstance(self.scale, Constant)

    def law(self) -> tuple:
        """Flat tuple consumed by the kernels."""
        rkind, c, a, b = self.scale.code
        if self.mixture:
            rates = np.array([r for r, _ in self.mixture], dtype=np.float64)
            cum = np.cumsum([p for _, p in self.mixture], dtype=np.float64)
        else:
            rates = cum = np.empty(0, dtype=np.float64)
        return (int(self.kernel), rkind, c, a, b, float(self.lam),
                float(self.horizon), rates, cum, float(self.y_bound))

    def with_delta(self, delta: float) -> "DirichletMeanSpec":
        return DirichletMeanSpec(delta, self.kernel, self.lam, self.horizon,
                                 self.scale, self.mixture)


def sample_y(spec: DirichletMeanSpec, stream: RandomStream, size=None):
    """Draw the scale variable ``Y`` of ``spec``."""
    n = 1 if size is None else int(size)
    out = np.empty(n, dtype=np.float64)
    stream.counter = core.y_array(stream.seed, stream.stream_id, stream.counter,
                                  spec.law(), out)
    return float(out[0]) if size is None else out


def y_moments(spec: DirichletMeanSpec) -> tuple[float, float]:
    """Closed-form ``(E[Y], E[Y^2])``."""
    r1 = spec.scale.mean()
    r2 = spec.scale.second_moment()
    if spec.kernel == KernelKind.UNIT:
        return r1, r2
    if spec.mixture:
        m1 = sum(p * _omd_m1(r * spec.horizon) / r for r, p in spec.mixture)
        m2 = sum(p * _omd_m2(r * spec.horizon) / r ** 2 for r, p in spec.mixture)
        return r1 * m1, r2 * m2
    x = spec.lam * spec.horizon
    if spec.kernel == KernelKind.DECAY:
        return r1 * _decay_m1(x), r2 * _decay_m2(x)
    return r1 * _omd_m1(x), r2 * _omd_m2(x)


def dirichlet_mean_moments(spec: DirichletMeanSpec) -> tuple[float, float]:
    """``(E[M], Var[M])`` from the fixed-point moment recursion.

    Taking expectations of ``M = V Y + (1 - V) M`` gives ``E[M] = E[Y]``;
    squaring gives ``Var[M] = Var[Y] / (delta + 1)``.
    """
    m1, m2 = y_moments(spec)
    return m1, (m2 - m1 * m1) / (spec.delta + 1.0)


def dirichlet_mean_second_moment(spec: DirichletMeanSpec) -> float:
    m1, m2 = y_moments(spec)
    return (m2 + spec.delta * m1 * m1) / (1.0 + spec.delta)


def decompose_delta(delta: float) -> list[float]:
    """Split ``delta > 1`` into ``ceil(delta)`` equal shapes, each in (0, 1].

    For integer ``delta`` this gives ``delta`` blocks of shape one; for
    non-integers it is ``floor(delta) + 1`` blocks.
    """
    if not (delta > 0.0):
        raise ValueError("delta must be positive")
    if delta <= 1.0:
        return [float(delta)]
    nb = int(math.ceil(delta))
    return [delta / nb] * nb


def compose_dirichlet_mean(blocks, stream: RandomStream) -> float:
    """Combine independent block draws into one Dirichlet mean.

    Parameters
    ----------
    blocks : sequence of (shape, value)
        Independent Dirichlet-mean draws with shapes summing to the target.
    stream : RandomStream
        Source of the Gamma(shape) weights.

    Returns
    -------
    float
        ``sum_j (G_j / G) * M_j`` with ``G_j ~ Gamma(shape_j)``.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("at least one block is required")
    if len(blocks) == 1:
        return float(blocks[0][1])
    gs = [stream.gamma(shape) for shape, _ in blocks]
    total = 0.0
    for g in gs:
        total += g
    acc = 0.0
    for g, (_, m) in zip(gs, blocks):
        acc += g / total * m
    return acc


# --------------------------------------------------------------------------
# GGC examples (validation utilities, not scale laws)

@dataclass(frozen=True)
class GgcExampleSpec:
    """Stable index ``alpha_s`` in (0, 1) and tilting constant ``c_et > 0``."""

    alpha_s: float
    c_et: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha_s < 1.0):
            raise ValueError("alpha_s must lie strictly inside (0, 1)")
        if not (self.c_et > 0.0):
            raise ValueError("c_et must be positive")


def _check_alpha(alpha_s):
    if not (0.0 < alpha_s < 1.0):
        raise ValueError("alpha_s must lie strictly inside (0, 1)")


def bfry_transform(gamma_draws, uniforms, alpha_s: float):
    """``gamma / U**(1/alpha)`` applied elementwise."""
    return np.asarray(gamma_draws) / np.power(uniforms, 1.0 / alpha_s)


def sample_bfry(alpha_s: float, stream: RandomStream, size=None):
    """Draw ``gamma_{1-alpha} / U^{1/alpha}``.

    The law has density ``alpha x^{-alpha-1} (1 - e^{-x}) / Gamma(1-alpha)``
    and no finite mean.
    """
    _check_alpha(alpha_s)
    n = 1 if size is None else int(size)
    g = stream.gamma(1.0 - alpha_s, size=n)
    u = stream.uniform_open(size=n)
    out = bfry_transform(g, u, alpha_s)
    return float(out[0]) if size is None else out


def sample_tilted_bfry(alpha_s: float, c_et: float, stream: RandomStream,
                       size=None):
    """Exponentially tilted BFRY draws by rejection.

    Proposals come from :func:`sample_bfry` and are accepted with
    probability ``exp(-c_et x)``. The expected acceptance rate is
    ``(c_et + 1)**alpha - c_et**alpha``.
    """
    _check_alpha(alpha_s)
    if not (c_et > 0.0):
        raise ValueError("c_et must be positive")
    n = 1 if size is None else int(size)
    rate = tilted_acceptance_rate(alpha_s, c_et)
    accepted = []
    have = 0
    while have < n:
        batch = max(64, int(1.2 * (n - have) / rate) + 16)
        x = sample_bfry(alpha_s, stream, size=batch)
        u = stream.uniform(size=batch)
        keep = x[u < np.exp(-c_et * x)][: n - have]
        accepted.append(keep)
        have += keep.size
    out = np.concatenate(accepted)
    return float(out[0]) if size is None else out


def tilted_acceptance_rate(alpha_s: float, c_et: float) -> float:
    """``E[exp(-c_et X)]`` for ``X`` BFRY, in closed form."""
    return (c_et + 1.0) ** alpha_s - c_et ** alpha_s


def empirical_acceptance_rate(alpha_s: float, c_et: float,
                              stream: RandomStream, proposals: int) -> float:
    """Fraction of ``proposals`` BFRY draws accepted by the tilt."""
    x = sample_bfry(alpha_s, stream, size=proposals)
    u = stream.uniform(size=proposals)
    return float(np.mean(u < np.exp(-c_et * x)))


def bfry_pdf(x, alpha_s: float):
    x = np.asarray(x, dtype=float)
    return (alpha_s * x ** (-alpha_s - 1.0) * -np.expm1(-x)
            / special.gamma(1.0 - alpha_s))


def bfry_sf(x, alpha_s: float):
    """Survival function ``P(X > x)`` of the BFRY law."""
    x = np.asarray(x, dtype=float)
    a = alpha_s
    return (x ** (-a) * -np.expm1(-x) / special.gamma(1.0 - a)
            + special.gammaincc(1.0 - a, x))


def bfry_cdf(x, alpha_s: float):
    return 1.0 - bfry_sf(x, alpha_s)


def tilted_bfry_pdf(x, alpha_s: float, c_et: float):
    x = np.asarray(x, dtype=float)
    a, c = alpha_s, c_et
    norm = ((c + 1.0) ** a - c ** a) * special.gamma(1.0 - a)
    return a * x ** (-a - 1.0) * np.exp(-c * x) * -np.expm1(-x) / norm


def tilted_bfry_sf(x, alpha_s: float, c_et: float):
    """Survival function of the tilted law, via incomplete gamma functions."""
    x = np.asarray(x, dtype=float)
    a, c = alpha_s, c_et
    g1a = special.gamma(1.0 - a)
    head = x ** (-a) * (np.exp(-c * x) - np.exp(-(c + 1.0) * x))
    tail = g1a * ((c + 1.0) ** a * special.gammaincc(1.0 - a, (c + 1.0) * x)
                  - c ** a * special.gammaincc(1.0 - a, c * x))
    return (head + tail) / (((c + 1.0) ** a - c ** a) * g1a)


def tilted_bfry_cdf(x, alpha_s: float, c_et: float):
    return 1.0 - tilted_bfry_sf(x, alpha_s, c_et)


def hill_estimator(samples, k: int) -> float:
    """Hill estimate of the tail index from the ``k`` largest samples."""
    xs = np.sort(np.asarray(samples, dtype=float))[::-1]
    if not (0 < k < xs.size):
        raise ValueError("k must be in (0, n)")
    logs = np.log(xs[:k]) - math.log(xs[k])
    return float(k / logs.sum())
