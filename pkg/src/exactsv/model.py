"""OU stochastic-volatility models driven by Gamma and GGC subordinators.

Two variants share one simulator:

* ``OU_GAMMA``: the driving process is a Gamma process scaled by ``c``;
  the leverage increment is the process increment ``c * gamma``.
* ``GL_OU_GGC``: the driving process is a GGC subordinator with scale law
  ``R``; the leverage term uses only its gamma component ("gamma
  leveraging"), which keeps the transition exactly samplable.

Over a step of length ``h`` each factor ``j`` contributes
``gamma_j ~ Gamma(theta lam_j h)`` and a Dirichlet mean ``M_j`` with kernel
``R (1 - exp(-lam_j U h))``; the volatility jump in the integrated variance
is ``gamma_j M_j / lam_j``.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import parallel
from ._backend import core
from .cftp import ITERATION_CAP
from .errors import ValidationError, raise_for_code
from .ggc import (Constant, DirichletMeanSpec, KernelKind, ScaledBeta,
                  dirichlet_mean_second_moment, y_moments)
from .rng import RandomStream
from .truncation import (MACHINE_EPSILON, FixedN, StoppingBounded,
                         StoppingMean, rule_code)


class Variant(str, enum.Enum):
    OU_GAMMA = "ou-gamma"
    GL_OU_GGC = "gl-ou-ggc"


@dataclass(frozen=True)
class Factor:
    """One OU component: rate ``lambda_j``, weight ``p_j``, start ``v0_j``."""

    lambda_j: float
    p_j: float
    v0_j: float

    def __post_init__(self):
        if not (self.lambda_j > 0.0):
            raise ValidationError("lambda_j must be positive")
        if not (0.0 < self.p_j <= 1.0):
            raise ValidationError("p_j must lie in (0, 1]")
        if not (self.v0_j >= 0.0):
            raise ValidationError("v0_j must be non-negative")


@dataclass(frozen=True)
class ModelSpec:
    """Full model parameterization.

    Parameters
    ----------
    variant : Variant
    rho : float
        Leverage coefficient, at most zero.
    theta : float
        Shape rate of the subordinator, at least zero.
    scale : Constant or ScaledBeta
        ``Constant(c)`` for OU-Gamma; the law of ``R`` for GL-OU-GGC.
    factors : tuple of Factor
    r, q : float
        Continuously compounded rate and dividend yield.
    """

    variant: Variant
    rho: float
    theta: float
    scale: Constant | ScaledBeta
    factors: tuple
    r: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValidationError("at least one factor is required")
        if not (self.rho <= 0.0):
            raise ValidationError("rho must be <= 0")
        if not (self.theta >= 0.0):
            raise ValidationError("theta must be >= 0")
        if not all(math.isfinite(x) for x in (self.rho, self.theta, self.r, self.q)):
            raise ValidationError("model parameters must be finite")
        if self.variant == Variant.OU_GAMMA and not isinstance(self.scale, Constant):
            raise ValidationError("OU-Gamma requires a Constant scale")
        psum = sum(f.p_j for f in self.factors)
        if abs(psum - 1.0) > 1e-9:
            raise ValidationError("factor weights p_j must sum to one")
        lam = self.lam
        for f in self.factors:
            if abs(f.lambda_j - lam * f.p_j) > 1e-9 * lam:
                raise ValidationError("lambda_j must equal lambda * p_j")
        if 1.0 - self.rho * self.leverage_scale <= 0.0:
            raise ValidationError("log argument of kappa must be positive")

    @classmethod
    def build(cls, variant, rho, theta, scale, lambdas, v0s, r=0.0, q=0.0):
        """Construct from per-factor rates; weights follow as ``lam_j / lam``."""
        lambdas = [float(x) for x in np.atleast_1d(lambdas)]
        v0s = [float(x) for x in np.atleast_1d(v0s)]
        if len(lambdas) != len(v0s):
            raise ValidationError("lambda_j and v0_j must have equal length")
        total = sum(lambdas)
        factors = tuple(Factor(l, l / total, v) for l, v in zip(lambdas, v0s))
        return cls(Variant(variant), float(rho), float(theta), scale, factors,
                   float(r), float(q))

    @property
    def lam(self) -> float:
        return float(sum(f.lambda_j for f in self.factors))

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([f.lambda_j for f in self.factors])

    @property
    def v0(self) -> np.ndarray:
        return np.array([f.v0_j for f in self.factors])

    @property
    def leverage_scale(self) -> float:
        """``c`` for OU-Gamma (leverage on ``c gamma``), else 1."""
        return self.scale.bound() if self.variant == Variant.OU_GAMMA else 1.0

    def replace(self, **changes) -> "ModelSpec":
        fields = dict(variant=self.variant, rho=self.rho, theta=self.theta,
                      scale=self.scale, factors=self.factors, r=self.r, q=self.q)
        fields.update(changes)
        return ModelSpec(**fields)


@dataclass(frozen=True)
class Exact:
    """Exact transitions (coupling from the past)."""


@dataclass(frozen=True)
class Truncated:
    """Stick-breaking truncation with the given rule."""

    rule: FixedN | StoppingBounded = field(default_factory=StoppingBounded)


def kappa(model: ModelSpec) -> float:
    """Cumulant correction making the discounted price a martingale.

    ``-theta log(1 - rho c)`` for OU-Gamma, ``-theta log(1 - rho)`` under
    gamma leveraging.
    """
    arg = 1.0 - model.rho * model.leverage_scale
    if arg <= 0.0:
        raise ValidationError("log argument of kappa must be positive")
    return -model.theta * math.log(arg)


def factor_spec(model: ModelSpec, j: int, h: float) -> DirichletMeanSpec:
    """Dirichlet-mean spec of factor ``j`` over a step of length ``h``."""
    f = model.factors[j]
    return DirichletMeanSpec(model.theta * f.lambda_j * h,
                             KernelKind.ONE_MINUS_DECAY, f.lambda_j, h,
                             model.scale)


def aggregated_spec(model: ModelSpec, h: float) -> DirichletMeanSpec:
    """Single Dirichlet mean equivalent to the sum over factors.

    The scale variable mixes over factors with probabilities ``p_j`` and
    includes the ``1 / lambda_j`` of the integrated-variance map.
    """
    mix = tuple((f.lambda_j, f.p_j) for f in model.factors)
    return DirichletMeanSpec(model.theta * model.lam * h,
                             KernelKind.ONE_MINUS_DECAY, model.lam, h,
                             model.scale, mix)


# --------------------------------------------------------------------------
# simulation

@dataclass
class TransitionDraw:
    """One step: integrated variance, end volatilities, innovations, return."""

    tau: float
    v_end: np.ndarray
    o1: np.ndarray
    o2: np.ndarray
    lev: float
    log_return: float


@dataclass
class PathSample:
    time: float
    price: float
    draw: TransitionDraw


@dataclass
class PathBatch:
    """Simulated paths; arrays are indexed ``[path, step]`` or ``[path, step, factor]``.

    ``o1``/``o2``/``v`` are NaN where the sampler does not produce them
    (aggregated superposition, or the path-independent exact GGC pair).
    ``price[:, -1]`` is NaN when the terminal normal was skipped.
    """

    times: np.ndarray
    s0: float
    price: np.ndarray
    tau: np.ndarray
    lev: np.ndarray
    v: np.ndarray
    o1: np.ndarray
    o2: np.ndarray
    work: np.ndarray
    normals: np.ndarray
    approximate: bool
    elapsed_seconds: float = 0.0

    @property
    def trials(self) -> int:
        return self.price.shape[0]

    def log_returns(self) -> np.ndarray:
        prev = np.concatenate([np.full((self.trials, 1), self.s0),
                               self.price[:, :-1]], axis=1)
        return np.log(self.price / prev)


def _sampler_code(sampler):
    if isinstance(sampler, Exact):
        # epsilon is used by the shared-stick pair on path-dependent GGC steps
        return core.M_EXACT, 0, MACHINE_EPSILON
    if isinstance(sampler, Truncated):
        if isinstance(sampler.rule, StoppingMean):
            raise ValidationError("model samplers need FixedN or StoppingBounded")
        return rule_code(sampler.rule)
    raise TypeError(f"unknown sampler {sampler!r}")


def simulate(model: ModelSpec, s0: float, times, trials: int,
             stream: RandomStream, sampler=None, superposed: bool = False,
             path_dependent: bool | None = None,
             skip_terminal_normal: bool = False,
             independent_leverage: bool = False,
             threads: int | None = None) -> PathBatch:
    """Simulate ``trials`` price paths observed at ``times``.

    Parameters
    ----------
    model : ModelSpec
    s0 : float
        Initial price.
    times : sequence of float
        Strictly increasing observation times after zero.
    trials : int
    stream : RandomStream
        Path ``i`` draws from ``stream.split(i)``; ``stream`` is not advanced.
    sampler : Exact or Truncated, optional
        Defaults to :class:`Exact`.
    superposed : bool
        Draw one aggregated Dirichlet mean per step instead of one per
        factor. Only valid for a single step (end volatilities are lost).
    path_dependent : bool, optional
        Whether end volatilities and innovations are needed. Defaults to
        ``len(times) > 1``. Exact GL-OU-GGC paths then use the shared-stick
        pair at machine precision and are flagged ``approximate``.
    skip_terminal_normal : bool
        Leave the final Brownian draw out (conditional pricing).
    independent_leverage : bool
        Diagnostic only: draw the leverage gamma independently of the
        volatility jumps. This breaks the model's dependence structure.
    threads : int, optional
        Worker cap; results do not depend on it.
    """
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    if times.size == 0 or times[0] <= 0.0 or np.any(np.diff(times) <= 0.0):
        raise ValidationError("times must be positive and strictly increasing")
    if not (s0 > 0.0):
        raise ValidationError("s0 must be positive")
    trials = int(trials)
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    sampler = Exact() if sampler is None else sampler
    method, n_fixed, eps = _sampler_code(sampler)
    if path_dependent is None:
        path_dependent = times.size > 1
    if superposed and (path_dependent or times.size > 1):
        raise ValidationError("aggregated superposition is path-independent only")
    if times.size > 1 and not path_dependent:
        raise ValidationError("multi-date paths need path_dependent=True")
    m = times.size
    nf = len(model.factors)
    rkind, c, a, b = model.scale.code
    if model.variant == Variant.OU_GAMMA:
        rkind = core.R_CONST
    variant = core.V_OU_GAMMA if model.variant == Variant.OU_GAMMA else core.V_GL
    drift = model.r - model.q - model.lam * kappa(model)
    approximate = (not isinstance(sampler, Exact)) or (
        model.variant == Variant.GL_OU_GGC and path_dependent
        and model.theta > 0.0)

    price = np.empty((trials, m))
    tau = np.empty((trials, m))
    lev = np.empty((trials, m))
    v = np.empty((trials, m, nf))
    o1 = np.empty((trials, m, nf))
    o2 = np.empty((trials, m, nf))
    work = np.empty(trials, dtype=np.int64)
    normals = np.empty(trials, dtype=np.int64)
    lams = model.lambdas
    v0 = model.v0

    def chunk(lo, hi):
        return core.simulate_chunk(
            stream.seed, stream.stream_id, lo, variant, model.rho, model.theta,
            rkind, c, a, b, drift, lams, v0, times, float(s0), method,
            n_fixed, eps, ITERATION_CAP, bool(superposed),
            1 if path_dependent else 0, bool(skip_terminal_normal),
            bool(independent_leverage), price[lo:hi], tau[lo:hi], lev[lo:hi],
            v[lo:hi], o1[lo:hi], o2[lo:hi], work[lo:hi], normals[lo:hi])

    t0 = time.perf_counter()
    for code in parallel.run_chunks(chunk, trials, threads):
        raise_for_code(code)
    elapsed = time.perf_counter() - t0
    return PathBatch(times, float(s0), price, tau, lev, v, o1, o2, work,
                     normals, approximate, elapsed)


def _draw_at(batch, k, s_prev):
    return TransitionDraw(
        tau=float(batch.tau[0, k]), v_end=batch.v[0, k].copy(),
        o1=batch.o1[0, k].copy(), o2=batch.o2[0, k].copy(),
        lev=float(batch.lev[0, k]),
        log_return=float(math.log(batch.price[0, k] / s_prev)))


def sample_transition(model: ModelSpec, s_t: float, delta_t: float,
                      stream: RandomStream, sampler=None,
                      superposed: bool = False):
    """One step of length ``delta_t`` from ``(s_t, model.v0)``.

    Returns
    -------
    s_T : float
    draw : TransitionDraw
    """
    batch = simulate_from(model, s_t, [delta_t], stream, sampler,
                          superposed=superposed, path_dependent=False)
    return float(batch.price[0, 0]), _draw_at(batch, 0, s_t)


def sample_superposed_transition(model: ModelSpec, s_t: float, delta_t: float,
                                 stream: RandomStream, sampler=None):
    """Like :func:`sample_transition` with one aggregated Dirichlet mean."""
    return sample_transition(model, s_t, delta_t, stream, sampler,
                             superposed=True)


def sample_path(model: ModelSpec, s0: float, times, stream: RandomStream,
                sampler=None):
    """One path as a list of :class:`PathSample`."""
    batch = simulate_from(model, s0, times, stream, sampler,
                          path_dependent=True)
    out = []
    prev = s0
    for k, t in enumerate(batch.times):
        out.append(PathSample(float(t), float(batch.price[0, k]),
                              _draw_at(batch, k, prev)))
        prev = float(batch.price[0, k])
    return out


def simulate_from(model, s0, times, stream, sampler=None, **kw) -> PathBatch:
    """Single-path simulation that advances ``stream`` by one word."""
    index = stream.next_u64()
    child = stream.split(index)
    return simulate(model, s0, times, 1, child, sampler, **kw)


# --------------------------------------------------------------------------
# closed-form oracles

def deterministic_tau(model: ModelSpec, h: float) -> float:
    """Integrated variance from decaying start volatilities alone."""
    return float(sum(-math.expm1(-f.lambda_j * h) * f.v0_j / f.lambda_j
                     for f in model.factors))


def tau_moments(model: ModelSpec, h: float) -> tuple[float, float]:
    """``(E[tau], Var[tau])`` over one step from the start state."""
    mean = deterministic_tau(model, h)
    var = 0.0
    if model.theta == 0.0:
        return mean, 0.0
    for j, f in enumerate(model.factors):
        spec = factor_spec(model, j, h)
        d = spec.delta
        em = y_moments(spec)[0]
        em2 = dirichlet_mean_second_moment(spec)
        mean += d * em / f.lambda_j
        var += (d * (d + 1.0) * em2 - d * d * em * em) / f.lambda_j ** 2
    return mean, var


def model_return_moments(model: ModelSpec, delta_t: float,
                         independent_leverage: bool = False):
    """Mean and variance of the log-return over one step.

    Per factor, the jump part of the return is ``gamma_j Z_j`` with
    ``Z_j = rho a - M_j / (2 lam_j)`` (``a = c`` for OU-Gamma, 1 otherwise),
    where ``gamma_j`` and ``M_j`` are independent; the Brownian part adds
    ``E[tau]`` to the variance.
    """
    h = float(delta_t)
    tau_det = deterministic_tau(model, h)
    mean = (model.r - model.q - model.lam * kappa(model)) * h - tau_det / 2.0
    etau = tau_det
    var = 0.0
    if model.theta > 0.0:
        a = model.leverage_scale
        for j, f in enumerate(model.factors):
            spec = factor_spec(model, j, h)
            d = spec.delta
            em = y_moments(spec)[0]
            em2 = dirichlet_mean_second_moment(spec)
            lam = f.lambda_j
            etau += d * em / lam
            if independent_leverage:
                ez = -em / (2.0 * lam)
                ez2 = em2 / (4.0 * lam * lam)
                var += d * (d + 1.0) * ez2 - d * d * ez * ez
                var += (model.rho * a) ** 2 * d
                mean += d * (model.rho * a + ez)
            else:
                ez = model.rho * a - em / (2.0 * lam)
                ez2 = ((model.rho * a) ** 2 - model.rho * a * em / lam
                       + em2 / (4.0 * lam * lam))
                var += d * (d + 1.0) * ez2 - d * d * ez * ez
                mean += d * ez
    return mean, etau + var


def _dm_third_moment(spec: DirichletMeanSpec, y3: float) -> float:
    """``E[M^3]`` from the fixed point, given ``E[Y^3]``."""
    d = spec.delta
    y1, y2 = y_moments(spec)
    m1 = y1
    m2 = dirichlet_mean_second_moment(spec)

    def bmom(i, k):
        # E[V^i (1-V)^k] for V ~ Beta(1, d)
        return math.exp(math.lgamma(1 + i) + math.lgamma(d + k)
                        - math.lgamma(1 + d + i + k) - math.lgamma(1) -
                        math.lgamma(d) + math.lgamma(1 + d))

    rhs = (bmom(3, 0) * y3 + 3.0 * bmom(2, 1) * y2 * m1
           + 3.0 * bmom(1, 2) * y1 * m2)
    return rhs / (1.0 - bmom(0, 3))


def leverage_covariance(model: ModelSpec, lag: int, h: float = 1.0) -> float:
    """Exact ``Cov(y_1, y_{1+lag}^2)`` for one factor with constant ``R``.

    ``y_k`` is the log-return over ``[(k-1)h, kh]`` starting from the model's
    deterministic ``v0``. The first-step return depends on the volatility
    ``lag`` steps later only through ``o2``, and the later squared return
    depends on that volatility through a quadratic, so the covariance needs
    Dirichlet-mean moments up to order three.
    """
    if len(model.factors) != 1 or not isinstance(model.scale, Constant):
        raise ValidationError("closed form needs one factor and constant R")
    if lag < 1:
        raise ValidationError("lag must be >= 1")
    f = model.factors[0]
    lam, v0, c = f.lambda_j, f.v0_j, model.scale.c
    rho_a = model.rho * model.leverage_scale
    spec = factor_spec(model, 0, h)
    d = spec.delta
    x = lam * h
    dk = [(-math.expm1(-k * x) / (k * x)) for k in (1, 2, 3)]
    y3 = c ** 3 * (1.0 - 3.0 * dk[0] + 3.0 * dk[1] - dk[2])
    m1 = y_moments(spec)[0]
    m2 = dirichlet_mean_second_moment(spec)
    m3 = _dm_third_moment(spec, y3)
    # gamma moments E[g^k]
    g1, g2 = d, d * (d + 1.0)
    g3 = g2 * (d + 2.0)
    # X = gamma * (rho_a - Mo/(2 lam)),   o2 = gamma * (c - Mo)
    # write P = rho_a - Mo/(2lam), Q = c - Mo (polynomials in Mo)
    k1 = 1.0 / (2.0 * lam)

    def e_poly(coeffs):
        mom = (1.0, m1, m2, m3)
        return sum(cf * mom[i] for i, cf in enumerate(coeffs))

    def pmul(p, q):
        out = [0.0] * (len(p) + len(q) - 1)
        for i, a in enumerate(p):
            for j, b in enumerate(q):
                out[i + j] += a * b
        return out

    P = [rho_a, -k1]
    Q = [c, -1.0]
    e_x = g1 * e_poly(P)
    e_o2 = g1 * e_poly(Q)
    e_o2sq = g2 * e_poly(pmul(Q, Q))
    cov_x_o2 = g2 * e_poly(pmul(P, Q)) - e_x * e_o2
    cov_x_o2sq = g3 * e_poly(pmul(P, pmul(Q, Q))) - e_x * e_o2sq
    decay = math.exp(-x)
    dd = -math.expm1(-x) / lam
    # v1 = decay v0 + o2 ; cov(y, v1) and cov(y, v1^2)
    cov_v1 = cov_x_o2
    cov_v1sq = 2.0 * decay * v0 * cov_x_o2 + cov_x_o2sq
    # v(lag) = e^{-x(lag-1)} v1 + xi, xi independent with mean below
    shrink = math.exp(-x * (lag - 1))
    e_xi = e_o2 * (-math.expm1(-x * (lag - 1))) / (-math.expm1(-x))
    cov_v = shrink * cov_v1
    cov_vsq = shrink * shrink * cov_v1sq + 2.0 * shrink * e_xi * cov_v1
    # later step: y = B - dd v/2 + sqrt(tau) N with B = A + rho_a G - J/2
    drift = (model.r - model.q - model.lam * kappa(model)) * h
    e_b = drift + rho_a * g1 - g1 * m1 / (2.0 * lam)
    return cov_v * dd * (1.0 - e_b) + cov_vsq * dd * dd / 4.0


def leverage_covariance_leading(model: ModelSpec, lag: int,
                                h: float = 1.0) -> float:
    """Leading-order term ``rho a theta c (1-e^{-lam h})^2 e^{-lam h (lag-1)} / lam``."""
    f = model.factors[0]
    lam = f.lambda_j
    rb = model.scale.mean()
    return (model.rho * model.leverage_scale * model.theta * rb
            * (-math.expm1(-lam * h)) ** 2 * math.exp(-lam * h * (lag - 1)) / lam)
