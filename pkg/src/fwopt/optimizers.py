"""Step rules for the Frank-Wolfe family and its sign/orthogonalized instances.

All step functions are pure: old state in, new state out, plus a StepInfo with
the intermediate quantities (useful for tracing and for the equivalence
suites). Update order within a step is frozen; reordering breaks the exact
trace equivalences between the momentum forms and the Frank-Wolfe form.

The variance-reduced update adds (1 - gamma_t) * 1[t >= 2] *
(grad f(x_t; Xi_t) - grad f(x_{t-1}; Xi_t)) to the momentum, with the
correction evaluated on *unclipped* gradients at both points even when the
clipped g-bar feeds the rest of the step. That asymmetry is deliberate and
test-pinned.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet, LinfBall, SpectralBall
from .errors import FeasibilityError, MappingDomainError, NumericalError
from .problems import GradOracle, clip
from .tensor import ParamPoint, polar_factor_exact, polar_factor_newton_schulz

Schedule = Callable[[int], float]


def const_schedule(value: float) -> Schedule:
    return lambda t: value


def cosine_schedule(eta_max: float, eta_min: float, horizon: int) -> Schedule:
    """Cosine decay from eta_max at t=1 to eta_min at t=T."""
    if horizon < 2:
        return const_schedule(eta_max)

    def eta(t: int) -> float:
        frac = (min(t, horizon) - 1) / (horizon - 1)
        return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + math.cos(math.pi * frac))

    return eta


def _require_finite(arr: ParamPoint, what: str, t: int) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{what} became non-finite at step {t}")


def _momentum_mix(beta: float, gamma: float) -> float:
    """Coefficient beta_t / (1 - gamma_t) of the momentum in the LMO direction."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if gamma == 1.0:
        if beta != 0.0:
            raise ValueError("gamma = 1 forces beta_1 = 0")
        return 0.0
    ratio = beta / (1.0 - gamma)
    if not 0.0 <= ratio <= 1.0 + 1e-12:
        raise ValueError(f"beta_1 must lie in [0, 1 - gamma]; got beta={beta}, gamma={gamma}")
    return min(ratio, 1.0)


# ---------------------------------------------------------------------------
# Stochastic Frank-Wolfe (plain / clipped / variance-reduced / both)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SfwParams:
    """Schedules and switches for the Frank-Wolfe step family.

    clip_m = None disables clipping; variance_reduction toggles the
    shared-sample correction term.
    """

    eta: Schedule
    gamma: Schedule
    beta1: Schedule
    clip_m: float | None = None
    variance_reduction: bool = False

    @classmethod
    def constant(cls, eta: float, gamma: float, beta1: float,
                 clip_m: float | None = None, variance_reduction: bool = False) -> "SfwParams":
        return cls(const_schedule(eta), const_schedule(gamma), const_schedule(beta1),
                   clip_m=clip_m, variance_reduction=variance_reduction)


@dataclass(frozen=True)
class SfwState:
    x: ParamPoint
    g: ParamPoint
    t: int = 1
    prev_x: ParamPoint | None = None

    @classmethod
    def initial(cls, x1: ParamPoint) -> "SfwState":
        return cls(x=np.array(x1, dtype=np.float64), g=np.zeros_like(x1, dtype=np.float64))


@dataclass(frozen=True)
class SfwStepInfo:
    raw_grad: ParamPoint
    gbar: ParamPoint
    g: ParamPoint
    g_hat: ParamPoint
    u: ParamPoint


def sfw_step(state: SfwState, params: SfwParams, cset: ConstraintSet,
             oracle: GradOracle) -> tuple[SfwState, SfwStepInfo]:
    """One Frank-Wolfe step: momentum, LMO direction, convex combination.

    Draws the stochastic gradient once; clips it if clip_m is set; if
    variance reduction is on and t >= 2, adds the unclipped gradient
    difference under the shared sample.
    """
    t = state.t
    if not cset.contains(state.x):
        raise FeasibilityError(f"iterate infeasible at step {t}")
    eta = params.eta(t)
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta_{t} = {eta} outside (0, 1]")
    gamma = params.gamma(t)
    mix = _momentum_mix(params.beta1(t), gamma)

    raw, sample = oracle.sample_grad(state.x, t)
    gbar = clip(raw, params.clip_m) if params.clip_m is not None else raw
    g = (1.0 - gamma) * state.g + gamma * gbar
    if params.variance_reduction and t >= 2:
        g = g + (1.0 - gamma) * (raw - oracle.replay_grad(state.prev_x, sample))
    _require_finite(g, "momentum", t)
    g_hat = mix * g + (1.0 - mix) * gbar
    u = cset.lmo(g_hat)
    x_new = (1.0 - eta) * state.x + eta * u
    new_state = SfwState(x=x_new, g=g, t=t + 1, prev_x=state.x)
    return new_state, SfwStepInfo(raw_grad=raw, gbar=gbar, g=g, g_hat=g_hat, u=u)


# ---------------------------------------------------------------------------
# Lion family (sign momentum with decoupled weight decay)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LionParams:
    """beta1 interpolates the update direction, beta2 drives the momentum.

    lam = 0 gives the unconstrained (no weight decay) update; the mapping to
    the Frank-Wolfe form needs lam > 0.
    """

    beta1: float
    beta2: float
    eta: Schedule
    lam: float
    clip_m: float | None = None
    variance_reduction: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.lam < 0:
            raise ValueError("weight decay lam must be nonnegative")
        _check_decayed_step(self.eta(1), self.lam, 1)

    @classmethod
    def constant(cls, beta1: float, beta2: float, eta: float, lam: float,
                 clip_m: float | None = None, variance_reduction: bool = False) -> "LionParams":
        return cls(beta1, beta2, const_schedule(eta), lam, clip_m, variance_reduction)

    def implied_constraint(self, dim: int) -> LinfBall:
        if self.lam <= 0:
            raise MappingDomainError("lam must be positive for the norm-ball interpretation")
        return LinfBall(radius=1.0 / self.lam, dim=dim)


@dataclass(frozen=True)
class LionState:
    x: ParamPoint
    m: ParamPoint
    t: int = 1
    prev_x: ParamPoint | None = None

    @classmethod
    def initial(cls, x1: ParamPoint) -> "LionState":
        return cls(x=np.array(x1, dtype=np.float64), m=np.zeros_like(x1, dtype=np.float64))


@dataclass(frozen=True)
class LionStepInfo:
    raw_grad: ParamPoint
    gbar: ParamPoint
    c: ParamPoint
    m: ParamPoint


def _check_decayed_step(eta: float, lam: float, t: int) -> None:
    if eta <= 0:
        raise ValueError(f"eta_{t} = {eta} must be positive")
    if lam * eta > 1.0 + 1e-12:
        raise ValueError(f"lam * eta_{t} = {lam * eta} exceeds 1; iterates would leave the ball")


def lion_step(state: LionState, params: LionParams, oracle: GradOracle) -> tuple[LionState, LionStepInfo]:
    """One Lion step: c_t, then x_{t+1}, then m_t, in that order.

    With clip_m set this is the clipped variant; with variance_reduction the
    correction beta_i * 1[t >= 2] * (grad f(x_t; Xi) - grad f(x_{t-1}; Xi))
    enters both c_t and m_t on unclipped gradients.
    """
    t = state.t
    eta = params.eta(t)
    _check_decayed_step(eta, params.lam, t)

    raw, sample = oracle.sample_grad(state.x, t)
    gbar = clip(raw, params.clip_m) if params.clip_m is not None else raw
    correction = None
    if params.variance_reduction and t >= 2:
        correction = raw - oracle.replay_grad(state.prev_x, sample)

    c = params.beta1 * state.m + (1.0 - params.beta1) * gbar
    if correction is not None:
        c = c + params.beta1 * correction
    _require_finite(c, "update direction", t)
    x_new = state.x - eta * (np.sign(c) + params.lam * state.x)
    m_new = params.beta2 * state.m + (1.0 - params.beta2) * gbar
    if correction is not None:
        m_new = m_new + params.beta2 * correction
    _require_finite(m_new, "momentum", t)
    new_state = LionState(x=x_new, m=m_new, t=t + 1, prev_x=state.x)
    return new_state, LionStepInfo(raw_grad=raw, gbar=gbar, c=c, m=m_new)


# ---------------------------------------------------------------------------
# Muon family (orthogonalized momentum with decoupled weight decay)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MuonParams:
    mu: float
    eta: Schedule
    lam: float
    clip_m: float | None = None
    variance_reduction: bool = False
    orthogonalizer: str = "exact"  # "exact" | "newton_schulz"
    ns_iters: int = 20

    def __post_init__(self) -> None:
        if not 0.0 <= self.mu < 1.0:
            raise ValueError("mu must lie in [0, 1)")
        if self.lam < 0:
            raise ValueError("weight decay lam must be nonnegative")
        if self.orthogonalizer not in ("exact", "newton_schulz"):
            raise ValueError(f"unknown orthogonalizer {self.orthogonalizer!r}")
        _check_decayed_step(self.eta(1), self.lam, 1)

    @classmethod
    def constant(cls, mu: float, eta: float, lam: float, clip_m: float | None = None,
                 variance_reduction: bool = False, orthogonalizer: str = "exact",
                 ns_iters: int = 20) -> "MuonParams":
        return cls(mu, const_schedule(eta), lam, clip_m, variance_reduction, orthogonalizer, ns_iters)

    def implied_constraint(self, rows: int, cols: int) -> SpectralBall:
        if self.lam <= 0:
            raise MappingDomainError("lam must be positive for the norm-ball interpretation")
        return SpectralBall(radius=1.0 / self.lam, rows=rows, cols=cols)


@dataclass(frozen=True)
class MuonState:
    x: ParamPoint
    b: ParamPoint
    t: int = 1
    prev_x: ParamPoint | None = None

    @classmethod
    def initial(cls, x1: ParamPoint) -> "MuonState":
        return cls(x=np.array(x1, dtype=np.float64), b=np.zeros_like(x1, dtype=np.float64))


@dataclass(frozen=True)
class MuonStepInfo:
    raw_grad: ParamPoint
    gbar: ParamPoint
    b: ParamPoint
    o: ParamPoint


def _orthogonalize(b: ParamPoint, params: MuonParams, t: int) -> ParamPoint:
    if not np.any(b):
        warnings.warn(f"zero momentum matrix at step {t}; orthogonalized update is zero", stacklevel=3)
        return np.zeros_like(b)
    if params.orthogonalizer == "exact":
        return polar_factor_exact(b)
    return polar_factor_newton_schulz(b, params.ns_iters)


def muon_step(state: MuonState, params: MuonParams, oracle: GradOracle) -> tuple[MuonState, MuonStepInfo]:
    """One Muon step: B_t, then its polar factor O_t, then X_{t+1}.

    The variance-reduced form adds (mu / (1 - mu)) * 1[t >= 2] times the
    unclipped gradient difference to B_t.
    """
    t = state.t
    eta = params.eta(t)
    _check_decayed_step(eta, params.lam, t)

    raw, sample = oracle.sample_grad(state.x, t)
    gbar = clip(raw, params.clip_m) if params.clip_m is not None else raw
    b = params.mu * state.b + gbar
    if params.variance_reduction and t >= 2:
        b = b + (params.mu / (1.0 - params.mu)) * (raw - oracle.replay_grad(state.prev_x, sample))
    _require_finite(b, "momentum", t)
    o = _orthogonalize(b, params, t)
    x_new = state.x - eta * (o + params.lam * state.x)
    new_state = MuonState(x=x_new, b=b, t=t + 1, prev_x=state.x)
    return new_state, MuonStepInfo(raw_grad=raw, gbar=gbar, b=b, o=o)


# ---------------------------------------------------------------------------
# Equivalence mappings
# ---------------------------------------------------------------------------


def map_lion_to_sfw(params: LionParams, dim: int) -> tuple[SfwParams, LinfBall]:
    """Parameters of the Frank-Wolfe instance that reproduces Lion exactly.

    beta_{1,t} = beta1, gamma_t = 1 - beta2, eta^{FW}_t = lam * eta_t, over
    the l-inf ball of radius 1/lam. Requires beta1 <= beta2 (the direction
    mixing coefficient beta1/beta2 must stay in [0, 1]) and lam * eta_t <= 1.
    """
    if params.beta1 > params.beta2:
        raise MappingDomainError(
            f"beta1 = {params.beta1} > beta2 = {params.beta2}: mixing coefficient leaves [0, 1]")
    lam, eta = params.lam, params.eta
    sfw = SfwParams(
        eta=lambda t: lam * eta(t),
        gamma=const_schedule(1.0 - params.beta2),
        beta1=const_schedule(params.beta1),
        clip_m=params.clip_m,
        variance_reduction=params.variance_reduction,
    )
    return sfw, params.implied_constraint(dim)


def map_muon_to_sfw(params: MuonParams, rows: int, cols: int) -> tuple[SfwParams, SpectralBall]:
    """Frank-Wolfe instance reproducing Muon: beta_{1,t} = mu, gamma_t = 1 - mu,
    eta^{FW}_t = lam * eta_t, over the spectral ball of radius 1/lam.

    The mixing coefficient is exactly 1, so the LMO sees the momentum alone;
    the 1/(1 - mu) scale difference against Muon's accumulator is invisible to
    the LMO by positive-scale invariance.
    """
    lam, eta = params.lam, params.eta
    sfw = SfwParams(
        eta=lambda t: lam * eta(t),
        gamma=const_schedule(1.0 - params.mu),
        beta1=const_schedule(params.mu),
        clip_m=params.clip_m,
        variance_reduction=params.variance_reduction,
    )
    return sfw, params.implied_constraint(rows, cols)


# ---------------------------------------------------------------------------
# Theorem presets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemConstants:
    """Problem-dependent constants feeding the preset schedules."""

    diameter: float
    lipschitz: float = 1.0
    grad_bound: float = 1.0
    sigma: float = 1.0
    p: float = 2.0
    delta: float = 0.01

    def __post_init__(self) -> None:
        if min(self.diameter, self.lipschitz, self.grad_bound) <= 0 or self.sigma < 0:
            raise ValueError("problem constants must be positive")
        if not 1.0 < self.p <= 2.0:
            raise ValueError("p must lie in (1, 2]")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class Preset:
    """Resolved constant-in-t schedule for one convergence theorem."""

    name: str
    horizon: int
    eta: float
    gamma: float
    beta1: float
    clip_m: float | None
    variance_reduction: bool
    batch_first: int
    batch_rest: int

    def sfw_params(self) -> SfwParams:
        return SfwParams.constant(self.eta, self.gamma, self.beta1,
                                  clip_m=self.clip_m, variance_reduction=self.variance_reduction)

    def batch_schedule(self) -> Callable[[int], int]:
        first, rest = self.batch_first, self.batch_rest
        return lambda t: first if t == 1 else rest


PRESET_NAMES = ("thm33", "cor31", "thm41", "cor42", "thm43", "thm44")

# Analysis-free momentum defaults for the step-size-only presets; the bound
# holds for any beta1 in [0, 1 - gamma].
_DEFAULT_GAMMA = 0.1
_DEFAULT_BETA1 = 0.45


def _clamp_eta(eta: float, name: str) -> float:
    if eta <= 0:
        raise ValueError(f"{name}: step size formula yielded {eta} <= 0")
    return min(eta, 1.0)


def preset(name: str, horizon: int, constants: ProblemConstants,
           batch_m: int = 1, gamma: float | None = None, beta1: float | None = None) -> Preset:
    """Build the named theorem schedule for the given horizon and constants.

    thm33/cor31 leave (gamma, beta1) free; the remaining presets fix every
    knob. Step sizes are clamped into (0, 1] since eta is a convex-combination
    weight. Batch sizes round up to the nearest integer.
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    t_f = float(horizon)
    d = constants.diameter

    if name in ("thm33", "cor31"):
        g = _DEFAULT_GAMMA if gamma is None else gamma
        b = _DEFAULT_BETA1 if beta1 is None else beta1
        _momentum_mix(b, g)
        eta = _clamp_eta(1.0 / (d * math.sqrt(t_f)), name)
        rest = horizon if name == "cor31" else batch_m
        return Preset(name=name, horizon=horizon, eta=eta, gamma=g, beta1=b,
                      clip_m=None, variance_reduction=False, batch_first=rest, batch_rest=rest)

    if name in ("thm41", "cor42"):
        eta = _clamp_eta(1.0 / (d * t_f ** (2.0 / 3.0)), name)
        g = t_f ** (-2.0 / 3.0)
        b = 1.0 - t_f ** (-1.0 / 3.0)
        if name == "cor42":
            first, rest = int(math.ceil(t_f ** (1.0 / 3.0))), 1
        else:
            first, rest = batch_m, batch_m
        return Preset(name=name, horizon=horizon, eta=eta, gamma=g, beta1=b,
                      clip_m=None, variance_reduction=True, batch_first=first, batch_rest=rest)

    lip, grad_bound, sigma, p, delta = (constants.lipschitz, constants.grad_bound,
                                        constants.sigma, constants.p, constants.delta)
    if name == "thm43":
        g = t_f ** (-p / (3.0 * p - 2.0))
        b = (1.0 - g) * (1.0 - t_f ** (-p / (3.0 * p - 2.0)))
        m_clip = max(sigma / g ** (1.0 / p), 2.0 * grad_bound)
        eta = min(
            1.0 / (math.sqrt(lip * t_f) * d),
            (g / b) / d,
            math.sqrt(g) / (d * math.sqrt(b * t_f * lip)),
            (1.0 - g) / (20.0 * g * d * t_f * m_clip * math.log(4.0 * t_f / delta)),
            1.0 / (2.0 * t_f * d * (1.0 - b / (1.0 - g)) * m_clip * (1.0 + g)),
        )
        return Preset(name=name, horizon=horizon, eta=_clamp_eta(eta, name), gamma=g, beta1=b,
                      clip_m=m_clip, variance_reduction=False, batch_first=batch_m, batch_rest=batch_m)

    g = t_f ** (-p / (2.0 * p - 1.0))
    b = (1.0 - g) * (1.0 - t_f ** (-p / (2.0 * p - 1.0)))
    m_clip = max(sigma / g ** (1.0 / p), 2.0 * grad_bound)
    eta = min(
        1.0 / (math.sqrt(lip * t_f) * d),
        (g / b) / d,
        g ** 0.25 / (d * math.sqrt(9.0 * t_f * lip * b * math.log(3.0 * t_f / delta))),
        (1.0 - g) / (20.0 * g * d * t_f * m_clip * b * math.log(4.0 * t_f / delta)),
        1.0 / (2.0 * t_f * d * (1.0 - b / (1.0 - g)) * m_clip * (1.0 + g)),
    )
    return Preset(name=name, horizon=horizon, eta=_clamp_eta(eta, name), gamma=g, beta1=b,
                  clip_m=m_clip, variance_reduction=True, batch_first=batch_m, batch_rest=batch_m)
