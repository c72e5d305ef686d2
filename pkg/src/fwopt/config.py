"""Flat `key = value` experiment configuration with dotted section keys.

Unknown keys are hard errors (no silent typo absorption); every diagnostic
names the offending key. serialize(parse(text)) is the canonical form: sorted
keys, single spaces, one pair per line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintSet, L2Ball, LinfBall, SpectralBall
from .errors import ConfigError
from .optimizers import (
    PRESET_NAMES,
    LionParams,
    MuonParams,
    Preset,
    ProblemConstants,
    SfwParams,
    preset,
)
from .problems import (
    ConvexQuadratic,
    GaussianNoise,
    GradOracle,
    IsotropicQuadratic,
    LeastSquares,
    MatrixQuadratic,
    NoNoise,
    NoiseModel,
    Objective,
    ParetoNoise,
    constant_batches,
)

ALGO_NAMES = ("sfw", "lion", "lion+", "lion++", "muon", "muon+", "muon++")

KNOWN_KEYS = {
    "objective.kind", "objective.dim", "objective.rows", "objective.cols",
    "objective.gen_seed", "objective.n_rows",
    "noise.kind", "noise.sigma", "noise.tail_index", "noise.scale",
    "constraint.kind", "constraint.radius",
    "algo.name", "algo.eta", "algo.gamma", "algo.beta1", "algo.beta2",
    "algo.lambda", "algo.mu", "algo.clip_m", "algo.vr",
    "algo.orthogonalizer", "algo.ns_iters", "algo.batch_m",
    "algo.preset", "preset.sigma", "preset.p", "preset.delta", "preset.grad_bound",
    "run.horizon", "run.runs", "run.seed_base", "run.out_dir", "run.gap_every",
    "init.kind", "init.seed", "init.scale",
}


def parse_kv(text: str) -> dict[str, str]:
    """Parse the line-oriented format; '#' starts a comment, blanks ignored."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value in {raw!r}")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        pairs[key] = value
    return pairs


def serialize_kv(pairs: dict[str, str]) -> str:
    """Canonical form: sorted keys, 'key = value' lines."""
    return "\n".join(f"{key} = {pairs[key]}" for key in sorted(pairs)) + "\n"


class _Reader:
    """Typed access to the raw pairs with key-path diagnostics."""

    def __init__(self, pairs: dict[str, str]):
        self.pairs = dict(pairs)
        self.used: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.pairs

    def _raw(self, key: str, default):
        self.used.add(key)
        if key not in self.pairs:
            if default is _REQUIRED:
                raise ConfigError(f"{key}: required key is missing")
            return None
        return self.pairs[key]

    def str_(self, key: str, default=None, choices: tuple[str, ...] | None = None):
        raw = self._raw(key, default)
        value = default if raw is None else raw
        if value is not None and choices is not None and value not in choices:
            raise ConfigError(f"{key}: expected one of {choices}, got {value!r}")
        return value

    def int_(self, key: str, default=None, minimum: int | None = None):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            value = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc
        if minimum is not None and value < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
        return value

    def float_(self, key: str, default=None, positive: bool = False):
        raw = self._raw(key, default)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc
        if not math.isfinite(value):
            raise ConfigError(f"{key}: must be finite, got {value}")
        if positive and value <= 0:
            raise ConfigError(f"{key}: must be positive, got {value}")
        return value

    def bool_(self, key: str, default=False):
        raw = self._raw(key, "true" if default else "false")
        if raw is None:
            return default
        if raw not in ("true", "false"):
            raise ConfigError(f"{key}: expected true or false, got {raw!r}")
        return raw == "true"

    def reject_unused(self) -> None:
        stray = set(self.pairs) - self.used
        if stray:
            raise ConfigError(f"keys not applicable to this configuration: {sorted(stray)}")


class _Required:
    pass


_REQUIRED = _Required()


@dataclass
class ExperimentConfig:
    """Fully validated experiment: ready-to-run factories plus raw pairs."""

    objective: Objective
    noise: NoiseModel
    cset: ConstraintSet
    algo_name: str
    horizon: int
    runs: int
    seed_base: int
    out_dir: str
    gap_every: int
    batch_m: int
    init_kind: str
    init_seed: int
    init_scale: float
    sfw_params: SfwParams | None = None
    lion_params: LionParams | None = None
    muon_params: MuonParams | None = None
    preset_used: Preset | None = None
    raw_pairs: dict[str, str] = field(default_factory=dict)

    def batch_schedule(self):
        if self.preset_used is not None:
            return self.preset_used.batch_schedule()
        return constant_batches(self.batch_m)

    def make_oracle(self, seed: int) -> GradOracle:
        return GradOracle(self.objective, self.noise, batch_schedule=self.batch_schedule(), seed=seed)

    def initial_point(self) -> np.ndarray:
        shape = self.objective.shape
        if self.init_kind == "zeros":
            return np.zeros(shape)
        if self.init_kind == "boundary":
            ones = np.ones(shape)
            return ones * (self.cset.radius / self.cset.defining_norm(ones))
        rng = np.random.default_rng(self.init_seed)
        return self.init_scale * rng.standard_normal(shape)


def _build_objective(r: _Reader) -> Objective:
    kind = r.str_("objective.kind", _REQUIRED,
                  choices=("isotropic_quadratic", "matrix_quadratic", "convex_quadratic", "least_squares"))
    if kind == "isotropic_quadratic":
        return IsotropicQuadratic(dim=r.int_("objective.dim", _REQUIRED, minimum=1))
    if kind == "matrix_quadratic":
        return MatrixQuadratic(rows=r.int_("objective.rows", _REQUIRED, minimum=1),
                               cols=r.int_("objective.cols", _REQUIRED, minimum=1))
    if kind == "convex_quadratic":
        dim = r.int_("objective.dim", _REQUIRED, minimum=1)
        rng = np.random.default_rng(r.int_("objective.gen_seed", 0))
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        a = q @ np.diag(rng.uniform(0.1, 3.0, size=dim)) @ q.T
        return ConvexQuadratic(a=0.5 * (a + a.T), b=rng.standard_normal(dim))
    dim = r.int_("objective.dim", _REQUIRED, minimum=1)
    n_rows = r.int_("objective.n_rows", _REQUIRED, minimum=1)
    rng = np.random.default_rng(r.int_("objective.gen_seed", 0))
    rows = rng.standard_normal((n_rows, dim))
    return LeastSquares(rows=rows, targets=rng.standard_normal(n_rows))


def _build_noise(r: _Reader) -> NoiseModel:
    kind = r.str_("noise.kind", "none", choices=("none", "gaussian", "pareto"))
    if kind == "none":
        return NoNoise()
    if kind == "gaussian":
        return GaussianNoise(sigma=r.float_("noise.sigma", 1.0, positive=True))
    return ParetoNoise(tail_index=r.float_("noise.tail_index", _REQUIRED, positive=True),
                       scale=r.float_("noise.scale", 1.0, positive=True))


def _build_constraint(r: _Reader, objective: Objective, lam: float | None) -> ConstraintSet:
    is_matrix = len(objective.shape) == 2
    default_kind = "spectral" if is_matrix else "linf"
    kind = r.str_("constraint.kind", default_kind, choices=("linf", "l2", "spectral"))
    default_radius = None if lam is None else 1.0 / lam
    radius = r.float_("constraint.radius", default_radius, positive=True)
    if radius is None:
        raise ConfigError("constraint.radius: required unless algo.lambda determines it")
    if kind == "spectral":
        if not is_matrix:
            raise ConfigError("constraint.kind: spectral requires a matrix objective")
        return SpectralBall(radius=radius, rows=objective.shape[0], cols=objective.shape[1])
    if is_matrix:
        raise ConfigError(f"constraint.kind: {kind} requires a vector objective")
    dim = objective.shape[0]
    return LinfBall(radius=radius, dim=dim) if kind == "linf" else L2Ball(radius=radius, dim=dim)


def _check_radius_matches_lambda(cset: ConstraintSet, lam: float) -> None:
    # The decayed update lives on the ball of radius 1/lambda; recording
    # against any other ball is incoherent.
    if abs(cset.radius - 1.0 / lam) > 1e-12 * cset.radius:
        raise ConfigError(
            f"constraint.radius: {cset.radius} conflicts with algo.lambda (implies {1.0 / lam})")


def _grad_norm_bound(objective: Objective, cset: ConstraintSet) -> float:
    """Coarse sup of ||grad F|| over the ball, for the clipping presets."""
    sup_l2 = {LinfBall: lambda c: c.radius * math.sqrt(c.dim),
              L2Ball: lambda c: c.radius,
              SpectralBall: lambda c: c.radius * math.sqrt(min(c.rows, c.cols))}[type(cset)](cset)
    if isinstance(objective, (IsotropicQuadratic, MatrixQuadratic)):
        return sup_l2
    if isinstance(objective, ConvexQuadratic):
        return objective.lipschitz() * sup_l2 + float(np.linalg.norm(objective.b))
    mean_abs_target = float(np.mean(np.abs(objective.targets)))
    row_scale = float(np.max(np.linalg.norm(objective.rows, axis=1)))
    return objective.lipschitz() * sup_l2 + row_scale * mean_abs_target


def load_config(text: str) -> ExperimentConfig:
    """Parse, validate, and assemble an experiment from config text."""
    pairs = parse_kv(text)
    r = _Reader(pairs)

    objective = _build_objective(r)
    noise = _build_noise(r)
    algo = r.str_("algo.name", _REQUIRED, choices=ALGO_NAMES)
    is_matrix = len(objective.shape) == 2
    if algo.startswith("muon") and not is_matrix:
        raise ConfigError("algo.name: muon variants need a matrix objective")
    if algo.startswith("lion") and is_matrix:
        raise ConfigError("algo.name: lion variants need a vector objective")

    horizon = r.int_("run.horizon", _REQUIRED, minimum=1)
    runs = r.int_("run.runs", 1, minimum=1)
    seed_base = r.int_("run.seed_base", 0)
    out_dir = r.str_("run.out_dir", "out")
    gap_every = r.int_("run.gap_every", 1, minimum=1)
    batch_m = r.int_("algo.batch_m", 1, minimum=1)
    init_kind = r.str_("init.kind", "boundary", choices=("boundary", "zeros", "gaussian"))
    init_seed = r.int_("init.seed", 0)
    init_scale = r.float_("init.scale", 1.0, positive=True)

    clip_m = r.float_("algo.clip_m", None, positive=True)
    preset_used = None
    sfw_params = lion_params = muon_params = None

    if algo == "sfw":
        cset = _build_constraint(r, objective, lam=None)
        preset_name = r.str_("algo.preset", None, choices=PRESET_NAMES)
        if preset_name is not None:
            constants = ProblemConstants(
                diameter=cset.diameter(),
                lipschitz=objective.lipschitz(),
                grad_bound=r.float_("preset.grad_bound", _grad_norm_bound(objective, cset), positive=True),
                sigma=r.float_("preset.sigma", getattr(noise, "sigma", 1.0), positive=True),
                p=r.float_("preset.p", 2.0, positive=True),
                delta=r.float_("preset.delta", 0.01, positive=True),
            )
            gamma = r.float_("algo.gamma", None)
            beta1 = r.float_("algo.beta1", None)
            preset_used = preset(preset_name, horizon, constants, batch_m=batch_m,
                                 gamma=gamma, beta1=beta1)
            sfw_params = preset_used.sfw_params()
        else:
            sfw_params = SfwParams.constant(
                eta=r.float_("algo.eta", _REQUIRED, positive=True),
                gamma=r.float_("algo.gamma", _REQUIRED, positive=True),
                beta1=r.float_("algo.beta1", _REQUIRED),
                clip_m=clip_m,
                variance_reduction=r.bool_("algo.vr", False),
            )
    elif algo.startswith("lion"):
        lam = r.float_("algo.lambda", _REQUIRED, positive=True)
        cset = _build_constraint(r, objective, lam=lam)
        _check_radius_matches_lambda(cset, lam)
        needs_clip = algo in ("lion+", "lion++")
        if needs_clip and clip_m is None:
            raise ConfigError("algo.clip_m: required for the clipped lion variants")
        try:
            lion_params = LionParams.constant(
                beta1=r.float_("algo.beta1", 0.9),
                beta2=r.float_("algo.beta2", 0.99),
                eta=r.float_("algo.eta", _REQUIRED, positive=True),
                lam=lam,
                clip_m=clip_m if needs_clip else None,
                variance_reduction=(algo == "lion++"),
            )
        except ValueError as exc:
            raise ConfigError(f"algo: {exc}") from exc
    else:
        lam = r.float_("algo.lambda", _REQUIRED, positive=True)
        cset = _build_constraint(r, objective, lam=lam)
        _check_radius_matches_lambda(cset, lam)
        needs_clip = algo in ("muon+", "muon++")
        if needs_clip and clip_m is None:
            raise ConfigError("algo.clip_m: required for the clipped muon variants")
        try:
            muon_params = MuonParams.constant(
                mu=r.float_("algo.mu", 0.95),
                eta=r.float_("algo.eta", _REQUIRED, positive=True),
                lam=lam,
                clip_m=clip_m if needs_clip else None,
                variance_reduction=(algo == "muon++"),
                orthogonalizer=r.str_("algo.orthogonalizer", "exact", choices=("exact", "newton_schulz")),
                ns_iters=r.int_("algo.ns_iters", 20, minimum=1),
            )
        except ValueError as exc:
            raise ConfigError(f"algo: {exc}") from exc

    r.reject_unused()
    return ExperimentConfig(
        objective=objective, noise=noise, cset=cset, algo_name=algo,
        horizon=horizon, runs=runs, seed_base=seed_base, out_dir=out_dir,
        gap_every=gap_every, batch_m=batch_m, init_kind=init_kind,
        init_seed=init_seed, init_scale=init_scale,
        sfw_params=sfw_params, lion_params=lion_params, muon_params=muon_params,
        preset_used=preset_used, raw_pairs=pairs,
    )
