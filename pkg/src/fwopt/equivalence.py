"""Trace-equality checks between the momentum optimizers and their FW forms.

For each pair the two sides run on a shared oracle seed with mapped
parameters; the report carries the worst relative iterate deviation (entrywise
max norm) and the worst internal state-identity deviation, per trial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optimizers import (
    LionParams,
    LionState,
    MuonParams,
    MuonState,
    SfwState,
    lion_step,
    map_lion_to_sfw,
    map_muon_to_sfw,
    muon_step,
    sfw_step,
)
from .problems import ConvexQuadratic, GaussianNoise, GradOracle, MatrixQuadratic

PAIRS = ("lion", "muon", "lion+", "muon+", "lion++", "muon++")

LION_DIM = 50
LION_HORIZON = 200
MUON_SHAPE = (8, 12)
MUON_HORIZON = 100


@dataclass(frozen=True)
class TrialResult:
    seed: int
    max_x_dev: float
    max_state_dev: float


@dataclass(frozen=True)
class EquivalenceReport:
    pair: str
    tolerance: float
    trials: list[TrialResult]

    @property
    def max_deviation(self) -> float:
        return max(t.max_x_dev for t in self.trials)

    @property
    def passed(self) -> bool:
        return all(t.max_x_dev <= self.tolerance for t in self.trials)


def _max_rel_dev(a: np.ndarray, b: np.ndarray) -> float:
    """Entrywise max deviation, relative to 1 + ||reference||_max."""
    return float(np.max(np.abs(a - b)) / (1.0 + np.max(np.abs(a))))


def _random_psd_quadratic(rng: np.random.Generator, dim: int) -> ConvexQuadratic:
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    spectrum = rng.uniform(0.1, 3.0, size=dim)
    a = q @ np.diag(spectrum) @ q.T
    a = 0.5 * (a + a.T)
    return ConvexQuadratic(a=a, b=rng.standard_normal(dim))


def _lion_trial(seed: int, clip_m: float | None, vr: bool, horizon: int) -> TrialResult:
    rng = np.random.default_rng(seed)
    objective = _random_psd_quadratic(rng, LION_DIM)
    oracle = GradOracle(objective, GaussianNoise(1.0), seed=seed)
    params = LionParams.constant(beta1=0.9, beta2=0.99, eta=0.1, lam=0.1,
                                 clip_m=clip_m, variance_reduction=vr)
    sfw_params, cset = map_lion_to_sfw(params, LION_DIM)
    x1 = rng.uniform(-0.5 * cset.radius, 0.5 * cset.radius, size=LION_DIM)

    lion_state = LionState.initial(x1)
    sfw_state = SfwState.initial(x1)
    max_x = max_state = 0.0
    for _ in range(horizon):
        lion_state, lion_info = lion_step(lion_state, params, oracle)
        sfw_state, sfw_info = sfw_step(sfw_state, sfw_params, cset, oracle)
        max_x = max(max_x, _max_rel_dev(lion_state.x, sfw_state.x))
        # Proof invariants: m_t = g_t and c_t = g-hat_t.
        max_state = max(max_state, float(np.max(np.abs(lion_state.m - sfw_state.g))))
        max_state = max(max_state, float(np.max(np.abs(lion_info.c - sfw_info.g_hat))))
    return TrialResult(seed=seed, max_x_dev=max_x, max_state_dev=max_state)


def _muon_trial(seed: int, clip_m: float | None, vr: bool, horizon: int,
                orthogonalizer: str, ns_iters: int) -> TrialResult:
    rows, cols = MUON_SHAPE
    rng = np.random.default_rng(seed)
    objective = MatrixQuadratic(rows=rows, cols=cols)
    oracle = GradOracle(objective, GaussianNoise(1.0), seed=seed)
    params = MuonParams.constant(mu=0.95, eta=0.1, lam=0.1, clip_m=clip_m,
                                 variance_reduction=vr, orthogonalizer=orthogonalizer,
                                 ns_iters=ns_iters)
    sfw_params, cset = map_muon_to_sfw(params, rows, cols)
    x1 = rng.standard_normal((rows, cols))
    x1 *= 0.5 * cset.radius / np.linalg.norm(x1, 2)

    muon_state = MuonState.initial(x1)
    sfw_state = SfwState.initial(x1)
    max_x = max_state = 0.0
    for _ in range(horizon):
        muon_state, muon_info = muon_step(muon_state, params, oracle)
        sfw_state, sfw_info = sfw_step(sfw_state, sfw_params, cset, oracle)
        max_x = max(max_x, _max_rel_dev(muon_state.x, sfw_state.x))
        # Proof invariants: B_t = g_t / (1 - mu) and O_t = -lam * u_t.
        max_state = max(max_state, float(np.max(np.abs(
            muon_state.b - sfw_state.g / (1.0 - params.mu)))))
        max_state = max(max_state, float(np.max(np.abs(
            muon_info.o - (-params.lam) * sfw_info.u))))
    return TrialResult(seed=seed, max_x_dev=max_x, max_state_dev=max_state)


def run_equivalence(pair: str, trials: int = 10, tolerance: float = 1e-10,
                    orthogonalizer: str = "exact", seed_base: int = 0,
                    horizon: int | None = None, ns_iters: int = 20) -> EquivalenceReport:
    """Run the named optimizer against its mapped FW instance on shared seeds."""
    if pair not in PAIRS:
        raise ValueError(f"unknown pair {pair!r}; expected one of {PAIRS}")
    clip_m = 2.0 if pair.endswith("+") else None
    vr = pair.endswith("++")
    results = []
    for i in range(trials):
        seed = seed_base + i
        if pair.startswith("lion"):
            results.append(_lion_trial(seed, clip_m, vr, horizon or LION_HORIZON))
        else:
            results.append(_muon_trial(seed, clip_m, vr, horizon or MUON_HORIZON,
                                       orthogonalizer, ns_iters))
    return EquivalenceReport(pair=pair, tolerance=tolerance, trials=results)
