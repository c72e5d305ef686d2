"""Drive optimizer runs and record traces.

Every iterate is feasibility-checked against the constraint set (1e-9
relative); gap metrics are recorded every `gap_every` steps, since each
spectral-ball gap costs an SVD. Multi-seed experiments fan out over a thread
pool capped by FWOPT_THREADS and merge results in seed order, so output never
depends on scheduling.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import ExperimentConfig
from .constraints import ConstraintSet, fw_gap
from .errors import FeasibilityError
from .metrics import RunTrace, average_gap, average_grad_norm, fmt17, write_trace_csv
from .optimizers import (
    LionParams,
    LionState,
    MuonParams,
    MuonState,
    SfwParams,
    SfwState,
    lion_step,
    muon_step,
    sfw_step,
)
from .problems import GradOracle, grad_true
from .tensor import ParamPoint, norm

SUMMARY_HEADER = "run_id,seed,algo,avg_grad_norm,avg_gap"


def project_radially(cset: ConstraintSet, x: ParamPoint) -> ParamPoint:
    """Scale an infeasible start onto the boundary, with a warning."""
    defining = cset.defining_norm(x)
    if defining <= cset.radius:
        return x
    warnings.warn(
        f"start infeasible (norm {defining:.6g} > radius {cset.radius:.6g}); scaling onto the boundary",
        stacklevel=2)
    return x * (cset.radius / defining)


def _record(trace: RunTrace, cset: ConstraintSet, oracle: GradOracle,
            x: ParamPoint, t: int) -> None:
    grad = grad_true(oracle.objective, x)
    report = fw_gap(cset, x, grad)
    kind = "l2" if x.ndim == 1 else "frobenius"
    trace.record(t, report.gap, norm(grad, kind), report.dual_norm_value,
                 report.kkt_residual, norm(x, kind))


def run_sfw(params: SfwParams, cset: ConstraintSet, oracle: GradOracle, x1: ParamPoint,
            horizon: int, *, run_id: str = "0", seed: int = 0, algo: str = "sfw",
            gap_every: int = 1) -> RunTrace:
    trace = RunTrace(run_id=run_id, seed=seed, algo=algo)
    state = SfwState.initial(project_radially(cset, x1))
    for t in range(1, horizon + 1):
        if not cset.contains(state.x, 1e-9):
            raise FeasibilityError(f"iterate left the set at step {t}")
        if (t - 1) % gap_every == 0:
            _record(trace, cset, oracle, state.x, t)
        state, _ = sfw_step(state, params, cset, oracle)
    return trace


def run_lion(params: LionParams, oracle: GradOracle, x1: ParamPoint, horizon: int, *,
             run_id: str = "0", seed: int = 0, algo: str = "lion",
             gap_every: int = 1) -> RunTrace:
    cset = params.implied_constraint(x1.shape[0])
    trace = RunTrace(run_id=run_id, seed=seed, algo=algo)
    state = LionState.initial(project_radially(cset, x1))
    for t in range(1, horizon + 1):
        if not cset.contains(state.x, 1e-9):
            raise FeasibilityError(f"iterate left the set at step {t}")
        if (t - 1) % gap_every == 0:
            _record(trace, cset, oracle, state.x, t)
        state, _ = lion_step(state, params, oracle)
    return trace


def run_muon(params: MuonParams, oracle: GradOracle, x1: ParamPoint, horizon: int, *,
             run_id: str = "0", seed: int = 0, algo: str = "muon",
             gap_every: int = 1) -> RunTrace:
    cset = params.implied_constraint(x1.shape[0], x1.shape[1])
    trace = RunTrace(run_id=run_id, seed=seed, algo=algo)
    state = MuonState.initial(project_radially(cset, x1))
    for t in range(1, horizon + 1):
        if not cset.contains(state.x, 1e-9):
            raise FeasibilityError(f"iterate left the set at step {t}")
        if (t - 1) % gap_every == 0:
            _record(trace, cset, oracle, state.x, t)
        state, _ = muon_step(state, params, oracle)
    return trace


def _worker_count() -> int:
    raw = os.environ.get("FWOPT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _single_run(config: ExperimentConfig, index: int, x1: ParamPoint) -> RunTrace:
    seed = config.seed_base + index
    oracle = config.make_oracle(seed)
    run_id = f"r{index:04d}"
    common = dict(run_id=run_id, seed=seed, algo=config.algo_name, gap_every=config.gap_every)
    if config.sfw_params is not None:
        return run_sfw(config.sfw_params, config.cset, oracle, x1, config.horizon, **common)
    if config.lion_params is not None:
        return run_lion(config.lion_params, oracle, x1, config.horizon, **common)
    return run_muon(config.muon_params, oracle, x1, config.horizon, **common)


def execute_experiment(config: ExperimentConfig) -> list[RunTrace]:
    """Run seeds seed_base .. seed_base + runs - 1; results in seed order."""
    x1 = config.initial_point()
    workers = _worker_count()
    indices = range(config.runs)
    if workers == 1:
        return [_single_run(config, i, x1) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: _single_run(config, i, x1), indices))


def summary_rows(traces: list[RunTrace]) -> list[str]:
    rows = [SUMMARY_HEADER]
    for trace in traces:
        rows.append(",".join([trace.run_id, str(trace.seed), trace.algo,
                              fmt17(average_grad_norm(trace)), fmt17(average_gap(trace))]))
    return rows


def write_experiment_outputs(config: ExperimentConfig, traces: list[RunTrace]) -> tuple[Path, Path]:
    """Write traces.csv and summary.csv under the configured output directory."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "traces.csv"
    summary_path = out / "summary.csv"
    write_trace_csv(trace_path, traces)
    with open(summary_path, "w", newline="") as fh:
        fh.write("\n".join(summary_rows(traces)) + "\n")
    return trace_path, summary_path
