"""Per-run traces, cross-run quantile statistics, and empirical rate slopes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

CSV_HEADER = "run_id,seed,algo,t,fw_gap,grad_norm,dual_norm,kkt_residual,x_norm"


def fmt17(x: float) -> str:
    """Decimal float with 17 significant digits (lossless for binary64)."""
    return format(float(x), ".17g")


@dataclass
class RunTrace:
    """Per-iteration records of one optimizer run."""

    run_id: str
    seed: int
    algo: str
    steps: list[int] = field(default_factory=list)
    fw_gap: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    dual_norm: list[float] = field(default_factory=list)
    kkt_residual: list[float] = field(default_factory=list)
    x_norm: list[float] = field(default_factory=list)

    def record(self, t: int, fw_gap: float, grad_norm: float, dual_norm: float,
               kkt_residual: float, x_norm: float) -> None:
        if self.steps and t <= self.steps[-1]:
            raise ValueError("steps must be strictly increasing")
        for name, v in (("fw_gap", fw_gap), ("grad_norm", grad_norm), ("dual_norm", dual_norm),
                        ("kkt_residual", kkt_residual), ("x_norm", x_norm)):
            if not math.isfinite(v):
                raise ValueError(f"non-finite {name} at step {t}")
        self.steps.append(t)
        self.fw_gap.append(fw_gap)
        self.grad_norm.append(grad_norm)
        self.dual_norm.append(dual_norm)
        self.kkt_residual.append(kkt_residual)
        self.x_norm.append(x_norm)

    def __len__(self) -> int:
        return len(self.steps)

    def csv_rows(self) -> list[str]:
        rows = []
        for i, t in enumerate(self.steps):
            rows.append(",".join([
                self.run_id, str(self.seed), self.algo, str(t),
                fmt17(self.fw_gap[i]), fmt17(self.grad_norm[i]), fmt17(self.dual_norm[i]),
                fmt17(self.kkt_residual[i]), fmt17(self.x_norm[i]),
            ]))
        return rows


def average_gap(trace: RunTrace) -> float:
    """Arithmetic mean of the recorded Frank-Wolfe gaps."""
    if not trace.steps:
        raise ValueError("empty trace")
    return float(np.mean(trace.fw_gap))


def average_grad_norm(trace: RunTrace) -> float:
    """Arithmetic mean of the recorded gradient norms (the convergence criterion)."""
    if not trace.steps:
        raise ValueError("empty trace")
    return float(np.mean(trace.grad_norm))


def quantile_band(values: list[float] | np.ndarray, delta: float) -> tuple[float, float, float]:
    """(lower, median, upper) order statistics at (delta, 0.5, 1 - delta).

    Nearest-rank rule: the q-quantile of N sorted values is entry
    ceil(q * N), 1-indexed and clamped to [1, N]. No interpolation, so the
    result is exactly reproducible.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise ValueError("quantile_band needs at least one value")
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    ordered = np.sort(vals)
    n = ordered.size

    def pick(q: float) -> float:
        rank = min(max(int(math.ceil(q * n)), 1), n)
        return float(ordered[rank - 1])

    return pick(delta), pick(0.5), pick(1.0 - delta)


@dataclass(frozen=True)
class QuantileBand:
    """Per-checkpoint (lower, median, upper) order statistics across runs."""

    label: str
    delta: float
    checkpoints: list[int]
    lower: list[float]
    median: list[float]
    upper: list[float]

    def __post_init__(self) -> None:
        n = len(self.checkpoints)
        if not (len(self.lower) == len(self.median) == len(self.upper) == n):
            raise ValueError("band fields must share the checkpoint grid")
        for lo, med, hi in zip(self.lower, self.median, self.upper):
            if not lo <= med <= hi:
                raise ValueError(f"band ordering violated: {lo} <= {med} <= {hi}")


def band_over_checkpoints(label: str, grid: list[int], per_run_curves: np.ndarray,
                          delta: float) -> QuantileBand:
    """Band the rows of per_run_curves (one row per run) at every checkpoint."""
    lower, median, upper = [], [], []
    for j in range(len(grid)):
        lo, med, hi = quantile_band(per_run_curves[:, j], delta)
        lower.append(lo)
        median.append(med)
        upper.append(hi)
    return QuantileBand(label=label, delta=delta, checkpoints=list(grid),
                        lower=lower, median=median, upper=upper)


def rate_slope(pairs: list[tuple[float, float]]) -> float:
    """Least-squares slope of log(metric) against log(horizon).

    An exact power law metric = c * T^a returns a to rounding error.
    """
    if len(pairs) < 3:
        raise ValueError("need at least 3 (horizon, metric) pairs")
    ts = np.array([p[0] for p in pairs], dtype=np.float64)
    ms = np.array([p[1] for p in pairs], dtype=np.float64)
    if np.any(ts <= 0):
        raise ValueError("horizons must be positive")
    if np.any(ms <= 0):
        raise ValueError("metric values must be positive to fit a log-log slope")
    lx, ly = np.log(ts), np.log(ms)
    lx_c = lx - lx.mean()
    return float(np.dot(lx_c, ly - ly.mean()) / np.dot(lx_c, lx_c))


def write_trace_csv(path, traces: list[RunTrace]) -> None:
    lines = [CSV_HEADER]
    for trace in traces:
        lines.extend(trace.csv_rows())
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_trace_csv(path) -> list[RunTrace]:
    """Read traces back from the pinned CSV schema; errors carry line numbers."""
    traces: dict[tuple[str, str], RunTrace] = {}
    with open(path, "r") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ConfigError(f"{path}:1: expected header {CSV_HEADER!r}, got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 9:
                raise ConfigError(f"{path}:{lineno}: expected 9 fields, got {len(parts)}")
            try:
                run_id, seed, algo = parts[0], int(parts[1]), parts[2]
                t = int(parts[3])
                nums = [float(p) for p in parts[4:]]
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
            key = (run_id, algo)
            trace = traces.get(key)
            if trace is None:
                trace = RunTrace(run_id=run_id, seed=seed, algo=algo)
                traces[key] = trace
            trace.record(t, *nums)
    return list(traces.values())
