"""Quantile-band convergence charts.

The primary output is a hand-assembled SVG (fixed 800x500 viewBox, polylines
and axes only) so that identical inputs give byte-identical files. A
matplotlib PNG can be rendered alongside for reports.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .metrics import QuantileBand, RunTrace, band_over_checkpoints

WIDTH, HEIGHT = 800, 500
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 80, 30, 30, 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_FLOOR = 1e-300


def bands_from_traces(traces: list[RunTrace], delta: float,
                      metric: str = "grad_norm") -> list[QuantileBand]:
    """Group traces by algorithm (first-appearance order) and band the running
    mean of the chosen metric across runs at every recorded checkpoint."""
    if metric not in ("grad_norm", "fw_gap"):
        raise ValueError(f"unknown metric {metric!r}")
    order: list[str] = []
    groups: dict[str, list[RunTrace]] = {}
    for trace in traces:
        if trace.algo not in groups:
            order.append(trace.algo)
            groups[trace.algo] = []
        groups[trace.algo].append(trace)

    series = []
    for label in order:
        runs = groups[label]
        grid = runs[0].steps
        for run in runs:
            if run.steps != grid:
                raise ConfigError(f"runs of {label!r} record different checkpoint grids")
        running = np.empty((len(runs), len(grid)))
        for i, run in enumerate(runs):
            values = np.asarray(getattr(run, metric))
            running[i] = np.cumsum(values) / np.arange(1, len(values) + 1)
        series.append(band_over_checkpoints(label, grid, running, delta))
    return series


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _log_ticks(lo: float, hi: float) -> list[float]:
    first = math.ceil(lo)
    last = math.floor(hi)
    if first > last:
        return [lo, hi]
    ticks = list(range(first, last + 1))
    stride = max(1, len(ticks) // 6)
    return [float(t) for t in ticks[::stride]]


def render_svg(series: list[QuantileBand]) -> str:
    """Log-y chart with one band (median solid, quantiles dashed) per series."""
    if not series:
        raise ValueError("nothing to plot")
    xs = sorted({t for s in series for t in s.checkpoints})
    x_min, x_max = xs[0], xs[-1]
    if x_max == x_min:
        x_max = x_min + 1
    all_vals = [max(v, _FLOOR) for s in series for seq in (s.lower, s.median, s.upper) for v in seq]
    y_lo = math.log10(min(all_vals))
    y_hi = math.log10(max(all_vals))
    if y_hi - y_lo < 1e-9:
        y_lo -= 1.0
        y_hi += 1.0
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(t: float) -> float:
        return MARGIN_LEFT + plot_w * (t - x_min) / (x_max - x_min)

    def py(v: float) -> float:
        lv = math.log10(max(v, _FLOOR))
        return MARGIN_TOP + plot_h * (1.0 - (lv - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{HEIGHT - MARGIN_BOTTOM}" x2="{WIDTH - MARGIN_RIGHT}" '
        f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black" stroke-width="1"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black" stroke-width="1"/>',
    ]
    for exp in _log_ticks(y_lo, y_hi):
        y = py(10.0 ** exp)
        parts.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{_fmt(y)}" x2="{MARGIN_LEFT}" '
                     f'y2="{_fmt(y)}" stroke="black" stroke-width="1"/>')
        label = f"1e{int(exp)}" if exp == int(exp) else f"{10.0 ** exp:.3g}"
        parts.append(f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end" '
                     f'font-family="monospace" font-size="12">{label}</text>')
    n_x_ticks = min(5, len(xs))
    for i in range(n_x_ticks):
        t = xs[0] + (xs[-1] - xs[0]) * i // max(1, n_x_ticks - 1) if n_x_ticks > 1 else xs[0]
        x = px(t)
        parts.append(f'<line x1="{_fmt(x)}" y1="{HEIGHT - MARGIN_BOTTOM}" x2="{_fmt(x)}" '
                     f'y2="{HEIGHT - MARGIN_BOTTOM + 5}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{HEIGHT - MARGIN_BOTTOM + 20}" text-anchor="middle" '
                     f'font-family="monospace" font-size="12">{int(t)}</text>')
    parts.append(f'<text x="{MARGIN_LEFT + plot_w // 2}" y="{HEIGHT - 15}" text-anchor="middle" '
                 f'font-family="monospace" font-size="13">step</text>')

    def polyline(points_t, points_v, color, dashed):
        coords = " ".join(f"{_fmt(px(t))},{_fmt(py(v))}" for t, v in zip(points_t, points_v))
        dash = ' stroke-dasharray="5,4"' if dashed else ""
        width = 1 if dashed else 2
        return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>'

    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        parts.append(polyline(s.checkpoints, s.lower, color, dashed=True))
        parts.append(polyline(s.checkpoints, s.upper, color, dashed=True))
        parts.append(polyline(s.checkpoints, s.median, color, dashed=False))
        ly = MARGIN_TOP + 16 + 18 * i
        lx = WIDTH - MARGIN_RIGHT - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 30}" y="{ly}" font-family="monospace" '
                     f'font-size="12">{s.label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_png(series: list[QuantileBand], path) -> None:
    """Matplotlib rendering of the same bands, for reports."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 5))
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        ax.plot(s.checkpoints, s.median, color=color, label=s.label)
        ax.plot(s.checkpoints, s.lower, color=color, linestyle="--", linewidth=0.8)
        ax.plot(s.checkpoints, s.upper, color=color, linestyle="--", linewidth=0.8)
        ax.fill_between(s.checkpoints, s.lower, s.upper, color=color, alpha=0.15)
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("running mean")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
