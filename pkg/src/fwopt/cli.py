"""Command-line harness.

    fwopt run <config>                      multi-seed experiment -> CSVs
    fwopt equivalence <pair> [--trials N]   optimizer vs mapped FW instance
    fwopt plot <csv...> [-o out.svg]        quantile-band chart from traces
    fwopt presets <name> --T <int>          print a resolved theorem schedule

Exit codes: 0 ok, 1 usage, 2 config, 3 numerical failure, 4 equivalence
failure. FWOPT_THREADS caps the run worker count.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .equivalence import PAIRS, run_equivalence
from .errors import ConfigError, FeasibilityError, FwoptError, NumericalError
from .metrics import fmt17, parse_trace_csv, quantile_band
from .optimizers import PRESET_NAMES, ProblemConstants, preset
from .runner import execute_experiment, summary_rows, write_experiment_outputs
from .svgchart import bands_from_traces, render_png, render_svg

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_EQUIVALENCE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to status 2; usage errors are 1 here
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fwopt", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="execute a configured experiment")
    p_run.add_argument("config", help="path to a key = value config file")

    p_eq = sub.add_parser("equivalence", help="check an optimizer against its FW form")
    p_eq.add_argument("pair", choices=PAIRS)
    p_eq.add_argument("--trials", type=int, default=10)
    p_eq.add_argument("--tol", type=float, default=None,
                      help="max relative iterate deviation (default 1e-10, 1e-8 for muon pairs)")
    p_eq.add_argument("--orthogonalizer", choices=("exact", "newton_schulz"), default="exact")
    p_eq.add_argument("--ns-iters", type=int, default=20)
    p_eq.add_argument("--seed-base", type=int, default=0)

    p_plot = sub.add_parser("plot", help="render quantile bands from trace CSVs")
    p_plot.add_argument("csvs", nargs="+", help="trace CSV files from `fwopt run`")
    p_plot.add_argument("--delta", type=float, default=0.01)
    p_plot.add_argument("--metric", choices=("grad_norm", "fw_gap"), default="grad_norm")
    p_plot.add_argument("-o", "--output", default="bands.svg")
    p_plot.add_argument("--png", default=None, help="also render a matplotlib PNG here")

    p_presets = sub.add_parser("presets", help="print a resolved theorem schedule")
    p_presets.add_argument("name", choices=PRESET_NAMES)
    p_presets.add_argument("--T", type=int, required=True, dest="horizon")
    p_presets.add_argument("--D", type=float, default=1.0, dest="diameter")
    p_presets.add_argument("--L", type=float, default=1.0, dest="lipschitz")
    p_presets.add_argument("--G", type=float, default=1.0, dest="grad_bound")
    p_presets.add_argument("--sigma", type=float, default=1.0)
    p_presets.add_argument("--p", type=float, default=2.0)
    p_presets.add_argument("--delta", type=float, default=0.01)
    p_presets.add_argument("--m", type=int, default=1, dest="batch_m")
    p_presets.add_argument("--gamma", type=float, default=None)
    p_presets.add_argument("--beta1", type=float, default=None)
    return parser


def cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
    config = load_config(text)
    traces = execute_experiment(config)
    trace_path, summary_path = write_experiment_outputs(config, traces)
    rows = summary_rows(traces)[1:]
    grads = [float(row.split(",")[3]) for row in rows]
    gaps = [float(row.split(",")[4]) for row in rows]
    print(f"wrote {trace_path}")
    print(f"wrote {summary_path}")
    print(f"runs = {config.runs}")
    print(f"median avg_grad_norm = {fmt17(quantile_band(grads, 0.25)[1])}")
    print(f"median avg_gap = {fmt17(quantile_band(gaps, 0.25)[1])}")
    return EXIT_OK


def cmd_equivalence(args) -> int:
    tol = args.tol
    if tol is None:
        tol = 1e-8 if args.pair.startswith("muon") else 1e-10
    report = run_equivalence(args.pair, trials=args.trials, tolerance=tol,
                             orthogonalizer=args.orthogonalizer,
                             ns_iters=args.ns_iters, seed_base=args.seed_base)
    for trial in report.trials:
        status = "ok" if trial.max_x_dev <= tol else "FAIL"
        print(f"seed {trial.seed}: max iterate deviation {trial.max_x_dev:.3e} "
              f"(state identity {trial.max_state_dev:.3e}) {status}")
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{args.pair}: {verdict} at tolerance {tol:g} over {args.trials} trials")
    return EXIT_OK if report.passed else EXIT_EQUIVALENCE


def cmd_plot(args) -> int:
    traces = []
    for path in args.csvs:
        traces.extend(parse_trace_csv(path))
    series = bands_from_traces(traces, args.delta, metric=args.metric)
    svg = render_svg(series)
    Path(args.output).write_text(svg)
    print(f"wrote {args.output}")
    if args.png:
        render_png(series, args.png)
        print(f"wrote {args.png}")
    return EXIT_OK


def cmd_presets(args) -> int:
    constants = ProblemConstants(diameter=args.diameter, lipschitz=args.lipschitz,
                                 grad_bound=args.grad_bound, sigma=args.sigma,
                                 p=args.p, delta=args.delta)
    resolved = preset(args.name, args.horizon, constants, batch_m=args.batch_m,
                      gamma=args.gamma, beta1=args.beta1)
    print(f"name = {resolved.name}")
    print(f"horizon = {resolved.horizon}")
    print(f"eta = {fmt17(resolved.eta)}")
    print(f"gamma = {fmt17(resolved.gamma)}")
    print(f"beta1 = {fmt17(resolved.beta1)}")
    print(f"clip_m = {fmt17(resolved.clip_m) if resolved.clip_m is not None else 'none'}")
    print(f"variance_reduction = {'true' if resolved.variance_reduction else 'false'}")
    print(f"batch.first = {resolved.batch_first}")
    print(f"batch.rest = {resolved.batch_rest}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "equivalence": cmd_equivalence,
                "plot": cmd_plot, "presets": cmd_presets}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FeasibilityError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FwoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
