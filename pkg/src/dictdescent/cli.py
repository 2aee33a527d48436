"""Command line harness.

    dictdescent run <config.json>
    dictdescent sweep <directory>
    dictdescent plot <trace.csv> <out.svg> [--burn-in N] [--floor F]

run executes one experiment config end to end, writing the trace CSV,
the report JSON, and (when configured) the plot.  Exit code 0 means the
verdict was pass, 1 means some invariant check failed (artifacts are
still written), 2 means the config or the IO was unusable.

sweep runs every *.json in the directory in sorted order, continuing
past failures, and writes sweep_summary.csv next to the configs with
one row per run: config name, verdict, fitted rate, predicted rate.
Rate cells use kind=value tokens (for a predicted exponential law the
value is the per-step factor mu).  Exit 1 if any run failed, 2 for an
empty directory.

plot renders an existing trace on its own: log-scale gap and sigma
curves plus the better-fitting decay overlay.  Degenerate traces still
render with a warning on stderr.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError
from .runner import format_float, run_config_file

_USAGE_ERRORS = (ConfigError, ValueError, RuntimeError, OSError)


def _rate_cell(payload: dict) -> str:
    kind = payload["kind"]
    value = payload.get("value")
    if value is None:
        value = payload.get("exponent")
    if value is None:
        value = payload.get("factor")
    if value is None:
        return kind
    return f"{kind}={format_float(float(value))}"


def cmd_run(config_path: str) -> int:
    try:
        code, _ = run_config_file(config_path)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return code


def cmd_sweep(directory: str) -> int:
    if not os.path.isdir(directory):
        print(f"error: {directory!r} is not a directory", file=sys.stderr)
        return 2
    configs = sorted(name for name in os.listdir(directory) if name.endswith(".json"))
    if not configs:
        print(f"error: no *.json configs in {directory!r}", file=sys.stderr)
        return 2
    rows = []
    any_failed = False
    for name in configs:
        path = os.path.join(directory, name)
        try:
            code, report = run_config_file(path)
        except _USAGE_ERRORS as exc:
            print(f"{name}: error: {exc}", file=sys.stderr)
            rows.append((name, "error", "", ""))
            any_failed = True
            continue
        rate = report["rate"]
        rows.append(
            (
                name,
                report["verdict"],
                _rate_cell(rate["fitted"]),
                _rate_cell(rate["predicted"]),
            )
        )
        if code != 0:
            any_failed = True
    summary_path = os.path.join(directory, "sweep_summary.csv")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("config,verdict,fitted_rate,predicted_rate\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return 1 if any_failed else 0


def cmd_plot(trace_path: str, out_path: str, burn_in: int, floor: float) -> int:
    from .plotting import load_trace_csv, render_trace_plot

    try:
        rows = load_trace_csv(trace_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        warnings = render_trace_plot(rows, out_path, burn_in=burn_in, floor_rel=floor)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dictdescent",
        description="Greedy descent experiments over restricted direction dictionaries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="path to the config JSON")

    p_sweep = sub.add_parser("sweep", help="run every config in a directory")
    p_sweep.add_argument("directory", help="directory of config JSON files")

    p_plot = sub.add_parser("plot", help="render an existing trace CSV")
    p_plot.add_argument("trace", help="trace CSV path")
    p_plot.add_argument("out", help="output SVG path")
    p_plot.add_argument("--burn-in", type=int, default=5, help="fit window start (default 5)")
    p_plot.add_argument("--floor", type=float, default=1e-13, help="relative gap floor (default 1e-13)")

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "sweep":
        return cmd_sweep(args.directory)
    return cmd_plot(args.trace, args.out, args.burn_in, args.floor)


if __name__ == "__main__":
    sys.exit(main())
