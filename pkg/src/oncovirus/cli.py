"""Command-line front end: ``oncovirus {simulate,report,sweep,validate}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .config import load_config, load_sweep
from .equilibria import HomogeneousParams, classify_regime
from .errors import BlowUpError, ConfigurationError, InputError, NumericalError, OncovirusError
from .kernel import dump_kernel_csv
from .model import validate_assumptions
from .runner import (
    REPORT_COLUMNS,
    build_config_kernel,
    compute_report,
    format_cell,
    regime_from_thresholds,
    report_summary,
    run_simulation,
    sweep_columns,
    sweep_row,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
ECHO_NAME = "config.effective.ini"


def _common(parser: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=d, help="INI configuration file")
    parser.add_argument("--out", metavar="DIR", default=d, help="output directory (overrides [output] dir)")
    parser.add_argument(
        "--set", dest="overrides", metavar="KEY=VALUE", action="append", default=d,
        help="override a config key, e.g. model.beta=2 (repeatable)",
    )
    parser.add_argument("--jobs", type=int, metavar="N", default=d, help="worker processes for sweep")
    parser.add_argument("--seed", type=int, metavar="N", default=d, help="reserved; no stochastic components")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oncovirus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "integrate the model and write trace/snapshot CSVs"),
        ("report", "thresholds, equilibria, regime and bounds as report.csv"),
        ("sweep", "report (and optionally simulate) over a parameter grid"),
        ("validate", "check the growth/incidence structural assumptions"),
    ):
        _common(sub.add_parser(name, help=text, description=text), suppress=True)
    return parser


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _prepare_out(args, cfg_dir: str, echo: str) -> str:
    out = args.out or cfg_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, ECHO_NAME), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(echo)
    return out


def _regime_text(cfg, row=None) -> str:
    try:
        if cfg.grid.eta1 == (0.0, 0.0) and cfg.grid.eta2 == (0.0, 0.0):
            return str(classify_regime(HomogeneousParams.from_model(cfg.params)))
    except OncovirusError:
        pass
    row = row or compute_report(cfg)
    return regime_from_thresholds(row["sigma1"], row["lambda1_linear"])


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.overrides or ())
    out = _prepare_out(args, cfg.output_dir, cfg.echo())
    kernel = build_config_kernel(cfg)
    if cfg.dump_kernel:
        dump_kernel_csv(kernel, os.path.join(out, "kernel"))
    trace = run_simulation(cfg, kernel)
    trace.to_csv(os.path.join(out, "trace.csv"))
    for t in sorted(trace.snapshots):
        trace.snapshot_to_csv(t, os.path.join(out, f"snapshot_t{t:g}.csv"))
    print(trace.summary())
    print(f"final sup_U={trace.sup_U[-1]:.6g} sup_V={trace.sup_V[-1]:.6g} at t={trace.times[-1]:g}")
    print(f"regime: {_regime_text(cfg)}")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = load_config(args.config, args.overrides or ())
    out = _prepare_out(args, cfg.output_dir, cfg.echo())
    row = compute_report(cfg)
    _write_csv(os.path.join(out, "report.csv"), REPORT_COLUMNS, [[format_cell(row[c]) for c in REPORT_COLUMNS]])
    summary = report_summary(row)
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary + "\n")
    print(summary)
    return EXIT_OK


def cmd_sweep(args) -> int:
    sweep = load_sweep(args.config, args.overrides or ())
    jobs = 1 if args.jobs is None else args.jobs
    if jobs < 1:
        raise ConfigurationError(f"--jobs must be >= 1, got {jobs}")
    out = _prepare_out(args, sweep.base.output_dir, sweep.echo())
    tasks = [(i, sweep.base, pt, sweep.simulate) for i, pt in enumerate(sweep.points())]
    if jobs == 1:
        results = [sweep_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(sweep_row, tasks))  # map preserves task order
    cols = sweep_columns(sweep)
    _write_csv(os.path.join(out, "sweep.csv"), cols, [[r.get(c, "") for c in cols] for r in results])
    failed = sum(r["status"] != "ok" for r in results)
    print(f"sweep: {len(results)} points, {failed} failed -> {os.path.join(out, 'sweep.csv')}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config, args.overrides or ())
    report = validate_assumptions(cfg.params.growth, cfg.params.incidence)
    print(report.format())
    if not report.all_passed:
        print(f"assumption items failed: {report.failed()}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "report": cmd_report, "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except BlowUpError as exc:
        print(f"error: numerical blow-up at t={exc.t:.17g}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigurationError, InputError) as exc:
        print(f"error: configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
