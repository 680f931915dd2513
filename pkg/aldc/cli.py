"""
Command-line front end.

    aldc gen    --config C [--seed S] [--out DIR]
    aldc run    --config C [--seed S] [--out DIR] [--data DIR]
    aldc ablate --config C [--seed S] [--out DIR] [--data DIR] [--components]
    aldc sweep  --config C [--seed S] [--out DIR] --param P --values v1,v2 [...]
    aldc report [--out DIR]

Every output file lands under --out with a fixed name. stdout carries only
the summary table; logs go to stderr.

Exit codes: 0 success, 1 config/data errors, 2 bad flags.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from aldc.config import Settings
from aldc.core import ALDCError, DataFormatError, validate_config
from aldc.data.generator import generate_benchmark
from aldc.data.models import ExperimentConfig, ReportRow, RunReport, SessionData
from aldc.data.store import (
    avg_consistent,
    emitted_average,
    read_benchmark,
    read_config,
    read_report,
    report_cells,
    write_benchmark,
    write_config,
    write_report,
)
from aldc.engine.protocol import (
    SWEEP_PARAMETERS,
    run_ablation,
    run_component_ablation,
    run_experiment,
    sweep,
)
from aldc.utils.logger import configure_logging

logger = logging.getLogger(__name__)

REPORT_FILE = "report.csv"
ABLATION_FILE = "ablation.csv"
COMPONENTS_FILE = "components.csv"
SWEEP_FILE = "sweep.csv"
CONFIG_FILE = "config.cfg"
REPORT_FILES = (REPORT_FILE, ABLATION_FILE, COMPONENTS_FILE, SWEEP_FILE)


def _float_list(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aldc",
        description="Generalized semi-supervised FSCIL simulation with ALT thresholds and B2N calibration",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_config: bool = True) -> None:
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config (key=value lines)")
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help=f"output directory (default {Settings.OUTPUT_DIR})")

    common(sub.add_parser("gen", help="generate and write a synthetic benchmark"))

    run = sub.add_parser("run", help="run one experiment")
    common(run)
    run.add_argument("--data", default=None, help="benchmark directory written by gen")

    ablate = sub.add_parser("ablate", help="run every strategy on one benchmark")
    common(ablate)
    ablate.add_argument("--data", default=None, help="benchmark directory written by gen")
    ablate.add_argument(
        "--components",
        action="store_true",
        help="ablate components (baseline, alt, b2n, aldc) instead of strategies",
    )

    sweep_p = sub.add_parser("sweep", help="sweep parameters over a Cartesian grid")
    common(sweep_p)
    sweep_p.add_argument("--param", action="append", required=True, choices=SWEEP_PARAMETERS)
    sweep_p.add_argument("--values", action="append", required=True, type=_float_list)

    common(sub.add_parser("report", help="re-read reports under --out and check them"), needs_config=False)
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = read_config(args.config)
    if args.seed is not None:
        config = validate_config(config.model_copy(update={"seed": args.seed}))
    return config


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out if args.out is not None else Settings.OUTPUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_table(rows: Sequence[ReportRow]) -> None:
    width = max(len("run"), *(len(r.label) for r in rows))
    n_sessions = max(len(r.session_acc) for r in rows)
    header = ["run".ljust(width)] + [f"{t:>7}" for t in range(n_sessions)] + [f"{'Avg':>7}"]
    print(" ".join(header))
    for r in rows:
        cells = [r.label.ljust(width)] + [f"{a:7.2f}" for a in r.session_acc] + [f"{r.avg:7.2f}"]
        print(" ".join(cells))


def _summary(reports: Sequence[RunReport]) -> None:
    rows = []
    for report in reports:
        cells = report_cells(report)
        rows.append(
            ReportRow(
                label=report.label,
                session_acc=tuple(float(c) for c in cells),
                avg=emitted_average(cells),
            )
        )
    _print_table(rows)


def _cmd_gen(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    sessions = generate_benchmark(config)
    write_benchmark(out, sessions)
    write_config(out / CONFIG_FILE, config)
    print(f"wrote {len(sessions)} sessions to {out}")
    return 0


def _sessions(args: argparse.Namespace, config: ExperimentConfig) -> Optional[List[SessionData]]:
    return read_benchmark(args.data, config) if args.data else None


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    report = run_experiment(config, _sessions(args, config))
    write_report(out / REPORT_FILE, report)
    write_config(out / CONFIG_FILE, config)
    _summary([report])
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    runner = run_component_ablation if args.components else run_ablation
    reports = list(runner(config, _sessions(args, config)).values())
    write_report(out / (COMPONENTS_FILE if args.components else ABLATION_FILE), reports)
    write_config(out / CONFIG_FILE, config)
    _summary(reports)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    grid: Dict[str, List[float]] = {}
    for name, values in zip(args.param, args.values):
        if name in grid:
            raise ALDCError(f"parameter {name} given twice")
        grid[name] = values
    reports = sweep(config, grid)
    write_report(out / SWEEP_FILE, reports)
    write_config(out / CONFIG_FILE, config)
    _summary(reports)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    out = Path(args.out if args.out is not None else Settings.OUTPUT_DIR)
    found = [out / name for name in REPORT_FILES if (out / name).exists()]
    if not found:
        raise DataFormatError(f"no report files under {out}")
    rows: List[ReportRow] = []
    for path in found:
        for row in read_report(path):
            if not avg_consistent(row):
                raise DataFormatError(f"{path.name}: Avg of run {row.label!r} does not match its sessions")
            rows.append(row)
    _print_table(rows)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "run": _cmd_run,
    "ablate": _cmd_ablate,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "sweep" and len(args.param) != len(args.values):
            parser.error("every --param needs exactly one --values list")
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2

    try:
        Settings.validate()
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    configure_logging(Settings.LOG_LEVEL, Settings.LOG_FORMAT)

    try:
        return _COMMANDS[args.command](args)
    except (ALDCError, OSError) as exc:
        logger.debug("[CLI] command=%s failed", args.command, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
