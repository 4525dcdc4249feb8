"""``hmtsinr`` command line: figure tables as CSV, parameter sweeps and the self-test."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures, selftest
from .config import ExperimentConfig, load_config, validate
from .errors import ConfigError, ParameterError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FLAGS = 3
EXIT_SELFTEST = 4


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmtsinr",
        description="SINR analysis and Monte-Carlo simulation of hexagonal multicarrier "
                    "transmission with a time-shifted Gaussian receiver pulse.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="config file, or a CSV previously written by this tool")
    common.add_argument("--seed", type=_u64, help="master seed (overrides [simulation] seed)")
    common.add_argument("--out", type=Path, help="output CSV path (default: stdout)")
    common.add_argument("--workers", type=_positive_int, help="worker processes for Monte-Carlo trials")
    common.add_argument("--trials", type=_positive_int, help="Monte-Carlo trials per point")
    common.add_argument("--mode", choices=("paper", "physical"), help="projected noise power convention")
    common.add_argument("--eq26", choices=("printed", "derived"),
                        help="quadratic constants for the closed-form receiver delay")

    helps = {
        "fig2": "receiver prototype pulses",
        "fig3": "SINR versus SNR for each spread factor",
        "fig4": "Max-SINR robustness to a mis-estimated RMS delay spread",
        "fig5": "SINR versus channel spread factor",
        "sweep": "generic sweep over snr_db, vartheta or rms_error_ratio",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)

    st = sub.add_parser("selftest", help="run oracle and invariant checks")
    st.add_argument("--only", action="append", metavar="CHECK_ID", help="run only this check (repeatable)")
    st.add_argument("--list", action="store_true", help="list check ids and exit")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    sim = {}
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.workers is not None:
        sim["workers"] = args.workers
    if args.trials is not None:
        sim["trials"] = args.trials
    if args.mode is not None:
        sim["mode"] = args.mode
    if args.eq26 is not None:
        sim["eq26"] = args.eq26
    if sim:
        cfg = cfg.updated("simulation", **sim)
    validate(cfg)
    return cfg


def _selftest(args) -> int:
    if args.list:
        for c in selftest.REGISTRY:
            print(f"{c.id:<34} {c.description}")
        return EXIT_OK
    known = {c.id for c in selftest.REGISTRY}
    unknown = sorted(set(args.only or ()) - known)
    if unknown:
        print(f"hmtsinr: unknown check id(s): {', '.join(unknown)}", file=sys.stderr)
        return EXIT_CONFIG
    results = selftest.run_selftest(set(args.only) if args.only else None)
    failed = [r.check.id for r in results if not r.passed]
    total = sum(r.seconds for r in results)
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {total:.1f}s")
    if failed:
        print("failed: " + ", ".join(failed))
        return EXIT_SELFTEST
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        return _selftest(args)
    try:
        cfg = resolve_config(args)
        table = figures.FIGURES[args.command](cfg)
    except (ConfigError, ParameterError) as exc:
        print(f"hmtsinr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = figures.to_csv(cfg, table)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    failures = table.failures
    if failures:
        print(f"hmtsinr: numerical flags present: {', '.join(sorted(set(failures)))}", file=sys.stderr)
        return EXIT_FLAGS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
