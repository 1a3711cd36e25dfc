"""Command-line entry point: ``afcpol {benchmark,echo,tomo,sweep}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, RunConfig, load_config
from .memory import BandwidthError
from .tomography import MLEConvergenceError, TomographyError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("afcpol")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat TOML run configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", metavar="DIR", help="override the output directory")
    common.add_argument("--no-plot", action="store_true", help="skip SVG figures")
    common.add_argument("--workers", type=int, help="parallel sweep workers")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="afcpol", description=(
        "Simulate polarization-qubit storage in a dual-rail AFC memory and compare "
        "with the classical measure-and-prepare benchmark."))
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("benchmark", parents=[common], help="classical fidelity curves vs mu")
    sub.add_parser("echo", parents=[common], help="AFC echo arrival-time histogram")
    sub.add_parser("tomo", parents=[common], help="six-state tomography and fringe scans")
    sub.add_parser("sweep", parents=[common], help="mean fidelity vs mu with benchmark lines")
    return parser


def build_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = args.out
    if args.workers is not None:
        changes["workers"] = args.workers
    try:
        return cfg.with_(**changes) if changes else cfg
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    from . import pipeline

    commands = {
        "benchmark": pipeline.cmd_benchmark,
        "echo": pipeline.cmd_echo,
        "tomo": pipeline.cmd_tomo,
        "sweep": pipeline.cmd_sweep,
    }
    try:
        cfg = build_config(args)
        pipeline.write_config_snapshot(cfg)
        files = commands[args.command](cfg, plot=not args.no_plot)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BandwidthError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MLEConvergenceError, TomographyError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name, path in files.items():
        print(f"{name}: {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
