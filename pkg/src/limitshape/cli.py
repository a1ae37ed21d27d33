"""Command-line entry point for limitshape."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Optional

from .config import COMMANDS, RunConfig, load_config_file
from .errors import ConfigError, LimitShapeError
from .pipeline import run

logger = logging.getLogger("limitshape")


#one stderr handler for the whole package; --trace switches to DEBUG
def configure_logging(trace: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("limitshape")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if trace else logging.INFO)


#reads the config named on the command line and applies --seed/--out/--override
def load_run_config(args: argparse.Namespace) -> RunConfig:
    return load_config_file(
        Path(args.config),
        overrides=args.override or (),
        command=args.command,
        seed=args.seed,
        out=args.out,
    )


#handles every subcommand: they differ only in which pipeline the config selects
def cmd_run(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    started = time.perf_counter()
    manifest = run(config)
    logger.info("%s finished in %.2f s; manifest %s", config.command, time.perf_counter() - started, manifest)
    return 0


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


#usage errors share the config-error exit status; subcommand parsers inherit this class
class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


#configures the CLI surface; every command shares the same options
def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="limitshape", description="Gradient-constrained variational solver and lozenge tiling sampler")
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "minimise the surface-tension functional on the configured domain",
        "obstacles": "compute the lower and upper obstacles of the boundary data",
        "sample": "estimate the mean height of random lozenge tilings",
        "compare": "compare two fields (solver, sampler, or CSV files)",
        "diagnose": "run regularity diagnostics on a field",
        "tension-eval": "evaluate the surface tension at configured gradients",
        "enumerate": "count lozenge tilings of a small region exactly",
    }
    for command in COMMANDS:
        p = subparsers.add_parser(command, help=helps[command])
        p.add_argument("--config", required=True, help="path to the run config")
        p.add_argument("--out", help="output directory (overrides run.out)")
        p.add_argument("--seed", type=_seed, help="random seed (overrides run.seed)")
        p.add_argument("--override", action="append", metavar="SECTION.KEY=VALUE", help="override one config key; repeatable")
        p.add_argument("--trace", action="store_true", help="log per-iteration detail")
        p.set_defaults(func=cmd_run)
    return parser


#entry point used by both console script and module execution
def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.trace)
    try:
        return args.func(args)
    except LimitShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return LimitShapeError.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
