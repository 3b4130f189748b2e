#!/usr/bin/env python3
"""
walsh-logmeans - Main Entry Point
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from config.settings import load_config_file, settings
from src.errors import NumericError, UsageError
from src.orchestration.pipeline import ExperimentPipeline
from src.schemas import DIVERGE_TARGETS, NORMS_TARGETS, ExperimentConfig
from src.services.counterexample_service import CounterexampleService
from src.services.logmeans_service import LogMeanService
from src.services.norm_service import NormService

PROG = "walsh-logmeans"

logger = logging.getLogger(__name__)


def build_pipeline() -> ExperimentPipeline:
    log_means = LogMeanService(cache_size=settings.kernel_cache_size, direct_budget=settings.direct_kernel_budget)
    norms = NormService(max_iter=settings.luxemburg_max_iter, rtol=settings.luxemburg_rtol)
    counterexamples = CounterexampleService(
        log_means,
        norms,
        divisor=settings.omega_divisor,
        offset=settings.omega_offset,
        est1_constant=settings.est1_constant,
    )
    return ExperimentPipeline(
        log_means,
        norms,
        counterexamples,
        csv_precision=settings.csv_precision,
        default_tilde=settings.default_tilde,
    )


def _shared_flags() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    shared.add_argument("--config", help="key=value experiment file; flags override its values")
    shared.add_argument("--output", help="output file (stdout when omitted)")
    shared.add_argument("--format", choices=["csv", "json"])
    shared.add_argument("--seed", type=int)
    shared.add_argument("--workers", type=int, help="sweep points evaluated concurrently")
    shared.add_argument("--quiet-header", action="store_true", help="omit the timestamped header line")
    shared.add_argument("--verbose", action="store_true")
    shared.add_argument("--d", type=int, help="dimension")
    shared.add_argument("--K", help="per-axis resolution, comma separated or a single value")
    shared.add_argument("--B", help="Noerlund axes, comma separated 1-based labels")
    return shared


def _command(commands, shared: argparse.ArgumentParser, name: str, summary: str) -> argparse.ArgumentParser:
    return commands.add_parser(name, parents=[shared], argument_default=argparse.SUPPRESS, help=summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Logarithmic means of multiple Walsh-Fourier series")
    commands = parser.add_subparsers(dest="command", required=True)
    shared = _shared_flags()

    kernel = _command(commands, shared, "kernel", "export kernel samples and multipliers")
    kernel.add_argument("--kind", choices=["D", "F", "G"])
    kernel.add_argument("--n", type=int)

    converge = _command(commands, shared, "converge", "mean-to-function error over an order sweep")
    converge.add_argument("--sweep", help="orders, comma separated")
    converge.add_argument("--function", help="constant, rect, walsh, random-step, borderline or file:PATH")
    converge.add_argument("--param", dest="params", action="append", help="function parameter key=value")

    diverge = _command(commands, shared, "diverge", "counterexample tables and scans")
    diverge.add_argument("--what", choices=DIVERGE_TARGETS)
    diverge.add_argument("--n", type=int)
    diverge.add_argument("--nmax", type=int)
    diverge.add_argument("--beta", type=float, help="Q(u) = u log^beta(1+u)")
    diverge.add_argument("--tilde", type=int, help="uniform override for the band offset")
    diverge.add_argument("--faithful", action="store_true", help="use the unmodified band offsets")
    diverge.add_argument("--trials", type=int)
    diverge.add_argument("--r", type=int, help="number of signed translates")
    diverge.add_argument("--c", type=float, help="threshold scale")

    norms = _command(commands, shared, "norms", "inequality audits over function suites")
    norms.add_argument("--what", choices=NORMS_TARGETS)
    norms.add_argument("--sweep", help="orders, comma separated")
    norms.add_argument("--count", type=int, help="size of the random suite")
    return parser


def merge_options(args: argparse.Namespace) -> Dict[str, Any]:
    options = vars(args).copy()
    options.pop("verbose", None)
    path = options.pop("config", None)
    merged: Dict[str, Any] = load_config_file(path) if path else {}
    merged.update(options)
    return merged


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.log_level, logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _describe(error: Dict[str, Any]) -> str:
    message = str(error["msg"]).removeprefix("Value error, ")
    location = ".".join(str(part) for part in error.get("loc", ()))
    return f"{location}: {message}" if location else message


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(getattr(args, "verbose", False))

    try:
        options = merge_options(args)
        config = ExperimentConfig.model_validate(options)
    except ValidationError as exc:
        details = "; ".join(_describe(error) for error in exc.errors())
        print(f"{PROG}: error: {details}", file=sys.stderr)
        return 2
    except (UsageError, FileNotFoundError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2

    try:
        build_pipeline().execute(config)
    except (UsageError, ValidationError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ValueError, OSError, MemoryError) as exc:
        logger.error("%s failed: %s", config.command, exc)
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
