"""Command-line entry point: ``dcs-lab run | rate | verify | preset``."""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from dataclasses import asdict, replace
from pathlib import Path

from pydantic import ValidationError

from dcs.analysis import RateBudget, default_si_budget, rate_accounting
from dcs.errors import InvalidConfigError, InvalidParamsError, UnwritablePathError
from dcs.model import JsmModel
from shared.logging import get_logger, setup_logging
from shared.settings import LabSettings

from .acceptance import CHECKS, SuiteOptions, run_acceptance
from .runner import run_experiment, write_outputs
from .utils.state import ExperimentConfig, SiBudget, load_config

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID_CONFIG = 2
EXIT_UNWRITABLE = 3


def preset_config(kind: str) -> ExperimentConfig:
    """Ready-made sweeps for the JSM-1 and JSM-3 comparison regimes."""
    if kind == "jsm1":
        n, J, k_C, k_I, R = 256, 100, 20, 5, 8
        budget = default_si_budget(JsmModel.jsm1(k_C), k_I, n, J, m=40, R=R)
        return ExperimentConfig(
            name="jsm1-mse-vs-m",
            model="jsm1",
            n=n,
            J=J,
            k_C=k_C,
            k_I=k_I,
            # from about 2 k_C up to about 5 (k_C + k_I)
            m_values=list(range(30, 130, 10)),
            R=R,
            trials=20,
            algorithms=["separate", "doi", "texas_doi", "texas_holdem"],
            si_budget=SiBudget(m1=budget.m1, R1=budget.R1),
        )
    if kind == "jsm3":
        n, J, k_I, R = 256, 100, 20, 8
        budget = default_si_budget(JsmModel.jsm3(), k_I, n, J, m=60, R=R)
        return ExperimentConfig(
            name="jsm3-mse-vs-m",
            model="jsm3",
            n=n,
            J=J,
            k_I=k_I,
            m_values=list(range(40, 180, 20)),
            R=R,
            trials=20,
            algorithms=["doi", "texas_doi", "tecc"],
            si_budget=SiBudget(m1=budget.m1, R1=budget.R1),
        )
    raise InvalidConfigError(f"unknown preset {kind!r}")


def _apply_seed_override(config: ExperimentConfig, settings: LabSettings) -> ExperimentConfig:
    if settings.dcs_lab_seed is None:
        return config
    logger.info("Overriding base seed from environment", base_seed=settings.dcs_lab_seed)
    return ExperimentConfig.model_validate(
        {**config.model_dump(), "base_seed": settings.dcs_lab_seed}
    )


def _output_dir(
    args: argparse.Namespace, config: ExperimentConfig, settings: LabSettings
) -> Path:
    if args.out:
        return Path(args.out)
    if config.output_path:
        return Path(config.output_path)
    if settings.dcs_lab_output_dir:
        return Path(settings.dcs_lab_output_dir) / config.name
    return Path("results") / config.name


def cmd_run(args: argparse.Namespace, settings: LabSettings) -> int:
    config = _apply_seed_override(load_config(args.config), settings)
    out = _output_dir(args, config, settings)
    threads = args.threads or settings.dcs_lab_threads
    rows = run_experiment(config, threads=threads, output_dir=out)
    outputs = write_outputs(config, rows, out, deterministic=args.deterministic_csv)
    print(outputs.results)
    return EXIT_OK


def cmd_rate(args: argparse.Namespace, settings: LabSettings) -> int:
    report = rate_accounting(RateBudget(J=args.J, m=args.m, R=args.R, m1=args.m1, R1=args.R1))
    print(json.dumps(asdict(report)))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, settings: LabSettings) -> int:
    opts = SuiteOptions(quick=args.quick, threads=args.threads or settings.dcs_lab_threads)
    if settings.dcs_lab_seed is not None:
        opts = replace(opts, base_seed=settings.dcs_lab_seed)
    results = run_acceptance(opts, only=args.only)
    for result in results:
        print(
            f"[{result.status.upper():>12}] {result.number}. {result.name} "
            f"({result.seconds:.1f}s): {result.detail}"
        )
    failed = [r.number for r in results if r.status == "failed"]
    if failed:
        logger.error("Acceptance suite failed", failed=failed)
        return EXIT_FAILED
    return EXIT_OK


def cmd_preset(args: argparse.Namespace, settings: LabSettings) -> int:
    print(preset_config(args.kind).model_dump_json(indent=2, exclude_defaults=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcs-lab",
        description="Benchmark joint recovery algorithms for distributed compressed sensing.",
    )
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument(
        "--json-logs", action=argparse.BooleanOptionalAction, default=None, help="JSON log lines."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment config and write CSV results.")
    run.add_argument("--config", required=True, help="Path to a JSON experiment config.")
    run.add_argument("--out", help="Output directory (default: results/<name>).")
    run.add_argument("--threads", type=int, help="Cells evaluated concurrently.")
    run.add_argument(
        "--deterministic-csv",
        action="store_true",
        help="Write wall_time as 0.0 so repeated runs produce identical files.",
    )
    run.set_defaults(handler=cmd_run)

    rate = sub.add_parser("rate", help="Print the rate accounting of one bit budget.")
    for name in ("J", "m", "R", "m1", "R1"):
        rate.add_argument(f"--{name}", type=int, required=True)
    rate.set_defaults(handler=cmd_rate)

    verify = sub.add_parser("verify", help="Run the built-in acceptance suite.")
    verify.add_argument("--quick", action="store_true", help="Reduced trial counts.")
    verify.add_argument(
        "--only", type=int, nargs="+", choices=sorted(CHECKS), help="Run only these checks."
    )
    verify.add_argument("--threads", type=int, help="Cells evaluated concurrently.")
    verify.set_defaults(handler=cmd_verify)

    preset = sub.add_parser("preset", help="Print a ready-made experiment config.")
    preset.add_argument("kind", choices=["jsm1", "jsm3"])
    preset.set_defaults(handler=cmd_preset)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = LabSettings()
    json_logs = args.json_logs if args.json_logs is not None else settings.dcs_lab_json_logs
    setup_logging(args.log_level or settings.log_level, json_logs)

    try:
        return int(args.handler(args, settings))
    except (InvalidConfigError, InvalidParamsError, ValidationError) as exc:
        logger.error("Invalid configuration", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except UnwritablePathError as exc:
        logger.error("Cannot write output", error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE


if __name__ == "__main__":
    sys.exit(main())
