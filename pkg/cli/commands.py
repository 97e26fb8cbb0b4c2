"""Command handlers. Each returns a process exit code.

0 success, 1 numerical failure, 2 configuration or input error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import pandas as pd

from cli.parser import build_parser
from core.config import RunConfig, load_run_config
from core.config_validator import ConfigValidator
from core.dataset_io import (
    export_jost_csv,
    export_weight_csv,
    load_dataset,
    load_profile,
    save_dataset,
    save_diagnostics,
    save_potential_csv,
    save_profile,
)
from core.errors import BesselInvertError, ScatteringDataError
from core.forward import ScatteringData
from core.recover import potential_frame
from core.workflow_orchestrator import PipelineOrchestrator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INPUT = 2


def print_bound_states(data: ScatteringData) -> None:
    if not data.bound_states:
        print("No bound states.")
        return
    table = pd.DataFrame(
        [{"j": j, "tau": s.tau, "c": s.c} for j, s in enumerate(data.bound_states, start=1)]
    )
    print(table.to_string(index=False, float_format=lambda v: f"{v:.15g}"))


def cmd_generate(config: RunConfig) -> int:
    orchestrator = PipelineOrchestrator(config)
    data = orchestrator.generate()
    save_dataset(data, Path(config.dataset_path))
    if config.jost_csv_path:
        export_jost_csv(data, Path(config.jost_csv_path))
    print_bound_states(data)
    return EXIT_OK


def cmd_invert(config: RunConfig) -> int:
    orchestrator = PipelineOrchestrator(config)
    data = load_dataset(Path(config.dataset_path))
    profile, weight = orchestrator.invert(data)
    save_profile(profile, Path(config.profile_path))
    if config.weight_csv_path:
        export_weight_csv(weight, Path(config.weight_csv_path))
    if config.diagnostics_path:
        save_diagnostics(
            orchestrator.diagnostics(data, weight, profile, None), Path(config.diagnostics_path)
        )
    if len(profile.x_nodes) == 0:
        logger.error("No x node could be solved")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_recover(config: RunConfig) -> int:
    orchestrator = PipelineOrchestrator(config)
    profile = load_profile(Path(config.profile_path))
    recovered, report = orchestrator.recover(profile)
    save_potential_csv(potential_frame(recovered, report), Path(config.output_path))
    if report is not None:
        logger.info(
            "Max error %.3e, L2 error %.3e", report.max_error, report.l2_error
        )
    return EXIT_OK


def cmd_pipeline(config: RunConfig) -> int:
    orchestrator = PipelineOrchestrator(config)
    result = orchestrator.run_pipeline()
    save_potential_csv(result.frame, Path(config.output_path))
    if config.jost_csv_path:
        export_jost_csv(result.data, Path(config.jost_csv_path))
    if config.weight_csv_path:
        export_weight_csv(result.weight, Path(config.weight_csv_path))
    if config.diagnostics_path:
        save_diagnostics(result.diagnostics, Path(config.diagnostics_path))
    print_bound_states(result.data)
    if result.report is not None:
        print(
            f"max error {result.report.max_error:.3e}  "
            f"L2 error {result.report.l2_error:.3e}  "
            f"({len(result.profile.failed)} failed nodes)"
        )
    return EXIT_OK


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig], int]] = {
    "generate": cmd_generate,
    "invert": cmd_invert,
    "recover": cmd_recover,
    "pipeline": cmd_pipeline,
}


def configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        force=True,
    )


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """File values first, then every flag the user actually passed."""
    base = RunConfig()
    if args.config_file:
        base = load_run_config(Path(args.config_file), strict=True)
    return base.merged(vars(args))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args)
    try:
        config = config_from_args(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    ok, message = ConfigValidator.validate_for_command(config)
    if not ok:
        print(f"error: {message}", file=sys.stderr)
        return EXIT_INPUT

    try:
        return COMMAND_HANDLERS[config.command](config)
    except (ScatteringDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BesselInvertError as exc:
        logger.error("%s failed: %s", config.command, exc)
        return EXIT_NUMERICAL
