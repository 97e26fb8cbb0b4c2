"""Argument parser for the besselinvert command line.

Every option defaults to None so that only flags actually given override
the JSON config file.
"""

import argparse

from core.config import COMMANDS, MODELS


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)

    general = common.add_argument_group("general")
    general.add_argument("--config", dest="config_file", help="JSON run configuration")
    verbosity = general.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    general.add_argument("--workers", type=int, help="threads across x nodes (0 = auto)")

    model = common.add_argument_group("potential")
    model.add_argument("--model", choices=MODELS)
    model.add_argument("--Q", dest="Q", type=float, help="square-well depth parameter")
    model.add_argument("--R", dest="R", type=float, help="square-well radius")
    model.add_argument("--delta", type=float, help="Hulthen screening, 0<delta<1")
    model.add_argument("--ell", type=float, help="angular momentum l")

    grid = common.add_argument_group("grids")
    grid.add_argument("--rho-max", dest="rho_max", type=float)
    grid.add_argument("--step", type=float)
    grid.add_argument("--x-start", dest="x_start", type=float)
    grid.add_argument("--x-stop", dest="x_stop", type=float)
    grid.add_argument("--x-count", dest="x_count", type=int)

    solve = common.add_argument_group("solver")
    solve.add_argument("-M", "--M", dest="M", type=int, help="truncation order")
    solve.add_argument("--window", type=float, help="top fraction of the rho-grid for F-tilde")
    solve.add_argument(
        "--fit-inverse-rho",
        dest="fit_inverse_rho",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="force (or forbid) a fitted 1/rho tail; auto-detected when omitted",
    )
    solve.add_argument("--sweep-M", dest="sweep_M", type=int, nargs="+", metavar="M")
    solve.add_argument("--noise", type=float, help="multiplicative noise level in [0, 1)")
    solve.add_argument("--seed", type=int)

    recover = common.add_argument_group("recovery")
    recover.add_argument("--breakpoint", dest="breakpoints", type=float, action="append")
    recover.add_argument(
        "--exclude", dest="exclusions", type=float, nargs=2, action="append",
        metavar=("LO", "HI"), help="leave (LO, HI) out of the error report",
    )
    recover.add_argument("--trim-ends", dest="trim_ends", type=int)

    files = common.add_argument_group("files")
    files.add_argument("--dataset", dest="dataset_path")
    files.add_argument("--profile", dest="profile_path")
    files.add_argument("--output", dest="output_path")
    files.add_argument("--diagnostics", dest="diagnostics_path")
    files.add_argument("--jost-csv", dest="jost_csv_path")
    files.add_argument("--weight-csv", dest="weight_csv_path")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="besselinvert",
        description="Recover a radial potential from scattering data.",
    )
    common = _common_options()
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "generate": "write an exact benchmark dataset",
        "invert": "solve for the beta profile of a dataset",
        "recover": "turn a beta profile into the potential",
        "pipeline": "generate, invert and recover in one run",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser
