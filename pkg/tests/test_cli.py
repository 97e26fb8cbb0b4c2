import json

import numpy as np
import pandas as pd
import pytest

from cli.commands import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, config_from_args, main
from cli.parser import build_parser
from core.config import RunConfig, save_run_config
from core.dataset_io import save_dataset, save_profile
from core.errors import IllConditionedSystemError
from core.forward import Hulthen, ScatteringData, true_potential
from core.inverse import BetaProfile
from core.quadrature import RhoGrid

SMALL_GRID = ["--rho-max", "20", "--step", "0.5"]


def test_parser_defaults_are_none():
    args = build_parser().parse_args(["pipeline"])
    assert args.command == "pipeline"
    assert args.M is None
    assert args.fit_inverse_rho is None
    assert args.breakpoints is None


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.json"
    save_run_config(RunConfig(M=4, ell=1.5, step=0.05), path)
    args = build_parser().parse_args(
        ["invert", "--config", str(path), "-M", "7", "--exclude", "1.0", "2.0", "--no-fit-inverse-rho"]
    )
    config = config_from_args(args)
    assert config.command == "invert"
    assert config.M == 7
    assert config.ell == 1.5
    assert config.step == 0.05
    assert config.exclusions == [[1.0, 2.0]]
    assert config.fit_inverse_rho is False


def test_bad_delta_exits_with_input_error(capsys):
    code = main(["generate", "--model", "hulthen", "--delta", "1.5", "--ell", "0.3333"])
    assert code == EXIT_INPUT
    assert "0<delta<1" in capsys.readouterr().err


def test_missing_dataset_exits_with_input_error(tmp_path, capsys):
    code = main(["invert", "--dataset", str(tmp_path / "absent.json"), "-q"])
    assert code == EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_numerical_failure_exits_with_one(mocker, tmp_path):
    mocker.patch(
        "cli.commands.PipelineOrchestrator.run_pipeline",
        side_effect=IllConditionedSystemError(1e13, 2.0),
    )
    code = main(["pipeline", "--output", str(tmp_path / "q.csv"), "-q"])
    assert code == EXIT_NUMERICAL


def test_generate_writes_dataset_and_jost_csv(tmp_path, capsys):
    dataset = tmp_path / "hulthen.json"
    jost = tmp_path / "jost.csv"
    code = main(
        ["generate", "--model", "hulthen", "--delta", "0.1", "--ell", "0.3333333333333333",
         "--dataset", str(dataset), "--jost-csv", str(jost), "-q", *SMALL_GRID]
    )
    assert code == EXIT_OK
    raw = json.loads(dataset.read_text(encoding="utf-8"))
    assert len(raw["jost"]) == 40
    assert len(raw["bound_states"]) == 4
    assert len(pd.read_csv(jost)) == 40
    out = capsys.readouterr().out
    assert "tau" in out


def test_generate_square_well_reports_no_bound_states(tmp_path, capsys):
    code = main(["generate", "--dataset", str(tmp_path / "d.json"), "-q", *SMALL_GRID])
    assert code == EXIT_OK
    assert "No bound states." in capsys.readouterr().out


def test_invert_then_recover(tmp_path):
    dataset = tmp_path / "d.json"
    profile = tmp_path / "p.json"
    output = tmp_path / "q.csv"
    common = ["-q", "--x-count", "12", "-M", "3", "--workers", "1", *SMALL_GRID]
    assert main(["generate", "--dataset", str(dataset), *common]) == EXIT_OK
    assert main(
        ["invert", "--dataset", str(dataset), "--profile", str(profile),
         "--weight-csv", str(tmp_path / "w.csv"), *common]
    ) == EXIT_OK
    assert json.loads(profile.read_text(encoding="utf-8"))["M"] == 3
    assert main(["recover", "--profile", str(profile), "--output", str(output), *common]) == EXIT_OK
    frame = pd.read_csv(output)
    assert list(frame.columns) == ["x", "beta0", "q_recovered", "u0", "q_true", "abs_error"]
    assert len(frame) == 12


def test_invert_with_no_solved_nodes(mocker, tmp_path):
    dataset = tmp_path / "d.json"
    assert main(["generate", "--dataset", str(dataset), "-q", *SMALL_GRID]) == EXIT_OK
    mocker.patch("core.inverse.solve_system", side_effect=IllConditionedSystemError(1e13, 1.0))
    code = main(
        ["invert", "--dataset", str(dataset), "--profile", str(tmp_path / "p.json"),
         "--x-count", "5", "-M", "2", "--workers", "1", "-q", *SMALL_GRID]
    )
    assert code == EXIT_NUMERICAL
    saved = json.loads((tmp_path / "p.json").read_text(encoding="utf-8"))
    assert len(saved["failed"]) == 5


@pytest.mark.parametrize("argv", [[], ["plot"]])
def test_unknown_command_is_a_usage_error(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_bad_config_types_exit_with_input_error(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"M": "nine"}), encoding="utf-8")
    code = main(["pipeline", "--config", str(path), "--output", str(tmp_path / "q.csv"), "-q"])
    assert code == EXIT_INPUT
    assert "'M'" in capsys.readouterr().err


def test_missing_config_file_exits_with_input_error(tmp_path, capsys):
    code = main(["pipeline", "--config", str(tmp_path / "absent.json"), "-q"])
    assert code == EXIT_INPUT
    assert "not found" in capsys.readouterr().err


HULTHEN = ["--model", "hulthen", "--delta", "0.1", "--ell", "0.3333333333333333"]
STEPS = ["-q", "--x-count", "12", "-M", "3", "--workers", "1", *SMALL_GRID]


def test_recover_compares_against_the_profile_source(tmp_path):
    dataset, profile, output = tmp_path / "d.json", tmp_path / "p.json", tmp_path / "q.csv"
    assert main(["generate", "--dataset", str(dataset), *HULTHEN, *STEPS]) == EXIT_OK
    assert main(["invert", "--dataset", str(dataset), "--profile", str(profile), *STEPS]) == EXIT_OK
    # no model flags: the profile says where it came from
    assert main(["recover", "--profile", str(profile), "--output", str(output), *STEPS]) == EXIT_OK
    frame = pd.read_csv(output)
    expected = true_potential(Hulthen(0.1, 0.3333333333333333), frame["x"].to_numpy())
    np.testing.assert_allclose(frame["q_true"], expected, rtol=1e-12)


def test_recover_without_source_omits_error_columns(tmp_path):
    xs = np.linspace(0.1, 3.0, 12)
    zeros = np.zeros(12)
    profile, output = tmp_path / "p.json", tmp_path / "q.csv"
    save_profile(BetaProfile(ell=2.0, M=0, x_nodes=xs, beta0=zeros, cond=zeros + 1.0), profile)
    assert main(["recover", "--profile", str(profile), "--output", str(output), "-q"]) == EXIT_OK
    assert list(pd.read_csv(output).columns) == ["x", "beta0", "q_recovered", "u0"]


def test_pipeline_matches_step_by_step_output(tmp_path):
    dataset, profile = tmp_path / "d.json", tmp_path / "p.json"
    stepwise, oneshot = tmp_path / "steps.csv", tmp_path / "pipeline.csv"
    assert main(["generate", "--dataset", str(dataset), *STEPS]) == EXIT_OK
    assert main(["invert", "--dataset", str(dataset), "--profile", str(profile), *STEPS]) == EXIT_OK
    assert main(["recover", "--profile", str(profile), "--output", str(stepwise), *STEPS]) == EXIT_OK
    assert main(["pipeline", "--output", str(oneshot), *STEPS]) == EXIT_OK
    assert oneshot.read_bytes() == stepwise.read_bytes()


def test_invert_free_dataset_gives_zero_beta(tmp_path):
    grid = RhoGrid(rho_max=20.0, step=0.5)
    dataset, profile = tmp_path / "d.json", tmp_path / "p.json"
    free = ScatteringData(ell=2.0, grid=grid, jost=np.ones(grid.count, dtype=complex))
    save_dataset(free, dataset)
    assert main(["invert", "--dataset", str(dataset), "--profile", str(profile), *STEPS]) == EXIT_OK
    saved = json.loads(profile.read_text(encoding="utf-8"))
    np.testing.assert_allclose(saved["beta0"], np.zeros(12), atol=1e-14)
    assert saved["source"] is None


def test_noisy_pipeline_is_reproducible(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    noisy = [*HULTHEN, *STEPS, "--noise", "0.1", "--seed", "7"]
    assert main(["pipeline", "--output", str(first), *noisy]) == EXIT_OK
    assert main(["pipeline", "--output", str(second), *noisy]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    frame = pd.read_csv(first)
    assert np.all(np.isfinite(frame["q_recovered"]))
    assert np.all(np.isfinite(frame["abs_error"]))


def test_recover_rejects_profile_with_foreign_source(tmp_path):
    xs = np.linspace(0.1, 3.0, 12)
    zeros = np.zeros(12)
    profile = tmp_path / "p.json"
    source = {"model": "hulthen", "delta": 0.1, "ell": 0.3333333333333333}
    save_profile(
        BetaProfile(ell=2.0, M=0, x_nodes=xs, beta0=zeros, cond=zeros + 1.0, source=source), profile
    )
    code = main(["recover", "--profile", str(profile), "--output", str(tmp_path / "q.csv"), "-q"])
    assert code == EXIT_INPUT
