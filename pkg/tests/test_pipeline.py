"""End-to-end runs on the benchmark potentials."""

import math

import numpy as np
import pytest

from core.config import RunConfig
from core.recover import error_report
from core.workflow_orchestrator import PipelineOrchestrator

pytestmark = pytest.mark.slow

HALF_PI = math.pi / 2


def square_well_config(**overrides):
    settings = dict(
        model="square-well",
        Q=1.0,
        R=HALF_PI,
        ell=2.0,
        rho_max=100.0,
        step=0.1,
        x_start=math.pi / 60,
        x_stop=math.pi,
        x_count=60,
        M=9,
        breakpoints=[HALF_PI],
        exclusions=[[HALF_PI - 0.15, HALF_PI + 0.15]],
        trim_ends=2,
        workers=2,
    )
    settings.update(overrides)
    return RunConfig(**settings)


@pytest.fixture(scope="module")
def square_well_run():
    return PipelineOrchestrator(square_well_config(sweep_M=[5, 9])).run_pipeline()


def test_square_well_recovery_accuracy(square_well_run):
    result = square_well_run
    assert not result.profile.partial
    assert result.report.max_error <= 1e-3
    assert result.weight.f_tilde > 0


def test_square_well_outputs(square_well_run):
    result = square_well_run
    assert list(result.frame.columns) == ["x", "beta0", "q_recovered", "u0", "q_true", "abs_error"]
    diagnostics = result.diagnostics
    assert diagnostics["M"] == 9
    assert [row["M"] for row in diagnostics["condition_sweep"]["rows"]] == [5, 9]
    assert set(result.timings) >= {"generate", "invert", "recover", "sweep"}


def test_error_decreases_with_truncation_order(square_well_run):
    orchestrator = PipelineOrchestrator(square_well_config())
    data, weight = square_well_run.data, square_well_run.weight
    errors = {9: square_well_run.report.max_error}
    for M in (0, 4):
        profile, _ = orchestrator.invert(data, M=M, weight=weight)
        _, report = orchestrator.recover(profile)
        errors[M] = report.max_error
    assert errors[9] < errors[4] < errors[0]


def hulthen_config(**overrides):
    settings = dict(
        model="hulthen",
        delta=0.1,
        ell=1.0 / 3.0,
        rho_max=100.0,
        step=0.1,
        x_start=0.05,
        x_stop=3.0,
        x_count=60,
        M=9,
        trim_ends=2,
        workers=2,
    )
    settings.update(overrides)
    return RunConfig(**settings)


def test_hulthen_condition_sweep_is_bounded():
    orchestrator = PipelineOrchestrator(hulthen_config())
    data = orchestrator.generate()
    rows = orchestrator.sweep_condition(data, orchestrator.build_weight(data), 3.0, [5, 20])
    assert rows[1]["cond"] <= 2.0 * rows[0]["cond"]
    assert all(row["lambda_min"] > 0 for row in rows)


def test_hulthen_default_grid_recovery():
    config = hulthen_config(rho_max=None, x_start=1.0 / 20.0, M=19)
    assert config.build_grid().count == 10000
    result = PipelineOrchestrator(config).run_pipeline()
    assert not result.profile.partial
    report = error_report(result.recovered, config.build_model(), interval=(0.5, 3.0))
    assert report.l2_error <= 1e-2


def _hulthen_l2(**overrides):
    config = hulthen_config(**overrides)
    result = PipelineOrchestrator(config).run_pipeline()
    assert not result.profile.partial
    assert np.all(np.isfinite(result.recovered.q))
    report = error_report(result.recovered, config.build_model(), interval=(0.5, 3.0))
    return result, report.l2_error


def test_noisy_hulthen_error_stays_within_ten_times_clean():
    _, clean = _hulthen_l2()
    noisy_run, noisy = _hulthen_l2(noise=0.1, seed=7)
    assert noisy_run.weight.smoothed
    assert noisy <= 10.0 * clean


def test_noise_moves_beta0_boundedly():
    clean = PipelineOrchestrator(hulthen_config())
    noisy = PipelineOrchestrator(hulthen_config(noise=0.01, seed=3))
    clean_profile, _ = clean.invert(clean.generate())
    noisy_profile, _ = noisy.invert(noisy.generate())
    shift = np.max(np.abs(noisy_profile.beta0 - clean_profile.beta0))
    assert shift <= 50 * 0.01
