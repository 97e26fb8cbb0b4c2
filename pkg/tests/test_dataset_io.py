import json
import math
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from core.dataset_io import (
    DATASET_FORMAT,
    dataset_to_dict,
    export_jost_csv,
    export_weight_csv,
    load_dataset,
    load_profile,
    save_dataset,
    save_diagnostics,
    save_potential_csv,
    save_profile,
)
from core.errors import DatasetFormatError
from core.forward import Hulthen, generate_data
from core.inverse import BetaProfile, FailedNode, build_gl_weight
from core.quadrature import RhoGrid


@pytest.fixture(scope="module")
def data():
    return generate_data(Hulthen(0.1, 1.0 / 3.0), RhoGrid(rho_max=20.0, step=0.5))


@pytest.fixture
def profile():
    xs = np.array([0.5, 1.0, 1.5])
    all_beta = np.array([[0.1, 0.01], [0.2, 0.02], [0.3, 0.03]])
    return BetaProfile(
        ell=2.0,
        M=1,
        x_nodes=xs,
        beta0=all_beta[:, 0].copy(),
        cond=np.array([1.1, 1.3, 1.7]),
        all_beta=all_beta,
        failed=[FailedNode(2.0, "ill-conditioned")],
    )


def test_dataset_round_trip_is_exact(tmp_path, data):
    path = tmp_path / "data" / "dataset.json"
    save_dataset(data, path)
    loaded = load_dataset(path)
    assert loaded.ell == data.ell
    assert loaded.grid == data.grid
    np.testing.assert_array_equal(loaded.jost, data.jost)
    assert loaded.bound_states == data.bound_states
    assert loaded.source == {"model": "hulthen", "delta": 0.1, "ell": 1.0 / 3.0}
    assert not path.with_suffix(".json.tmp").exists()


def test_dataset_format_tag(data):
    assert dataset_to_dict(data)["format"] == DATASET_FORMAT


def test_malformed_dataset_files(tmp_path, data):
    path = tmp_path / "bad.json"
    path.write_text("not json", encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        load_dataset(path)

    path.write_text(json.dumps({"format": "something-else"}), encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        load_dataset(path)

    raw = dataset_to_dict(data)
    raw["jost"] = raw["jost"][:-1]
    path.write_text(json.dumps(raw), encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        load_dataset(path)

    raw = dataset_to_dict(data)
    del raw["grid"]
    path.write_text(json.dumps(raw), encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        load_dataset(path)


def test_missing_dataset_is_an_os_error(tmp_path):
    with pytest.raises(OSError):
        load_dataset(tmp_path / "absent.json")


def test_profile_round_trip(tmp_path, profile):
    path = tmp_path / "profile.json"
    save_profile(profile, path)
    loaded = load_profile(path)
    assert (loaded.ell, loaded.M) == (2.0, 1)
    np.testing.assert_array_equal(loaded.x_nodes, profile.x_nodes)
    np.testing.assert_array_equal(loaded.beta0, profile.beta0)
    np.testing.assert_array_equal(loaded.all_beta, profile.all_beta)
    np.testing.assert_array_equal(loaded.cond, profile.cond)
    assert loaded.failed == profile.failed
    assert loaded.partial


def test_profile_keeps_its_source(tmp_path, profile, data):
    path = tmp_path / "profile.json"
    save_profile(replace(profile, source=data.source), path)
    assert load_profile(path).source == {"model": "hulthen", "delta": 0.1, "ell": 1.0 / 3.0}
    save_profile(profile, path)
    assert load_profile(path).source is None


def test_inconsistent_profile(tmp_path, profile):
    save_profile(profile, tmp_path / "profile.json")
    raw = json.loads((tmp_path / "profile.json").read_text(encoding="utf-8"))
    raw["beta0"] = raw["beta0"][:2]
    (tmp_path / "profile.json").write_text(json.dumps(raw), encoding="utf-8")
    with pytest.raises(DatasetFormatError):
        load_profile(tmp_path / "profile.json")


def test_jost_csv(tmp_path, data):
    path = tmp_path / "jost.csv"
    export_jost_csv(data, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["rho", "re_F", "im_F"]
    assert len(frame) == data.grid.count
    np.testing.assert_allclose(frame["re_F"] + 1j * frame["im_F"], data.jost, rtol=1e-12)


def test_weight_csv(tmp_path, data):
    weight = build_gl_weight(data)
    path = tmp_path / "weight.csv"
    export_weight_csv(weight, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["rho", "w", "scaled_residual"]
    np.testing.assert_allclose(frame["scaled_residual"], frame["rho"] ** 2 * frame["w"], rtol=1e-12)


def test_potential_csv_and_diagnostics(tmp_path):
    frame = pd.DataFrame({"x": [0.5, 1.0], "q_recovered": [-1.0, -0.9]})
    save_potential_csv(frame, tmp_path / "out" / "potential.csv")
    pd.testing.assert_frame_equal(pd.read_csv(tmp_path / "out" / "potential.csv"), frame)

    save_diagnostics({"cond": np.array([1.0, 2.0]), "f_tilde": np.float64(math.pi)}, tmp_path / "d.json")
    loaded = json.loads((tmp_path / "d.json").read_text(encoding="utf-8"))
    assert loaded == {"cond": [1.0, 2.0], "f_tilde": math.pi}
