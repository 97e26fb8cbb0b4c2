"""Reading and writing datasets, profiles and result tables.

The only core module that touches the filesystem. Writes go to a temporary
sibling first and are renamed into place.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np
import pandas as pd

from core.errors import DatasetFormatError, InverseSolveError, ScatteringDataError
from core.forward import BoundState, ScatteringData
from core.inverse import BetaProfile, FailedNode
from core.quadrature import GLWeight, RhoGrid

logger = logging.getLogger(__name__)

DATASET_FORMAT = "besselinvert-dataset"
PROFILE_FORMAT = "besselinvert-profile"


def _atomic_write(path: Path, content: str) -> None:
    """Write to temp file and rename to ensure atomic update."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_suffix(path.suffix + ".tmp")
    try:
        temp_path.write_text(content, encoding="utf-8")
        temp_path.replace(path)
    except OSError:
        logger.warning("Atomic rename failed for %s, falling back to direct write", path)
        path.write_text(content, encoding="utf-8")


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")


def _read_json(path: Path, kind: str) -> Dict[str, Any]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or raw.get("format") != kind:
        raise DatasetFormatError(f"{path} is not a {kind} file")
    return raw


# --- Scattering data ---


def dataset_to_dict(data: ScatteringData) -> Dict[str, Any]:
    return {
        "format": DATASET_FORMAT,
        "ell": data.ell,
        "grid": {"rho_max": data.grid.rho_max, "step": data.grid.step},
        "bound_states": [{"tau": s.tau, "c": s.c} for s in data.bound_states],
        "jost": [[float(z.real), float(z.imag)] for z in data.jost],
        "source": data.source,
    }


def dataset_from_dict(raw: Mapping[str, Any]) -> ScatteringData:
    """Validate and rebuild ScatteringData; raises DatasetFormatError."""
    try:
        grid = RhoGrid(rho_max=float(raw["grid"]["rho_max"]), step=float(raw["grid"]["step"]))
        pairs = np.asarray(raw["jost"], dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise DatasetFormatError("jost must be a list of [re, im] pairs")
        states = tuple(
            BoundState(float(s["tau"]), float(s["c"])) for s in raw.get("bound_states", [])
        )
        return ScatteringData(
            ell=float(raw["ell"]),
            grid=grid,
            jost=pairs[:, 0] + 1j * pairs[:, 1],
            bound_states=states,
            source=raw.get("source"),
        )
    except DatasetFormatError:
        raise
    except (KeyError, TypeError, ValueError, ScatteringDataError) as exc:
        raise DatasetFormatError(f"Malformed dataset: {exc}") from exc


def save_dataset(data: ScatteringData, path: Path) -> None:
    _atomic_write(path, json.dumps(dataset_to_dict(data), default=_jsonable))
    logger.info("Saved dataset (%d samples, %d bound states) to %s",
                data.grid.count, len(data.bound_states), path)


def load_dataset(path: Path) -> ScatteringData:
    data = dataset_from_dict(_read_json(path, DATASET_FORMAT))
    logger.info("Loaded dataset from %s", path)
    return data


def export_jost_csv(data: ScatteringData, path: Path) -> None:
    """Columns rho, re_F, im_F."""
    frame = pd.DataFrame(
        {"rho": data.grid.nodes, "re_F": data.jost.real, "im_F": data.jost.imag}
    )
    _atomic_write(path, frame.to_csv(index=False))
    logger.info("Exported Jost samples to %s", path)


def export_weight_csv(weight: GLWeight, path: Path) -> None:
    """Columns rho, w, scaled_residual = rho^2 * w."""
    rho = weight.grid.nodes
    frame = pd.DataFrame({"rho": rho, "w": weight.w, "scaled_residual": rho**2 * weight.w})
    _atomic_write(path, frame.to_csv(index=False))
    logger.info("Exported GL weight to %s", path)


# --- Profiles ---


def profile_to_dict(profile: BetaProfile) -> Dict[str, Any]:
    return {
        "format": PROFILE_FORMAT,
        "ell": profile.ell,
        "M": profile.M,
        "x_nodes": profile.x_nodes,
        "beta0": profile.beta0,
        "all_beta": profile.all_beta,
        "cond": profile.cond,
        "failed": [{"x": f.x, "reason": f.reason} for f in profile.failed],
        "source": profile.source,
    }


def profile_from_dict(raw: Mapping[str, Any]) -> BetaProfile:
    try:
        M = int(raw["M"])
        all_beta = raw.get("all_beta")
        return BetaProfile(
            ell=float(raw["ell"]),
            M=M,
            x_nodes=np.asarray(raw["x_nodes"], dtype=float),
            beta0=np.asarray(raw["beta0"], dtype=float),
            cond=np.asarray(raw["cond"], dtype=float),
            all_beta=None if all_beta is None else np.asarray(all_beta, dtype=float).reshape(-1, M + 1),
            failed=[FailedNode(float(f["x"]), str(f["reason"])) for f in raw.get("failed", [])],
            source=raw.get("source"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetFormatError(f"Malformed profile: {exc}") from exc
    except InverseSolveError as exc:
        raise DatasetFormatError(f"Inconsistent profile: {exc}") from exc


def save_profile(profile: BetaProfile, path: Path) -> None:
    _atomic_write(path, json.dumps(profile_to_dict(profile), default=_jsonable))
    logger.info("Saved beta profile (%d nodes) to %s", len(profile.x_nodes), path)


def load_profile(path: Path) -> BetaProfile:
    profile = profile_from_dict(_read_json(path, PROFILE_FORMAT))
    logger.info("Loaded beta profile from %s", path)
    return profile


# --- Results ---


def save_potential_csv(frame: pd.DataFrame, path: Path) -> None:
    _atomic_write(path, frame.to_csv(index=False))
    logger.info("Saved potential table (%d rows) to %s", len(frame), path)


def save_diagnostics(diagnostics: Mapping[str, Any], path: Path) -> None:
    _atomic_write(path, json.dumps(diagnostics, indent=2, default=_jsonable))
    logger.info("Saved diagnostics to %s", path)
