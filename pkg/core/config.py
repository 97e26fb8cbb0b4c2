"""JSON-backed run configuration for BesselInvert."""

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import (
    Any,
    Dict,
    List,
    Mapping,
    Optional,
    Union,
    get_args,
    get_origin,
    get_type_hints,
)

import numpy as np

from core.forward import Hulthen, PotentialModel, SquareWell
from core.quadrature import RhoGrid

logger = logging.getLogger(__name__)

WORKERS_ENV = "BESSELINVERT_WORKERS"
COMMANDS = ("generate", "invert", "recover", "pipeline")
MODELS = ("square-well", "hulthen")
# rho-grid length per model when rho_max is not given
DEFAULT_RHO_MAX = {"square-well": 100.0, "hulthen": 1000.0}


@dataclass
class RunConfig:
    """Every setting a command can consume, with benchmark defaults."""

    command: str = "pipeline"
    model: str = "square-well"
    Q: float = 1.0
    R: float = math.pi / 2
    delta: float = 0.1
    ell: float = 2.0
    rho_max: Optional[float] = None  # None = DEFAULT_RHO_MAX for the model
    step: float = 0.1
    x_start: float = 0.05
    x_stop: float = math.pi
    x_count: int = 60
    M: int = 9
    noise: float = 0.0
    seed: int = 0
    breakpoints: List[float] = field(default_factory=list)
    exclusions: List[List[float]] = field(default_factory=list)  # [lo, hi] pairs
    trim_ends: int = 2
    window: float = 0.2  # top fraction of the rho-grid used for F-tilde
    fit_inverse_rho: Optional[bool] = None  # None = auto-detect
    sweep_M: List[int] = field(default_factory=list)
    workers: int = 0  # 0 = environment or cpu count
    dataset_path: str = "dataset.json"
    profile_path: str = "profile.json"
    output_path: str = "potential.csv"
    diagnostics_path: str = ""
    jost_csv_path: str = ""
    weight_csv_path: str = ""

    def to_dict(self) -> Dict[str, Any]:
        """Serialize config to a plain dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        """Create RunConfig from dict, ignoring unknown keys.

        Raises:
            ValueError: if a known key holds a value of the wrong type.
        """
        if not isinstance(data, Mapping):
            raise ValueError(f"Config must be a JSON object, got {type(data).__name__}")
        hints = get_type_hints(cls)
        known_fields = {f.name for f in fields(cls)}
        filtered = {
            k: _coerce(k, hints[k], v) for k, v in data.items() if k in known_fields
        }
        return cls(**filtered)

    def merged(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """Copy with every non-None override applied (flags beat the file)."""
        known_fields = {f.name for f in self.__dataclass_fields__.values()}
        given = {k: v for k, v in overrides.items() if v is not None and k in known_fields}
        return replace(self, **given)

    @property
    def grid_length(self) -> float:
        """rho_max, or the model default when unset."""
        if self.rho_max is not None:
            return self.rho_max
        return DEFAULT_RHO_MAX.get(self.model, DEFAULT_RHO_MAX["square-well"])

    def x_nodes(self) -> np.ndarray:
        return np.linspace(self.x_start, self.x_stop, int(self.x_count))

    def build_model(self) -> PotentialModel:
        if self.model == "square-well":
            return SquareWell(Q=float(self.Q), R=float(self.R), ell=float(self.ell))
        return Hulthen(delta=float(self.delta), ell=float(self.ell))

    def build_grid(self) -> RhoGrid:
        return RhoGrid(rho_max=float(self.grid_length), step=float(self.step))


def _coerce(name: str, kind: Any, value: Any) -> Any:
    """Check ``value`` against the field annotation, converting int to float."""
    if get_origin(kind) is Union:
        if value is None:
            return None
        kind = next(arg for arg in get_args(kind) if arg is not type(None))
    if get_origin(kind) is list:
        if not isinstance(value, list):
            raise ValueError(f"Config field {name!r} must be a list, got {value!r}")
        (item,) = get_args(kind)
        return [_coerce(name, item, v) for v in value]
    if kind is bool:
        ok = isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, kind)
    if not ok:
        expected = getattr(kind, "__name__", kind)
        raise ValueError(f"Config field {name!r} must be {expected}, got {value!r}")
    return value


def resolve_worker_count(config: RunConfig) -> int:
    """Flag first, then the environment override, then the CPU count."""
    if config.workers > 0:
        return int(config.workers)
    env = os.environ.get(WORKERS_ENV, "").strip()
    if env:
        try:
            value = int(env)
            if value > 0:
                return value
        except ValueError:
            pass
        logger.warning("Ignoring %s=%r: not a positive integer", WORKERS_ENV, env)
    return os.cpu_count() or 1


def load_run_config(path: Path, strict: bool = False) -> RunConfig:
    """Load config from JSON file.

    A missing or corrupt file gives defaults, unless ``strict`` is set, in
    which case FileNotFoundError or ValueError is raised.
    """
    path = Path(path)
    if not path.exists():
        if strict:
            raise FileNotFoundError(f"Config file not found: {path}")
        logger.info("No config file at %s, using defaults", path)
        return RunConfig()

    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        config = RunConfig.from_dict(raw)
        logger.info("Loaded config from %s", path)
        return config
    except ValueError as exc:
        if strict:
            raise ValueError(f"Corrupt config at {path}: {exc}") from exc
        logger.warning("Corrupt config at %s: %s, using defaults", path, exc)
        return RunConfig()


def save_run_config(config: RunConfig, path: Path) -> None:
    """Write config to JSON file, creating parent dirs as needed."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(config.to_dict(), indent=2, ensure_ascii=False),
        encoding="utf-8",
    )
    logger.info("Saved config to %s", path)
