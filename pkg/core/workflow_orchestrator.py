"""Pure orchestration logic for the inversion workflow.

Coordinates generate → noise → invert → recover without CLI dependencies.
"""

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import pandas as pd

from core.config import RunConfig, resolve_worker_count
from core.errors import ScatteringDataError
from core.forward import (
    PotentialModel,
    ScatteringData,
    add_noise,
    generate_data,
    model_from_dict,
)
from core.inverse import BetaProfile, beta_profile, build_gl_weight, build_system
from core.quadrature import GLWeight
from core.recover import (
    ErrorReport,
    RecoveredPotential,
    error_report,
    potential_frame,
    recover_potential,
)

logger = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    """Everything one end-to-end run produces."""

    data: ScatteringData
    weight: GLWeight
    profile: BetaProfile
    recovered: RecoveredPotential
    report: Optional[ErrorReport]
    frame: pd.DataFrame
    diagnostics: Dict[str, Any]
    timings: Dict[str, float] = field(default_factory=dict)


class PipelineOrchestrator:
    """Coordinates the inversion workflow stages."""

    def __init__(self, config: RunConfig) -> None:
        """Initialize orchestrator with configuration.

        Args:
            config: Run configuration (already validated)
        """
        self._config = config
        self._timings: Dict[str, float] = {}

    @property
    def timings(self) -> Dict[str, float]:
        """Seconds spent per stage so far."""
        return dict(self._timings)

    @contextmanager
    def _timed(self, stage: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self._timings[stage] = time.perf_counter() - start
            logger.info("Stage %s finished in %.2f s", stage, self._timings[stage])

    def generate(self) -> ScatteringData:
        """Exact data for the configured model, with noise when requested."""
        with self._timed("generate"):
            data = generate_data(self._config.build_model(), self._config.build_grid())
            if self._config.noise > 0:
                data = add_noise(data, self._config.noise, self._config.seed)
        return data

    def build_weight(self, data: ScatteringData) -> GLWeight:
        return build_gl_weight(
            data,
            window=self._config.window,
            fit_inverse_rho=self._config.fit_inverse_rho,
        )

    def invert(
        self,
        data: ScatteringData,
        M: Optional[int] = None,
        weight: Optional[GLWeight] = None,
    ) -> Tuple[BetaProfile, GLWeight]:
        """Solve for beta along the configured x-grid.

        Args:
            data: Scattering data to invert
            M: Truncation order; defaults to the configured one
            weight: Prebuilt GL weight to reuse across runs

        Returns:
            Tuple of (profile, weight)
        """
        order = self._config.M if M is None else M
        with self._timed("invert" if M is None else f"invert_M{order}"):
            if weight is None:
                weight = self.build_weight(data)
            profile = beta_profile(
                data.ell,
                self._config.x_nodes(),
                order,
                data,
                weight=weight,
                workers=resolve_worker_count(self._config),
            )
        return profile, weight

    def reference_model(self, profile: BetaProfile) -> Optional[PotentialModel]:
        """Model the profile was computed from, or None when it is unknown."""
        if not profile.source:
            return None
        model = model_from_dict(profile.source)
        if model.ell != profile.ell:
            raise ScatteringDataError(
                f"Profile l={profile.ell} does not match its source model l={model.ell}"
            )
        return model

    def recover(
        self, profile: BetaProfile
    ) -> Tuple[RecoveredPotential, Optional[ErrorReport]]:
        """Potential from a profile, plus an error report against its source model.

        Profiles without a recorded source get no report.
        """
        with self._timed("recover"):
            recovered = recover_potential(
                profile.ell, profile.x_nodes, profile.beta0, self._config.breakpoints
            )
            model = self.reference_model(profile)
            if model is None:
                logger.info("Profile records no source model; skipping the error report")
                return recovered, None
            report = error_report(
                recovered,
                model,
                exclusions=[tuple(e) for e in self._config.exclusions],
                trim_ends=self._config.trim_ends,
            )
        return recovered, report

    def sweep_condition(
        self,
        data: ScatteringData,
        weight: GLWeight,
        x: float,
        M_values: Sequence[int],
    ) -> List[Dict[str, float]]:
        """cond and extreme eigenvalues of I + L_M at one x for several M."""
        rows = []
        with self._timed("sweep"):
            for M in M_values:
                system = build_system(data.ell, x, M, data, weight)
                eig = system.eigenvalues
                rows.append(
                    {
                        "M": int(M),
                        "cond": system.cond,
                        "lambda_min": float(eig[0]),
                        "lambda_max": float(eig[-1]),
                    }
                )
                logger.debug("Sweep x=%.4g M=%d cond=%.4g", x, M, system.cond)
        return rows

    def diagnostics(
        self,
        data: ScatteringData,
        weight: GLWeight,
        profile: BetaProfile,
        report: Optional[ErrorReport],
        sweep: Optional[List[Dict[str, float]]] = None,
    ) -> Dict[str, Any]:
        """JSON-ready summary of one run."""
        summary: Dict[str, Any] = {
            "model": data.source,
            "ell": data.ell,
            "M": profile.M,
            "f_tilde": weight.f_tilde,
            "inverse_rho": weight.inverse_rho,
            "noise_level": weight.noise_level,
            "smoothed": weight.smoothed,
            "bound_states": [{"tau": s.tau, "c": s.c} for s in data.bound_states],
            "x_nodes": profile.x_nodes,
            "cond": profile.cond,
            "failed": [{"x": f.x, "reason": f.reason} for f in profile.failed],
            "timings": self.timings,
        }
        if report is not None:
            summary["max_error"] = report.max_error
            summary["l2_error"] = report.l2_error
            summary["relative_l2_error"] = report.relative_l2_error
        if sweep:
            summary["condition_sweep"] = {"x": self._config.x_stop, "rows": sweep}
        return summary

    def run_pipeline(self, data: Optional[ScatteringData] = None) -> PipelineResult:
        """generate → invert → recover, plus the optional condition sweep."""
        if data is None:
            data = self.generate()
        profile, weight = self.invert(data)
        recovered, report = self.recover(profile)
        sweep = None
        if self._config.sweep_M:
            sweep = self.sweep_condition(data, weight, self._config.x_stop, self._config.sweep_M)
        frame = potential_frame(recovered, report)
        return PipelineResult(
            data=data,
            weight=weight,
            profile=profile,
            recovered=recovered,
            report=report,
            frame=frame,
            diagnostics=self.diagnostics(data, weight, profile, report, sweep),
            timings=self.timings,
        )
