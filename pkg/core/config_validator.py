"""Configuration validation logic.

Every check the commands rely on lives here so the CLI only reports.
"""

from typing import Optional, Tuple

from core.config import COMMANDS, MODELS, RunConfig

Result = Tuple[bool, Optional[str]]


class ConfigValidator:
    """Pure validation logic for run configurations."""

    @staticmethod
    def validate_model(config: RunConfig) -> Result:
        """Check the potential parameters for the selected model."""
        if config.model not in MODELS:
            return False, f"Unknown model {config.model!r}; choose one of {', '.join(MODELS)}."
        if config.model == "square-well":
            if not (config.Q > 0 and config.R > 0):
                return False, "Square well needs Q > 0 and R > 0."
            if not config.ell > -0.5:
                return False, "Square well needs ell > -1/2."
            return True, None
        if not 0.0 < config.delta < 1.0:
            return False, f"Hulthen potential needs 0<delta<1, got delta={config.delta}."
        if not config.ell >= -0.5:
            return False, "Hulthen potential needs ell >= -1/2."
        if float(2.0 * config.ell).is_integer():
            return False, "Hulthen potential needs 2*ell not an integer."
        return True, None

    @staticmethod
    def validate(config: RunConfig) -> Result:
        """Validate the numerical settings shared by every command.

        Args:
            config: Run configuration to validate

        Returns:
            Tuple of (is_valid, error_message).
            If valid, error_message is None.
        """
        try:
            return ConfigValidator._check_settings(config)
        except (TypeError, ValueError) as exc:
            return False, f"Invalid setting type: {exc}"

    @staticmethod
    def _check_settings(config: RunConfig) -> Result:
        if config.command not in COMMANDS:
            return False, f"Unknown command {config.command!r}."
        ok, message = ConfigValidator.validate_model(config)
        if not ok:
            return ok, message
        if not config.step > 0 or not config.grid_length > config.step:
            return False, "Need rho_max > step > 0."
        if not config.x_start > 0:
            return False, "x_start must be > 0."
        if not config.x_stop > config.x_start:
            return False, "x_stop must exceed x_start."
        if config.x_count < 4:
            return False, "x_count must be at least 4."
        if config.M < 0:
            return False, "M must be >= 0."
        if any(m < 0 for m in config.sweep_M):
            return False, "sweep_M values must be >= 0."
        if not 0.0 <= config.noise < 1.0:
            return False, "noise must lie in [0, 1)."
        if not 0.0 < config.window <= 1.0:
            return False, "window must lie in (0, 1]."
        if config.trim_ends < 0:
            return False, "trim_ends must be >= 0."
        for bp in config.breakpoints:
            if not config.x_start < bp < config.x_stop:
                return False, f"Breakpoint {bp} lies outside ({config.x_start}, {config.x_stop})."
        for interval in config.exclusions:
            if len(interval) != 2 or not interval[0] < interval[1]:
                return False, f"Exclusion {interval} is not a [lo, hi] pair with lo < hi."
        return True, None

    @staticmethod
    def validate_for_command(config: RunConfig) -> Result:
        """Validate settings plus the file paths the command reads or writes."""
        ok, message = ConfigValidator.validate(config)
        if not ok:
            return ok, message
        needs = {
            "generate": ("dataset_path",),
            "invert": ("dataset_path", "profile_path"),
            "recover": ("profile_path", "output_path"),
            "pipeline": ("output_path",),
        }[config.command]
        for name in needs:
            if not str(getattr(config, name)).strip():
                return False, f"{config.command} needs --{name.replace('_', '-').replace('-path', '')}."
        return True, None
