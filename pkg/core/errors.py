"""Exception hierarchy shared by every core module."""


class BesselInvertError(Exception):
    """Base exception for all BesselInvert errors."""


# --- Special functions ---


class SpecialFunctionDomainError(BesselInvertError, ValueError):
    """Raised when a special function is called outside its domain."""


class GammaPoleError(SpecialFunctionDomainError):
    """Raised for log-gamma at a non-positive integer."""


class HypergeometricDivisionError(SpecialFunctionDomainError, ZeroDivisionError):
    """Raised when a terminating 2F1 hits c + i = 0 before it terminates."""


class BesselOverflowError(SpecialFunctionDomainError, OverflowError):
    """Raised when a modified Bessel product leaves the double range."""


# --- Quadrature ---


class QuadratureError(BesselInvertError, ValueError):
    """Raised on malformed quadrature input (length mismatch, empty window)."""


class SingularTailError(QuadratureError):
    """Raised for the l = -1/2 tail integrals that diverge at the origin."""


# --- Scattering data ---


class ScatteringDataError(BesselInvertError, ValueError):
    """Raised for invalid potential parameters or unusable scattering data."""


class DatasetFormatError(ScatteringDataError):
    """Raised when a dataset or profile file does not match its schema."""


# --- Inverse solve and recovery ---


class InverseSolveError(BesselInvertError):
    """Raised when the truncated system cannot be solved."""


class IllConditionedSystemError(InverseSolveError):
    """Raised when the scaled system exceeds the condition threshold."""

    def __init__(self, cond: float, x: float) -> None:
        super().__init__(
            f"Truncated system at x={x:.6g} is ill-conditioned (cond={cond:.3e})"
        )
        self.cond = cond
        self.x = x


class RecoveryError(BesselInvertError, ValueError):
    """Raised when the potential cannot be recovered from a profile."""


class TooFewNodesError(RecoveryError):
    """Raised when a spline segment has fewer than four nodes."""
