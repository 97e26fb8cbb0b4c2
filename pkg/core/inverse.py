"""Truncated Gelfand-Levitan system for the Fourier-Jacobi coefficients.

For each x the (M+1)x(M+1) system

    beta_m / ((4m+2l+3) x) + sum_n A_mn(x) beta_n = B_m(x)

is assembled from the scattering data and solved in its symmetric scaled form
(I + L_M) xi = b. beta_0 carries the potential; see core.recover.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from core.errors import (
    BesselInvertError,
    BesselOverflowError,
    IllConditionedSystemError,
    InverseSolveError,
    ScatteringDataError,
)
from core.forward import ScatteringData
from core.quadrature import (
    DEFAULT_WINDOW,
    NOISE_FLOOR,
    GLWeight,
    estimate_f_tilde,
    estimate_noise_level,
    f_tilde_standard_error,
    fit_inverse_rho_tail,
    smooth_kernel,
    tail_a_matrix,
    tail_b,
)
from core.specfun import bessel_ladder, modified_products

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12
RESOLVE_SIGMAS = 3.0
_LOG_DOUBLE_MAX = math.log(np.finfo(float).max)


def _critical(ell: float) -> bool:
    return ell == -0.5


# --- Weight ---


def build_gl_weight(
    data: ScatteringData,
    window: float = DEFAULT_WINDOW,
    fit_inverse_rho: Optional[bool] = None,
) -> GLWeight:
    """Split |F|^-2 - 1 into a grid part and closed-form tail constants.

    ``fit_inverse_rho``: True forces a c1/rho term, False forbids it, None
    keeps it when the fit dominates the 1/rho^2 behaviour on the window.
    Tail constants not resolved above RESOLVE_SIGMAS standard errors are set
    to zero.

    Data whose node-to-node scatter exceeds NOISE_FLOOR are treated as noisy:
    the kernel is smoothed over the whole grid and no tail constant is
    extrapolated from it.
    """
    grid = data.grid
    moduli = data.moduli
    if not np.all(moduli > 0):
        raise ScatteringDataError("Jost moduli must be positive at every node")
    raw = moduli**-2 - 1.0
    rho = grid.nodes

    noise = estimate_noise_level(raw, grid, window)
    if noise > NOISE_FLOOR:
        logger.warning(
            "Jost data scatter %.3g above %.1g: kernel smoothed, tail constants disabled",
            noise, NOISE_FLOOR,
        )
        return GLWeight(
            grid=grid,
            f_tilde=0.0,
            w=smooth_kernel(raw, grid),
            noise_level=noise,
            smoothed=True,
        )

    inverse_rho = 0.0
    f_tilde: Optional[float] = None
    if fit_inverse_rho is not False:
        fit = fit_inverse_rho_tail(raw, grid, window)
        rho_lo = rho[grid.window_start(window)]
        dominant = abs(fit.c1) * rho_lo > abs(fit.c2) + 1.0
        if fit_inverse_rho or dominant:
            if abs(fit.c1) > RESOLVE_SIGMAS * fit.c1_error:
                inverse_rho = fit.c1
                if not fit_inverse_rho:
                    logger.warning(
                        "Jost data decays like 1/rho; subtracting fitted tail c1=%.6g",
                        inverse_rho,
                    )
            f_tilde = fit.c2 if abs(fit.c2) > RESOLVE_SIGMAS * fit.c2_error else 0.0

    if f_tilde is None:
        f_tilde = estimate_f_tilde(moduli, grid, window)
        error = f_tilde_standard_error(moduli, grid, window)
        if abs(f_tilde) <= RESOLVE_SIGMAS * error:
            logger.warning(
                "F-tilde %.4g not resolved (standard error %.3g); tail correction disabled",
                f_tilde, error,
            )
            f_tilde = 0.0

    w = raw - inverse_rho / rho - f_tilde / rho**2
    logger.info(
        "Built GL weight on %d nodes: F-tilde=%.6g, inverse-rho tail=%.6g",
        grid.count, f_tilde, inverse_rho,
    )
    return GLWeight(
        grid=grid,
        f_tilde=float(f_tilde),
        w=w,
        inverse_rho=float(inverse_rho),
        noise_level=noise,
    )


# --- Entries ---


def _continuous_part(
    ell: float, x: float, M: int, weight: GLWeight
) -> Tuple[np.ndarray, np.ndarray]:
    """(2/pi) times the rho-integrals of A and B, tail corrected."""
    grid = weight.grid
    ladder = bessel_ladder(ell, M, grid.nodes * x)
    odd = ladder.odd
    riccati = ladder.riccati()
    weighted = grid.weights * weight.on_grid

    a_int = (odd * weighted) @ odd.T
    b_int = odd @ (weighted * riccati)
    a_int += weight.f_tilde * tail_a_matrix(ell, M, x)
    if _critical(ell):
        # the (0,0) and m=0 tails diverge; integrate |F|^-2 - 1 directly
        raw_weighted = grid.weights * weight.raw
        a_int[0, 0] = (odd[0] * raw_weighted) @ odd[0]
        b_int[0] = odd[0] @ (raw_weighted * riccati)
    else:
        b_int[0] += weight.f_tilde * tail_b(ell, 0, x)
    scale = 2.0 / math.pi
    return scale * a_int, -scale * b_int


def _discrete_part(
    ell: float, x: float, M: int, data: ScatteringData
) -> Tuple[np.ndarray, np.ndarray]:
    """Bound-state sums C_j j j and -C_j b j at imaginary argument."""
    a = np.zeros((M + 1, M + 1))
    b = np.zeros(M + 1)
    for state in data.bound_states:
        jj, jb, log_scale = modified_products(ell, M, state.tau, x)
        if log_scale + math.log(state.c) > _LOG_DOUBLE_MAX - 1.0:
            raise BesselOverflowError(
                f"Bound-state term tau={state.tau:.6g} overflows at x={x:.6g}"
            )
        factor = state.c * math.exp(log_scale)
        a += factor * jj
        b -= factor * jb
    return a, b


def assemble_matrices(
    ell: float, x: float, M: int, data: ScatteringData, weight: GLWeight
) -> Tuple[np.ndarray, np.ndarray]:
    """A(x) as (M+1)x(M+1) with A[m, n] = A_mn, and B(x) of length M+1."""
    if not x > 0:
        raise InverseSolveError(f"x must be positive, got {x}")
    if M < 0:
        raise InverseSolveError(f"M must be >= 0, got {M}")
    a_cont, b_cont = _continuous_part(ell, x, M, weight)
    a_disc, b_disc = _discrete_part(ell, x, M, data)
    return a_cont + a_disc, b_cont + b_disc


def assemble_entry_a(
    ell: float, m: int, n: int, x: float, data: ScatteringData, weight: GLWeight
) -> float:
    """Single coefficient A_mn(x)."""
    a, _ = assemble_matrices(ell, x, max(m, n), data, weight)
    return float(a[m, n])


def assemble_entry_b(
    ell: float, m: int, x: float, data: ScatteringData, weight: GLWeight
) -> float:
    """Single right-hand side B_m(x)."""
    _, b = assemble_matrices(ell, x, m, data, weight)
    return float(b[m])


# --- System ---


@dataclass(frozen=True, eq=False)
class TruncatedSystem:
    """Unscaled system (D + A) beta = B and its scaled form (I + L) xi = b."""

    ell: float
    x: float
    M: int
    matrix: np.ndarray
    rhs: np.ndarray
    scaled_matrix: np.ndarray
    scaled_rhs: np.ndarray
    scale: np.ndarray

    @cached_property
    def cond(self) -> float:
        return float(np.linalg.cond(self.scaled_matrix, 2))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues of the symmetric scaled matrix."""
        sym = 0.5 * (self.scaled_matrix + self.scaled_matrix.T)
        return np.linalg.eigvalsh(sym)


def build_system(
    ell: float, x: float, M: int, data: ScatteringData, weight: GLWeight
) -> TruncatedSystem:
    a, b = assemble_matrices(ell, x, M, data, weight)
    j = np.arange(M + 1)
    diag = 1.0 / ((4.0 * j + 2.0 * ell + 3.0) * x)
    s = np.sqrt(4.0 * j + 2.0 * ell + 3.0)
    scaled = np.eye(M + 1) + x * (s[:, None] * a * s[None, :])
    return TruncatedSystem(
        ell=float(ell),
        x=float(x),
        M=int(M),
        matrix=np.diag(diag) + a,
        rhs=b,
        scaled_matrix=scaled,
        scaled_rhs=s * math.sqrt(x) * b,
        scale=s,
    )


def solve_system(system: TruncatedSystem, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """beta_0..beta_M from the scaled system; LU with partial pivoting.

    Raises:
        IllConditionedSystemError: if cond(I + L_M) exceeds ``cond_limit``.
    """
    cond = system.cond
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedSystemError(cond, system.x)
    try:
        xi = np.linalg.solve(system.scaled_matrix, system.scaled_rhs)
    except np.linalg.LinAlgError as exc:
        raise InverseSolveError(f"Solve failed at x={system.x:.6g}: {exc}") from exc
    beta = xi * system.scale * math.sqrt(system.x)
    residual = np.linalg.norm(system.matrix @ beta - system.rhs)
    logger.debug(
        "x=%.6g M=%d cond=%.4g residual=%.3g", system.x, system.M, cond, residual
    )
    return beta


# --- Profile ---


class FailedNode(NamedTuple):
    x: float
    reason: str


@dataclass(eq=False)
class BetaProfile:
    """beta_0 (and all beta) along the x-grid; failed nodes are left out.

    ``source`` is the model description carried over from the data, if any.
    """

    ell: float
    M: int
    x_nodes: np.ndarray
    beta0: np.ndarray
    cond: np.ndarray
    all_beta: Optional[np.ndarray] = None
    failed: List[FailedNode] = field(default_factory=list)
    source: Optional[Dict[str, Any]] = None

    def __post_init__(self) -> None:
        n = len(self.x_nodes)
        if len(self.beta0) != n or len(self.cond) != n:
            raise InverseSolveError("Profile arrays have inconsistent lengths")
        if self.all_beta is not None and np.shape(self.all_beta) != (n, self.M + 1):
            raise InverseSolveError("all_beta must have shape (nodes, M+1)")

    @property
    def partial(self) -> bool:
        return bool(self.failed)


def beta_profile(
    ell: float,
    x_nodes: Sequence[float],
    M: int,
    data: ScatteringData,
    weight: Optional[GLWeight] = None,
    workers: int = 1,
    cond_limit: float = COND_LIMIT,
) -> BetaProfile:
    """Solve the truncated system at every x node.

    The weight is built once and shared read-only. Nodes whose assembly or
    solve fails are recorded in ``failed`` and skipped.
    """
    if data.ell != ell:
        raise ScatteringDataError(f"Data carries l={data.ell}, profile requested l={ell}")
    xs = np.asarray(x_nodes, dtype=float)
    if xs.size == 0 or np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
        raise InverseSolveError("x nodes must be positive and strictly ascending")
    if weight is None:
        weight = build_gl_weight(data)

    def solve_at(x: float):
        try:
            system = build_system(ell, x, M, data, weight)
            return x, solve_system(system, cond_limit), system.cond, None
        except BesselInvertError as exc:
            return x, None, None, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve_at, xs))
    else:
        results = [solve_at(x) for x in xs]

    kept_x, betas, conds, failed = [], [], [], []
    for x, beta, cond, reason in results:
        if reason is not None:
            logger.warning("Skipping x=%.6g: %s", x, reason)
            failed.append(FailedNode(float(x), reason))
            continue
        kept_x.append(x)
        betas.append(beta)
        conds.append(cond)

    all_beta = np.array(betas).reshape(len(betas), M + 1)
    profile = BetaProfile(
        ell=float(ell),
        M=int(M),
        x_nodes=np.array(kept_x, dtype=float),
        beta0=all_beta[:, 0].copy(),
        cond=np.array(conds, dtype=float),
        all_beta=all_beta,
        failed=failed,
        source=data.source,
    )
    logger.info(
        "Beta profile M=%d: %d nodes solved, %d failed, max cond %.4g",
        M, len(kept_x), len(failed), float(profile.cond.max()) if len(conds) else float("nan"),
    )
    return profile
