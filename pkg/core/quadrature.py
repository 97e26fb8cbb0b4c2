"""Uniform rho-grids, trapezoid sums and the closed-form tail integrals."""

import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import stats
from scipy.interpolate import make_smoothing_spline

from core.errors import QuadratureError, SingularTailError
from core.specfun import pochhammer

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = 0.2
NOISE_FLOOR = 1e-6


@dataclass(frozen=True)
class RhoGrid:
    """Midpoint nodes rho_k = (k - 1/2)*step, k = 1..N, N = round(rho_max/step).

    The grid never contains rho = 0 and every node carries weight step, so
    the sums cover (0, N*step] and the origin panel uses the first-node value.
    """

    rho_max: float
    step: float

    def __post_init__(self) -> None:
        if not (self.step > 0 and self.rho_max > 0):
            raise QuadratureError("Grid step and rho_max must be positive")
        if self.step > self.rho_max:
            raise QuadratureError(
                f"Grid step {self.step} exceeds rho_max {self.rho_max}"
            )

    @property
    def count(self) -> int:
        return max(1, int(round(self.rho_max / self.step)))

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.step * (np.arange(1, self.count + 1, dtype=float) - 0.5)

    @cached_property
    def weights(self) -> np.ndarray:
        return grid_weights(self.count, self.step)

    def extended(self, factor: float) -> "RhoGrid":
        """Same step, rho_max scaled by ``factor``."""
        return replace(self, rho_max=self.rho_max * factor)

    def window_start(self, window: float = DEFAULT_WINDOW) -> int:
        """Index of the first node in the top ``window`` fraction."""
        if not 0.0 < window <= 1.0:
            raise QuadratureError(f"Window fraction must lie in (0, 1], got {window}")
        start = int(math.floor((1.0 - window) * self.count))
        if start >= self.count:
            raise QuadratureError("Estimation window selects no nodes")
        return start


def grid_weights(count: int, step: float) -> np.ndarray:
    """Per-node weights of the midpoint grid: step everywhere."""
    return np.full(count, step, dtype=float)


def trapezoid(samples: np.ndarray, grid: RhoGrid) -> float:
    """Integrate per-node samples over (0, rho_max].

    ``samples`` may carry leading axes; the last axis runs over the nodes.
    """
    values = np.asarray(samples)
    if values.shape[-1:] != (grid.count,):
        raise QuadratureError(
            f"Expected {grid.count} samples per row, got {values.shape[-1:]}"
        )
    result = values @ grid.weights
    if np.ndim(result) == 0:
        return float(result)
    return result


def estimate_f_tilde(
    jost_moduli: np.ndarray, grid: RhoGrid, window: float = DEFAULT_WINDOW
) -> float:
    """Mean of rho^2 (|F|^-2 - 1) over the top ``window`` of the grid."""
    moduli = np.asarray(jost_moduli, dtype=float)
    if moduli.shape != (grid.count,):
        raise QuadratureError(
            f"Expected {grid.count} Jost moduli, got shape {moduli.shape}"
        )
    start = grid.window_start(window)
    rho = grid.nodes[start:]
    return float(np.mean(rho**2 * (moduli[start:] ** -2 - 1.0)))


def f_tilde_standard_error(
    jost_moduli: np.ndarray, grid: RhoGrid, window: float = DEFAULT_WINDOW
) -> float:
    """Standard error of the window mean returned by ``estimate_f_tilde``."""
    start = grid.window_start(window)
    rho = grid.nodes[start:]
    samples = rho**2 * (np.asarray(jost_moduli, dtype=float)[start:] ** -2 - 1.0)
    if samples.size < 2:
        return 0.0
    return float(np.std(samples, ddof=1) / math.sqrt(samples.size))


class TailFit(NamedTuple):
    """Coefficients of raw ~ c1/rho + c2/rho^2 and their standard errors."""

    c1: float
    c2: float
    c1_error: float
    c2_error: float


def fit_inverse_rho_tail(
    raw: np.ndarray, grid: RhoGrid, window: float = DEFAULT_WINDOW
) -> TailFit:
    """Least-squares fit rho * raw ~ c1 + c2/rho over the estimation window."""
    start = grid.window_start(window)
    rho = grid.nodes[start:]
    if rho.size < 3:
        raise QuadratureError("Tail fit needs at least three window nodes")
    design = np.column_stack([np.ones_like(rho), 1.0 / rho])
    target = rho * np.asarray(raw, dtype=float)[start:]
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = target - design @ coef
    variance = float(residual @ residual) / (rho.size - 2)
    cov = variance * np.linalg.inv(design.T @ design)
    return TailFit(
        float(coef[0]),
        float(coef[1]),
        float(math.sqrt(max(cov[0, 0], 0.0))),
        float(math.sqrt(max(cov[1, 1], 0.0))),
    )


def estimate_noise_level(
    samples: np.ndarray, grid: RhoGrid, window: float = DEFAULT_WINDOW
) -> float:
    """Node-to-node scatter of ``samples`` over the window.

    Robust spread of the fourth differences, scaled so independent noise of
    standard deviation s reads as s. A resolved kernel contributes next to
    nothing.
    """
    start = grid.window_start(window)
    diffs = np.diff(np.asarray(samples, dtype=float)[start:], 4)
    if diffs.size < 2:
        return 0.0
    return float(stats.median_abs_deviation(diffs, scale="normal") / math.sqrt(70.0))


def smooth_kernel(raw: np.ndarray, grid: RhoGrid) -> np.ndarray:
    """GCV smoothing spline of rho*raw against log rho.

    Multiplicative noise on F makes the scatter of raw proportional to
    |F|^-2, so each node is weighted by (rho |F|^-2)^-2.
    """
    values = np.asarray(raw, dtype=float)
    rho = grid.nodes
    if rho.size < 5:
        return values.copy()
    t = np.log(rho)
    weights = (rho * np.maximum(values + 1.0, 1e-12)) ** -2
    spline = make_smoothing_spline(t, rho * values, w=weights / weights.mean())
    return spline(t) / rho


@dataclass(frozen=True, eq=False)
class GLWeight:
    """Tail-reduced continuous part of the input kernel.

    ``w`` = |F|^-2 - 1 - inverse_rho/rho - f_tilde/rho^2. The f_tilde part is
    integrated in closed form; the inverse_rho part stays on the grid. For
    noisy data ``w`` is the smoothed kernel and ``noise_level`` its estimated
    scatter.
    """

    grid: RhoGrid
    f_tilde: float
    w: np.ndarray
    inverse_rho: float = 0.0
    noise_level: float = 0.0
    smoothed: bool = False

    def __post_init__(self) -> None:
        if np.shape(self.w) != (self.grid.count,):
            raise QuadratureError("Weight length does not match grid")

    @property
    def on_grid(self) -> np.ndarray:
        """The part integrated by trapezoid: w + inverse_rho/rho."""
        if self.inverse_rho == 0.0:
            return self.w
        return self.w + self.inverse_rho / self.grid.nodes

    @property
    def raw(self) -> np.ndarray:
        """|F|^-2 - 1 reassembled from the stored parts."""
        return self.on_grid + self.f_tilde / self.grid.nodes**2


def tail_a(ell: float, n: int, m: int, x: float) -> float:
    """Integral over (0, inf) of j_(l+2n+1)(rho x) j_(l+2m+1)(rho x) / rho^2.

    Weber-Schafheitlin with lambda = 3: pi x / (8 (l+2n+1/2)_3) on the
    diagonal, pi x / (16 (l+n+m+1/2)_3) for |n-m| = 1, zero beyond.
    """
    if ell == -0.5 and n == 0 and m == 0:
        raise SingularTailError("Tail integral diverges for l=-1/2, n=m=0")
    if n == m:
        return math.pi * x / (8.0 * pochhammer(ell + 2 * n + 0.5, 3))
    if abs(n - m) == 1:
        return math.pi * x / (16.0 * pochhammer(ell + n + m + 0.5, 3))
    return 0.0


def tail_b(ell: float, m: int, x: float) -> float:
    """Integral over (0, inf) of b_l(rho x) j_(l+2m+1)(rho x) / rho^2.

    pi x / (8 (l+1/2)_2) for m = 0, zero otherwise.
    """
    if m != 0:
        return 0.0
    if ell == -0.5:
        raise SingularTailError("Tail integral diverges for l=-1/2, m=0")
    return math.pi * x / (8.0 * pochhammer(ell + 0.5, 2))


def tail_a_matrix(ell: float, M: int, x: float) -> np.ndarray:
    """tail_a for all (n, m) in 0..M; the singular l=-1/2 corner is left at 0."""
    out = np.zeros((M + 1, M + 1))
    for n in range(M + 1):
        for m in range(max(0, n - 1), min(M, n + 1) + 1):
            if ell == -0.5 and n == m == 0:
                continue
            out[n, m] = tail_a(ell, n, m, x)
    return out
