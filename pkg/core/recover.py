"""Potential recovery from beta_0 and error reports against a known model."""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline, KroghInterpolator

from core.errors import RecoveryError, TooFewNodesError
from core.forward import PotentialModel, true_potential

logger = logging.getLogger(__name__)

DENOMINATOR_GUARD = 1e-8
MIN_SEGMENT_NODES = 4
JET_NODES = 7
BREAK_TOLERANCE = 1e-10

Interval = Tuple[float, float]


class Jet(NamedTuple):
    """One-sided value and slope at a breakpoint."""

    value: float
    slope: float
    spread: float  # slope change when the farthest node is dropped


def _one_sided_jet(xs: np.ndarray, ys: np.ndarray, at: float) -> Jet:
    """Value and slope at ``at`` from the polynomial through the nearest nodes."""
    order = np.argsort(np.abs(xs - at), kind="stable")[:JET_NODES]
    scale = float(np.max(np.abs(xs[order] - at))) or 1.0
    t = (xs[order] - at) / scale
    full = KroghInterpolator(t, ys[order]).derivatives(0.0, der=2)
    reduced = KroghInterpolator(t[:-1], ys[order][:-1]).derivatives(0.0, der=2)
    return Jet(
        value=float(full[0]),
        slope=float(full[1]) / scale,
        spread=abs(float(full[1]) - float(reduced[1])) / scale,
    )


def _snap_index(breakpoints: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Segment index per x; a point on a breakpoint goes to the left segment."""
    tol = BREAK_TOLERANCE * np.maximum(1.0, np.abs(x))
    return np.searchsorted(breakpoints, x - tol, side="left")


@dataclass(frozen=True, eq=False)
class PiecewiseSpline:
    """Cubic splines between breakpoints, joined with a common value and slope.

    A node equal to a breakpoint belongs to the segment on its left.
    """

    breakpoints: Tuple[float, ...]
    segments: Tuple[CubicSpline, ...]

    def _segment_index(self, x: np.ndarray) -> np.ndarray:
        return _snap_index(np.asarray(self.breakpoints), x)

    def __call__(self, x, nu: int = 0):
        xs = np.asarray(x, dtype=float)
        flat = np.atleast_1d(xs)
        out = np.empty_like(flat)
        index = self._segment_index(flat)
        for k, spline in enumerate(self.segments):
            mask = index == k
            if np.any(mask):
                out[mask] = spline(flat[mask], nu)
        if np.ndim(x) == 0:
            return float(out[0])
        return out.reshape(xs.shape)

    def nodal_curvature(self, x) -> np.ndarray:
        """Second derivative at spline knots with the h^2 term removed.

        At a knot with equal spacing h on both sides, (M[i-1] + 10 M[i] +
        M[i+1]) / 12 cancels the -h^2 f''''/12 defect of the spline moments M.
        Other points get the plain spline second derivative.
        """
        flat = np.atleast_1d(np.asarray(x, dtype=float))
        out = self(flat, 2)
        index = self._segment_index(flat)
        for k, spline in enumerate(self.segments):
            knots = spline.x
            if knots.size < 3:
                continue
            moments = spline(knots, 2)
            h = np.diff(knots)
            uniform = np.abs(h[1:] - h[:-1]) <= 1e-9 * h[1:]
            refined = (moments[:-2] + 10.0 * moments[1:-1] + moments[2:]) / 12.0
            inner = knots[1:-1]
            for i in np.flatnonzero(index == k):
                j = np.searchsorted(inner, flat[i])
                if j < inner.size and abs(inner[j] - flat[i]) <= 1e-12 * max(1.0, abs(flat[i])):
                    if uniform[j]:
                        out[i] = refined[j]
        return out


def spline_fit(
    x_nodes: Sequence[float],
    values: Sequence[float],
    breakpoints: Optional[Sequence[float]] = None,
) -> PiecewiseSpline:
    """Interpolate ``values`` piecewise with a C1 joint at each breakpoint.

    Each segment is a cubic spline of its own nodes, not-a-knot at the outer
    ends. At a breakpoint both neighbours are clamped to one value and slope.
    The slope comes from a one-sided polynomial through the nearest nodes of
    whichever side resolves it better; the value is the node value when a
    node sits on the breakpoint, else that side's extrapolation.
    """
    xs = np.asarray(x_nodes, dtype=float)
    ys = np.asarray(values, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise RecoveryError("Spline nodes and values must be 1-D arrays of equal length")
    if np.any(np.diff(xs) <= 0):
        raise RecoveryError("Spline nodes must be strictly ascending")
    bps = tuple(sorted(float(b) for b in (breakpoints or ())))

    index = _snap_index(np.asarray(bps), xs)
    parts = []
    for k in range(len(bps) + 1):
        mask = index == k
        count = int(mask.sum())
        if count < MIN_SEGMENT_NODES:
            raise TooFewNodesError(
                f"Spline segment {k} has {count} nodes, needs at least {MIN_SEGMENT_NODES}"
            )
        parts.append([xs[mask], ys[mask]])

    joints = []
    for k, b in enumerate(bps):
        left_x, left_y = parts[k]
        right_x, right_y = parts[k + 1]
        on_node = abs(left_x[-1] - b) <= BREAK_TOLERANCE * max(1.0, abs(b))
        if on_node:
            right_x = np.concatenate([left_x[-1:], right_x])
            right_y = np.concatenate([left_y[-1:], right_y])
            parts[k + 1] = [right_x, right_y]
            b = float(left_x[-1])
        left = _one_sided_jet(left_x, left_y, b)
        right = _one_sided_jet(right_x, right_y, b)
        jet = left if left.spread <= right.spread else right
        if not on_node:
            parts[k] = [np.append(left_x, b), np.append(left_y, jet.value)]
            parts[k + 1] = [np.insert(right_x, 0, b), np.insert(right_y, 0, jet.value)]
        logger.debug(
            "Breakpoint %.6g: slope %.8g from the %s side", b, jet.slope,
            "left" if jet is left else "right",
        )
        joints.append(jet.slope)

    segments = []
    for k, (seg_x, seg_y) in enumerate(parts):
        start = (1, joints[k - 1]) if k > 0 else "not-a-knot"
        end = (1, joints[k]) if k < len(bps) else "not-a-knot"
        segments.append(CubicSpline(seg_x, seg_y, bc_type=(start, end)))
    return PiecewiseSpline(breakpoints=bps, segments=tuple(segments))


@dataclass(eq=False)
class RecoveredPotential:
    """q (and u_(l,0)) at the nodes where the quotient is defined."""

    ell: float
    x_nodes: np.ndarray
    q: np.ndarray
    u0: Optional[np.ndarray] = None
    beta0: Optional[np.ndarray] = None
    breakpoints: Tuple[float, ...] = ()
    flagged: List[float] = field(default_factory=list)


def u0_from_beta0(ell: float, beta0, x_nodes) -> np.ndarray:
    """Regular zero-energy solution u_(l,0) = (beta_0/(2l+3) + 1) x^(l+1)."""
    xs = np.asarray(x_nodes, dtype=float)
    return (np.asarray(beta0, dtype=float) / (2.0 * ell + 3.0) + 1.0) * xs ** (ell + 1.0)


def beta0_from_u0(ell: float, u0, x_nodes) -> np.ndarray:
    xs = np.asarray(x_nodes, dtype=float)
    return (2.0 * ell + 3.0) * (np.asarray(u0, dtype=float) / xs ** (ell + 1.0) - 1.0)


def q_from_beta0(
    ell: float, spline: PiecewiseSpline, x_nodes: Sequence[float]
) -> RecoveredPotential:
    """q = (x b'' + 2(l+1) b') / (x (b + 2l + 3)) with spline derivatives.

    b'' at the knots is the refined nodal curvature of the spline.

    Nodes where |b + 2l + 3| < DENOMINATOR_GUARD are flagged and left out.
    """
    xs = np.asarray(x_nodes, dtype=float)
    beta = spline(xs)
    d1 = spline(xs, 1)
    d2 = spline.nodal_curvature(xs)
    shifted = beta + 2.0 * ell + 3.0
    ok = np.abs(shifted) >= DENOMINATOR_GUARD
    if not np.all(ok):
        logger.warning("%d nodes flagged: beta_0 + 2l + 3 vanishes", int((~ok).sum()))
    q = (xs[ok] * d2[ok] + 2.0 * (ell + 1.0) * d1[ok]) / (xs[ok] * shifted[ok])
    return RecoveredPotential(
        ell=float(ell),
        x_nodes=xs[ok],
        q=q,
        u0=u0_from_beta0(ell, beta[ok], xs[ok]),
        beta0=beta[ok],
        breakpoints=spline.breakpoints,
        flagged=[float(x) for x in xs[~ok]],
    )


def recover_potential(
    ell: float,
    x_nodes: Sequence[float],
    beta0: Sequence[float],
    breakpoints: Optional[Sequence[float]] = None,
) -> RecoveredPotential:
    """Spline beta_0 and apply the differentiation formula at the nodes."""
    spline = spline_fit(x_nodes, beta0, breakpoints)
    recovered = q_from_beta0(ell, spline, x_nodes)
    logger.info(
        "Recovered q at %d nodes (%d segments, %d flagged)",
        len(recovered.x_nodes), len(spline.segments), len(recovered.flagged),
    )
    return recovered


# --- Error reports ---


@dataclass(eq=False)
class ErrorReport:
    """Pointwise and aggregate errors against the true potential."""

    x_nodes: np.ndarray
    q_recovered: np.ndarray
    q_true: np.ndarray
    included: np.ndarray
    max_error: float
    l2_error: float
    relative_l2_error: float

    @property
    def abs_error(self) -> np.ndarray:
        return np.abs(self.q_recovered - self.q_true)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "x": self.x_nodes,
                "q_recovered": self.q_recovered,
                "q_true": self.q_true,
                "abs_error": self.abs_error,
                "included": self.included,
            }
        )


def _relative(error: float, norm: float) -> float:
    if error == 0.0:
        return 0.0
    return error / norm if norm > 0 else float("inf")


def error_report(
    recovered: RecoveredPotential,
    model: PotentialModel,
    exclusions: Sequence[Interval] = (),
    trim_ends: int = 0,
    interval: Optional[Interval] = None,
) -> ErrorReport:
    """Max and discrete L2 error outside ``exclusions``.

    ``trim_ends`` drops that many nodes at each end; ``interval`` restricts
    the aggregate to [lo, hi]. The L2 sum weights each node by its local
    spacing on the full node set.
    """
    xs = recovered.x_nodes
    if xs.size == 0:
        raise RecoveryError("Nothing to report: no recovered nodes")
    q_true = np.asarray(true_potential(model, xs), dtype=float)
    err = np.abs(recovered.q - q_true)

    included = np.ones(xs.size, dtype=bool)
    for lo, hi in exclusions:
        included &= ~((xs > lo) & (xs < hi))
    if trim_ends > 0:
        included[:trim_ends] = False
        included[-trim_ends:] = False
    if interval is not None:
        included &= (xs >= interval[0]) & (xs <= interval[1])
    if not np.any(included):
        raise RecoveryError("All nodes excluded from the error report")

    spacing = np.gradient(xs) if xs.size > 1 else np.ones(1)
    l2 = float(np.sqrt(np.sum(err[included] ** 2 * spacing[included])))
    norm = float(np.sqrt(np.sum(q_true[included] ** 2 * spacing[included])))
    return ErrorReport(
        x_nodes=xs,
        q_recovered=recovered.q,
        q_true=q_true,
        included=included,
        max_error=float(err[included].max()),
        l2_error=l2,
        relative_l2_error=_relative(l2, norm),
    )


def potential_frame(
    recovered: RecoveredPotential, report: Optional[ErrorReport] = None
) -> pd.DataFrame:
    """Table for the potential CSV: x, beta0, q_recovered, u0 and, with a
    report, q_true and abs_error."""
    columns = {"x": recovered.x_nodes}
    if recovered.beta0 is not None:
        columns["beta0"] = recovered.beta0
    columns["q_recovered"] = recovered.q
    if recovered.u0 is not None:
        columns["u0"] = recovered.u0
    if report is not None:
        columns["q_true"] = report.q_true
        columns["abs_error"] = report.abs_error
    return pd.DataFrame(columns)
