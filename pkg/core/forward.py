"""Exact scattering data for the benchmark potentials.

Two closed-form models are provided: the square well q = -Q^2 on (0, R] and
the Hulthen effective potential. Each produces Jost-function samples on a
RhoGrid together with its bound states and norming constants, and evaluates
its own q(x) for error reports.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, ClassVar, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special

from core.errors import ScatteringDataError
from core.quadrature import RhoGrid
from core.specfun import double_factorial, hyp2f1_terminating, ln_gamma_complex

logger = logging.getLogger(__name__)

# Norming integrals are resolved until exp(-2 tau x) drops below this
_NORMING_TAIL = 1e-12
_NORMING_LEVELS = 17


class BoundState(NamedTuple):
    """Eigenvalue rho_j = i*tau and its norming constant c."""

    tau: float
    c: float


# l = -1/2 square well (Q=1, R=pi/2): rho_1^2 = -0.258265599397038 and its
# norming constant, obtained with an independent spectral solver.
SQUARE_WELL_HALF_ORDER_BOUND_STATE = BoundState(
    tau=math.sqrt(0.258265599397038), c=0.469060824384319
)


def _is_integer(value: float) -> bool:
    return float(value).is_integer()


def _upper_branch_power(base: np.ndarray, ell: float) -> np.ndarray:
    """base**ell with arg(base) in [-pi, pi): negative reals take arg = -pi.

    This is the boundary value of (-rho)^l from the upper rho half-plane,
    where F_l is analytic.
    """
    z = np.asarray(base, dtype=complex)
    log_z = np.log(z)
    on_cut = (z.imag == 0.0) & (z.real < 0.0)
    log_z = np.where(on_cut, log_z.real - 1j * math.pi, log_z)
    return np.exp(ell * log_z)


# --- Square well ---


def _spherical_pair(nu: float, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(j_nu(z), y_nu(z)); integer orders also accept negative z by parity."""
    if _is_integer(nu):
        n = int(nu)
        a = np.abs(z)
        j = special.spherical_jn(n, a)
        y = special.spherical_yn(n, a)
        negative = z < 0
        j = np.where(negative, (-1.0) ** n * j, j)
        y = np.where(negative, (-1.0) ** (n + 1) * y, y)
        return j, y
    if np.any(z <= 0):
        raise ScatteringDataError("Non-integer orders need positive arguments")
    scale = np.sqrt(np.pi / (2.0 * z))
    return scale * special.jv(nu + 0.5, z), scale * special.yv(nu + 0.5, z)


def square_well_jost(Q: float, R: float, ell: float, rho: Union[float, np.ndarray]):
    """Jost function of q = -Q^2 on (0, R] from matching at x = R.

    Inside the well f = a b_l(w x) + b w x h_l(w x) with w = sqrt(rho^2 + Q^2);
    outside it is e^{i pi l} i rho x h_l(rho x). Continuity of f and f' at R
    gives a 2x2 system. The e^{i pi l} is divided out of the right-hand side
    and cancels against (-rho)^l in the limit at the origin, leaving
    F_l(rho) = -i b (rho/w)^l, which is (-1)^(l+1) i b (rho/w)^l written
    with the unscaled b for integer l.

    Negative rho is accepted for integer l.
    """
    if not (Q > 0 and R > 0):
        raise ScatteringDataError("Square well needs Q > 0 and R > 0")
    if not ell > -0.5:
        raise ScatteringDataError("Square well Jost function needs l > -1/2")
    r = np.asarray(rho, dtype=float)
    if np.any(r == 0):
        raise ScatteringDataError("Jost function is sampled at rho != 0 only")
    omega = np.sqrt(r**2 + Q * Q)

    jw, yw = _spherical_pair(ell, omega * R)
    jw1, yw1 = _spherical_pair(ell + 1, omega * R)
    jr, yr = _spherical_pair(ell, r * R)
    jr1, yr1 = _spherical_pair(ell + 1, r * R)
    hw, hw1 = jw + 1j * yw, jw1 + 1j * yw1
    hr, hr1 = jr + 1j * yr, jr1 + 1j * yr1

    m11 = omega * R * jw
    m12 = omega * R * hw
    m21 = omega * (ell + 1) * jw - omega**2 * R * jw1
    m22 = omega * (ell + 1) * hw - omega**2 * R * hw1
    r1 = 1j * r * R * hr
    r2 = 1j * r * ((ell + 1) * hr - r * R * hr1)

    det = m11 * m22 - m12 * m21
    if np.any(det == 0):
        raise ScatteringDataError("Singular matching system in square-well Jost function")
    b = (m11 * r2 - m21 * r1) / det
    value = -1j * b * np.power(r / omega, ell)
    if np.ndim(rho) == 0:
        return complex(value)
    return value


@dataclass(frozen=True)
class SquareWell:
    """q(x) = -Q^2 for x <= R and 0 beyond."""

    Q: float
    R: float
    ell: float

    kind: ClassVar[str] = "square-well"

    def __post_init__(self) -> None:
        if not (self.Q > 0 and self.R > 0):
            raise ScatteringDataError(f"Square well needs Q > 0 and R > 0, got Q={self.Q}, R={self.R}")
        if not self.ell > -0.5:
            raise ScatteringDataError(f"Square well needs l > -1/2, got {self.ell}")

    @property
    def q_integral(self) -> float:
        return -self.Q * self.Q * self.R

    def jost(self, rho):
        return square_well_jost(self.Q, self.R, self.ell, rho)

    def bound_states(self) -> List[BoundState]:
        # Only the l = -1/2 case of the benchmark carries one; it is supplied
        # externally through ScatteringData.with_bound_states.
        return []

    def potential(self, x):
        arr = np.asarray(x, dtype=float)
        value = np.where(arr <= self.R, -self.Q * self.Q, 0.0)
        return float(value) if np.ndim(x) == 0 else value

    def to_dict(self) -> Dict[str, Any]:
        return {"model": self.kind, "Q": self.Q, "R": self.R, "ell": self.ell}


# --- Hulthen ---


def _check_hulthen(delta: float, ell: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ScatteringDataError(f"Hulthen potential requires 0<delta<1, got {delta}")
    if not ell >= -0.5:
        raise ScatteringDataError(f"Hulthen potential requires l >= -1/2, got {ell}")
    if _is_integer(2.0 * ell):
        raise ScatteringDataError(f"Hulthen potential requires 2l not integer, got l={ell}")


def _reciprocal_gamma_split(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Split 1/Gamma(z) into (log part, direct part).

    Arguments near the poles at non-positive integers go through rgamma so
    that eigenvalues give an exact zero; all others are handled in logs.
    """
    near_pole = (z.real < 0.5) & (np.abs(z.imag) < 1.0)
    log_part = np.zeros(z.shape, dtype=complex)
    direct = np.ones(z.shape, dtype=complex)
    if np.any(~near_pole):
        log_part[~near_pole] = -ln_gamma_complex(z[~near_pole])
    if np.any(near_pole):
        direct[near_pole] = special.rgamma(z[near_pole])
    return log_part, direct


def hulthen_jost(delta: float, ell: float, rho):
    """Closed-form Hulthen Jost function, evaluated through log-gamma.

    ``rho`` may be complex; at rho = i*tau_j the value vanishes.
    """
    _check_hulthen(delta, ell)
    r = np.asarray(rho)
    r_c = r.astype(complex)
    a = 1j * r_c / delta
    disc = 2.0 * delta - r**2
    s = np.sqrt(np.asarray(disc, dtype=complex)) / delta

    log_num = (
        ln_gamma_complex(1.0 - 2.0 * a)
        + special.gammaln(2.0 * ell + 1.0)
        - math.log(double_factorial(ell - 1.0))
        + 1j * math.pi * ell / 2.0
    )
    log_d1, direct_d1 = _reciprocal_gamma_split(np.atleast_1d(ell + 1.0 - a + s))
    log_d2, direct_d2 = _reciprocal_gamma_split(np.atleast_1d(ell + 1.0 - a - s))
    log_d1, log_d2 = log_d1.reshape(r.shape), log_d2.reshape(r.shape)
    direct = (direct_d1 * direct_d2).reshape(r.shape)

    value = np.exp(log_num + log_d1 + log_d2) * direct
    value = value * _upper_branch_power(-r_c / delta, ell)
    if np.ndim(rho) == 0:
        return complex(value)
    return value


def hulthen_bound_states(delta: float, ell: float) -> List[float]:
    """tau_j = 1/(l+j) - (delta/2)(l+j), j = 1..floor(sqrt(2/delta) - l), tau_j > 0."""
    _check_hulthen(delta, ell)
    count = int(math.floor(math.sqrt(2.0 / delta) - ell))
    taus = [1.0 / (ell + j) - 0.5 * delta * (ell + j) for j in range(1, count + 1)]
    return sorted((t for t in taus if t > 0.0), reverse=True)


def hulthen_eigenfunction(delta: float, ell: float, j: int, x: np.ndarray) -> np.ndarray:
    """Regular eigenfunction for the j-th Hulthen bound state on x >= 0."""
    taus = hulthen_bound_states(delta, ell)
    if not 1 <= j <= len(taus):
        raise ScatteringDataError(f"Bound state index {j} outside 1..{len(taus)}")
    tau = taus[j - 1]
    xs = np.asarray(x, dtype=float)
    y = -np.expm1(-delta * xs)
    b = 2.0 * ell + j + 1.0 + 2.0 * tau / delta
    poly = hyp2f1_terminating(j - 1, b, 2.0 * ell + 2.0, y)
    norm = delta ** (ell + 1.0) * double_factorial(ell)
    return y ** (ell + 1.0) * np.exp(-tau * xs) / norm * poly


def hulthen_norming_constant(delta: float, ell: float, j: int) -> float:
    """c_j = 1 / integral of phi_j^2 over (0, inf), by Romberg on [0, X_max]."""
    taus = hulthen_bound_states(delta, ell)
    if not 1 <= j <= len(taus):
        raise ScatteringDataError(f"Bound state index {j} outside 1..{len(taus)}")
    tau = taus[j - 1]
    x_max = (math.log(1.0 / _NORMING_TAIL) + 5.0) / (2.0 * tau)
    xs = np.linspace(0.0, x_max, 2**_NORMING_LEVELS + 1)
    phi = hulthen_eigenfunction(delta, ell, j, xs)
    norm_sq = integrate.romb(phi * phi, dx=xs[1] - xs[0])
    return float(1.0 / norm_sq)


def hulthen_potential(delta: float, ell: float, x):
    """Hulthen effective potential, written to stay accurate as x -> 0."""
    xs = np.asarray(x, dtype=float)
    half = 0.5 * delta * xs
    centrifugal = ell * (ell + 1.0) * ((0.5 * delta / np.sinh(half)) ** 2 - 1.0 / xs**2)
    value = centrifugal - 2.0 * delta / np.expm1(delta * xs)
    return float(value) if np.ndim(x) == 0 else value


@dataclass(frozen=True)
class Hulthen:
    """Hulthen effective potential with screening delta."""

    delta: float
    ell: float

    kind: ClassVar[str] = "hulthen"

    def __post_init__(self) -> None:
        _check_hulthen(self.delta, self.ell)

    def jost(self, rho):
        return hulthen_jost(self.delta, self.ell, rho)

    def bound_states(self) -> List[BoundState]:
        taus = hulthen_bound_states(self.delta, self.ell)
        return [
            BoundState(tau, hulthen_norming_constant(self.delta, self.ell, j))
            for j, tau in enumerate(taus, start=1)
        ]

    def potential(self, x):
        return hulthen_potential(self.delta, self.ell, x)

    def to_dict(self) -> Dict[str, Any]:
        return {"model": self.kind, "delta": self.delta, "ell": self.ell}


PotentialModel = Union[SquareWell, Hulthen]


def model_from_dict(data: Dict[str, Any]) -> PotentialModel:
    """Inverse of ``to_dict`` on either model."""
    kind = data.get("model")
    if kind == SquareWell.kind:
        return SquareWell(Q=float(data["Q"]), R=float(data["R"]), ell=float(data["ell"]))
    if kind == Hulthen.kind:
        return Hulthen(delta=float(data["delta"]), ell=float(data["ell"]))
    raise ScatteringDataError(f"Unknown potential model: {kind!r}")


# --- Scattering data ---


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """Jost samples on a grid plus the discrete spectrum.

    ``source`` optionally records the model that produced the data.
    """

    ell: float
    grid: RhoGrid
    jost: np.ndarray
    bound_states: Tuple[BoundState, ...] = ()
    source: Optional[Dict[str, Any]] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if np.shape(self.jost) != (self.grid.count,):
            raise ScatteringDataError(
                f"Expected {self.grid.count} Jost samples, got {np.shape(self.jost)}"
            )
        if not np.all(np.abs(self.jost) > 0):
            raise ScatteringDataError("Jost samples must have |F| > 0 on the real line")
        for state in self.bound_states:
            if not (state.tau > 0 and state.c > 0):
                raise ScatteringDataError(f"Invalid bound state {state}")
        ordered = tuple(sorted(self.bound_states, key=lambda s: s.tau, reverse=True))
        object.__setattr__(self, "bound_states", ordered)

    @property
    def taus(self) -> np.ndarray:
        return np.array([s.tau for s in self.bound_states], dtype=float)

    @property
    def norming(self) -> np.ndarray:
        return np.array([s.c for s in self.bound_states], dtype=float)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.jost)

    def with_bound_states(self, states: Iterable[Union[BoundState, Sequence[float]]]) -> "ScatteringData":
        """Copy with the discrete spectrum replaced."""
        return replace(self, bound_states=tuple(BoundState(*s) for s in states))


def generate_data(model: PotentialModel, grid: RhoGrid) -> ScatteringData:
    """Sample the model's Jost function on ``grid`` and attach its bound states."""
    jost = np.asarray(model.jost(grid.nodes), dtype=complex)
    states = model.bound_states()
    data = ScatteringData(
        ell=float(model.ell),
        grid=grid,
        jost=jost,
        bound_states=tuple(states),
        source=model.to_dict(),
    )
    logger.info(
        "Generated %s data: %d Jost samples, %d bound states, |F| at rho_max = %.6f",
        model.kind, grid.count, len(states), abs(jost[-1]),
    )
    return data


def add_noise(data: ScatteringData, level: float, seed: int) -> ScatteringData:
    """Multiply every datum by (1 + level*u), u ~ U[-1, 1], from a seeded generator.

    tau, c and the real and imaginary parts of each Jost sample draw
    independently. ``level == 0`` returns an identical copy.
    """
    if not 0.0 <= level < 1.0:
        raise ScatteringDataError(f"Noise level must lie in [0, 1), got {level}")
    if level == 0.0:
        return replace(data, jost=data.jost.copy())

    rng = np.random.default_rng(seed)
    n = len(data.bound_states)
    tau_factor = 1.0 + level * rng.uniform(-1.0, 1.0, n)
    c_factor = 1.0 + level * rng.uniform(-1.0, 1.0, n)
    re_factor = 1.0 + level * rng.uniform(-1.0, 1.0, data.grid.count)
    im_factor = 1.0 + level * rng.uniform(-1.0, 1.0, data.grid.count)

    jost = data.jost.real * re_factor + 1j * data.jost.imag * im_factor
    states = [
        BoundState(s.tau * ft, s.c * fc)
        for s, ft, fc in zip(data.bound_states, tau_factor, c_factor)
    ]
    logger.info("Applied %.1f%% multiplicative noise (seed=%d)", 100.0 * level, seed)
    return replace(data, jost=jost, bound_states=tuple(states))


def true_potential(model: PotentialModel, x):
    """Exact q(x) of the model."""
    if np.any(np.asarray(x) <= 0):
        raise ScatteringDataError("Potential is evaluated at x > 0 only")
    return model.potential(x)
