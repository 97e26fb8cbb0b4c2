"""Special functions behind the inverse solver.

Spherical Bessel functions of real order ell >= -1/2 (real and imaginary
argument), Jacobi polynomials P_n^(alpha,0), complex log-gamma, the
Pochhammer symbol and terminating Gauss hypergeometric sums.

All functions are pure and vectorised over their argument arrays.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import special

from core.errors import (
    BesselOverflowError,
    GammaPoleError,
    HypergeometricDivisionError,
    SpecialFunctionDomainError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

MIN_ORDER = -0.5
_SEED_FLOOR = 1e-290  # below this the downward recurrence has nothing to carry
_LOG_DOUBLE_MAX = math.log(np.finfo(float).max)


def _check_order(nu: float) -> None:
    if not nu >= MIN_ORDER:
        raise SpecialFunctionDomainError(f"Bessel order must be >= -1/2, got {nu}")


def _positive_argument(z: ArrayLike) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if arr.size == 0 or not np.all(arr > 0):
        raise SpecialFunctionDomainError("Spherical Bessel argument must be > 0")
    return arr


def double_factorial(ell: float) -> float:
    """(2l+1)!! extended to real l as 2^(l+1) Gamma(l+3/2) / sqrt(pi)."""
    return 2.0 ** (ell + 1.0) * special.gamma(ell + 1.5) / math.sqrt(math.pi)


def sph_bessel_j(nu: float, z: ArrayLike) -> ArrayLike:
    """Spherical Bessel function j_nu(z) = sqrt(pi/2z) J_(nu+1/2)(z).

    Raises:
        SpecialFunctionDomainError: if nu < -1/2 or any z <= 0.
    """
    _check_order(nu)
    arr = _positive_argument(z)
    value = np.sqrt(np.pi / (2.0 * arr)) * special.jv(nu + 0.5, arr)
    if np.ndim(z) == 0:
        return float(value)
    return value


def riccati_bessel(ell: float, z: ArrayLike) -> ArrayLike:
    """b_l(z) = z j_l(z), the free regular solution."""
    return np.asarray(z, dtype=float) * sph_bessel_j(ell, z)


@dataclass(frozen=True)
class BesselOrderLadder:
    """j_(l+2n+1)(z) for n = 0..M together with j_l(z), at shared arguments.

    ``odd`` has shape (M+1, len(z)); ``base`` has shape (len(z),).
    """

    ell: float
    z: np.ndarray
    odd: np.ndarray
    base: np.ndarray

    @property
    def count(self) -> int:
        return int(self.odd.shape[0])

    def order(self, n: int) -> float:
        return self.ell + 2 * n + 1

    def riccati(self) -> np.ndarray:
        """b_l(z) at every argument of the ladder."""
        return self.z * self.base


def bessel_ladder(ell: float, M: int, z: ArrayLike) -> BesselOrderLadder:
    """Evaluate the ladder of orders appearing in the truncated system.

    The full integer-step ladder l, l+1, ..., l+2M+2 is produced by downward
    recurrence j_(nu-1) = (2nu+1)/z j_nu - j_(nu+1), seeded with the two top
    orders. Downward is the stable direction for j at every z. Columns whose
    seed underflows are filled order by order instead.
    """
    _check_order(ell)
    if M < 0:
        raise SpecialFunctionDomainError(f"Ladder size M must be >= 0, got {M}")
    args = np.atleast_1d(_positive_argument(z))

    depth = 2 * M + 3
    values = np.empty((depth,) + args.shape)
    values[-1] = sph_bessel_j(ell + depth - 1, args)
    values[-2] = sph_bessel_j(ell + depth - 2, args)
    for k in range(depth - 2, 0, -1):
        nu = ell + k
        values[k - 1] = (2.0 * nu + 1.0) / args * values[k] - values[k + 1]

    weak = np.abs(values[-1]) < _SEED_FLOOR
    if np.any(weak):
        small = args[weak]
        for k in [0, *range(1, depth - 1, 2)]:
            values[k][weak] = sph_bessel_j(ell + k, small)
        logger.debug("Ladder l=%g: %d arguments evaluated per order", ell, int(weak.sum()))

    return BesselOrderLadder(
        ell=float(ell),
        z=args,
        odd=np.ascontiguousarray(values[1:depth:2]),
        base=values[0].copy(),
    )


# --- Imaginary argument ---


def _scaled_modified(nu: float, z: float, tau: float, ell: float) -> float:
    # e^{-z} I_nu(z) / tau^{l+1}; keeps tau -> 0 finite for the orders used here
    return special.ive(nu, z) / tau ** (ell + 1.0)


def modified_products(
    ell: float, M: int, tau: float, x: float
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Bound-state products for one (tau, x), exponentially scaled.

    Returns (jj, jb, log_scale) with
        jj[n, m] * exp(log_scale) = j_(l+2n+1)(i tau x) j_(l+2m+1)(i tau x) / (i tau)^(2l+2)
        jb[n]    * exp(log_scale) = j_(l+2n+1)(i tau x) b_l(i tau x) / (i tau)^(2l+2)
    and log_scale = 2 tau x. Both products are real: j_nu(iz) =
    i^nu sqrt(pi/2z) I_(nu+1/2)(z) and the non-integer powers of i cancel
    against (i tau)^(2l+2), leaving the sign (-1)^(n+m).
    """
    _check_order(ell)
    if not (tau > 0 and x > 0):
        raise SpecialFunctionDomainError("tau and x must be positive")
    z = tau * x
    n = np.arange(M + 1)
    signs = np.where(n % 2 == 0, 1.0, -1.0)
    scaled_i = np.array(
        [_scaled_modified(ell + 2 * k + 1.5, z, tau, ell) for k in range(M + 1)]
    ) * signs
    scaled_b = _scaled_modified(ell + 0.5, z, tau, ell)
    jj = (np.pi / (2.0 * z)) * np.outer(scaled_i, scaled_i)
    jb = (np.pi / 2.0) * scaled_i * scaled_b
    return jj, jb, 2.0 * z


def modified_product(
    ell: float, n: int, tau: float, x: float, m: Optional[int] = None
) -> float:
    """Real value of j_(l+2n+1)(i tau x) g(i tau x) / (i tau)^(2l+2).

    g is j_(l+2m+1) when ``m`` is given and b_l otherwise.

    Raises:
        BesselOverflowError: if the unscaled value leaves the double range.
    """
    top = n if m is None else max(n, m)
    jj, jb, log_scale = modified_products(ell, top, tau, x)
    scaled = jb[n] if m is None else jj[n, m]
    if scaled == 0.0:
        return 0.0
    if math.log(abs(scaled)) + log_scale > _LOG_DOUBLE_MAX:
        raise BesselOverflowError(
            f"Product for tau*x={tau * x:.4g} overflows; use modified_products()"
        )
    return float(scaled * math.exp(log_scale))


# --- Jacobi polynomials ---


def jacobi_p_seq(M: int, alpha: float, u: ArrayLike) -> np.ndarray:
    """P_n^(alpha,0)(u) for n = 0..M by the three-term recurrence in u.

    Returns an array of shape (M+1,) + shape(u).
    """
    if not alpha > -1.0:
        raise SpecialFunctionDomainError(f"Jacobi alpha must be > -1, got {alpha}")
    if M < 0:
        raise SpecialFunctionDomainError(f"Jacobi degree M must be >= 0, got {M}")
    u_arr = np.asarray(u, dtype=float)
    out = np.empty((M + 1,) + u_arr.shape)
    out[0] = 1.0
    if M == 0:
        return out
    out[1] = (alpha + 1.0) + (alpha + 2.0) * (u_arr - 1.0) / 2.0
    a2 = alpha * alpha
    for n in range(2, M + 1):
        s = 2.0 * n + alpha
        lead = 2.0 * n * (n + alpha) * (s - 2.0)
        c1 = (s - 1.0) * (s * (s - 2.0) * u_arr + a2)
        c2 = 2.0 * (n + alpha - 1.0) * (n - 1.0) * s
        out[n] = (c1 * out[n - 1] - c2 * out[n - 2]) / lead
    return out


# --- Gamma family ---


def ln_gamma_complex(z: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
    """Principal branch of log Gamma(z) for complex z.

    Raises:
        GammaPoleError: if any z is a non-positive integer.
    """
    arr = np.asarray(z, dtype=complex)
    on_axis = (arr.imag == 0.0) & (arr.real <= 0.0)
    if np.any(on_axis & (arr.real == np.round(arr.real))):
        raise GammaPoleError("log Gamma has a pole at non-positive integers")
    value = special.loggamma(arr)
    if np.ndim(z) == 0:
        return complex(value)
    return value


def pochhammer(a: float, k: int) -> float:
    """Rising factorial (a)_k = a(a+1)...(a+k-1); (a)_0 = 1."""
    if k < 0 or int(k) != k:
        raise SpecialFunctionDomainError(f"Pochhammer index must be a non-negative integer, got {k}")
    return float(special.poch(a, int(k)))


def hyp2f1_terminating(k: int, b: float, c: float, y: ArrayLike) -> ArrayLike:
    """2F1(-k, b; c; y) summed exactly as a polynomial of degree k.

    Raises:
        HypergeometricDivisionError: if c + i == 0 for some 0 <= i < k.
    """
    if k < 0 or int(k) != k:
        raise SpecialFunctionDomainError(f"Terminating index must be >= 0, got {k}")
    y_arr = np.asarray(y, dtype=float)
    term = np.ones_like(y_arr)
    total = np.ones_like(y_arr)
    for i in range(int(k)):
        if c + i == 0:
            raise HypergeometricDivisionError(f"c + {i} vanishes for c={c}")
        term = term * ((-k + i) * (b + i)) / ((c + i) * (i + 1.0)) * y_arr
        total = total + term
    if np.ndim(y) == 0:
        return float(total)
    return total
