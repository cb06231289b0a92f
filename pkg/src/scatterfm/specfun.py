"""Cylindrical Bessel family used by the 2D fundamental solution and oracles.

Evaluation is delegated to scipy.special, which meets the 1e-12 absolute
error budget on the supported range n <= 60, x <= 200. The wrappers
enforce argument domains and overflow limits so misuse fails loudly
instead of returning inf/nan into an assembly.
"""

import numpy as np
import scipy.special

MAX_ORDER = 60
MAX_ARGUMENT = 200.0
OVERFLOW_LIMIT = 1e300

# first positive zero of J_0, via scipy.special.jn_zeros
_J0_FIRST_ZERO = float(scipy.special.jn_zeros(0, 1)[0])


class BesselDomainError(ValueError):
    """Argument outside the supported domain of the requested function."""


class BesselOverflowError(OverflowError):
    """Result magnitude exceeds the representable budget (1e300)."""


def _check(n, x, positive_only):
    if int(n) != n or n < 0 or n > MAX_ORDER:
        raise BesselDomainError(f"order must be an integer in [0, {MAX_ORDER}], got {n}")
    x = float(x)
    if not np.isfinite(x) or x > MAX_ARGUMENT:
        raise BesselDomainError(f"argument must be finite and <= {MAX_ARGUMENT}, got {x}")
    if positive_only and x <= 0.0:
        raise BesselDomainError(f"argument must be > 0, got {x}")
    if not positive_only and x < 0.0:
        raise BesselDomainError(f"argument must be >= 0, got {x}")
    return int(n), x


def _guard(value):
    if not np.all(np.isfinite(np.atleast_1d(value))) or np.max(np.abs(value)) > OVERFLOW_LIMIT:
        raise BesselOverflowError("result magnitude exceeds 1e300")
    return value


def bessel_j(n, x):
    """Bessel function of the first kind J_n(x), x >= 0."""
    n, x = _check(n, x, positive_only=False)
    return float(_guard(scipy.special.jv(n, x)))


def bessel_y(n, x):
    """Bessel function of the second kind Y_n(x), x > 0."""
    n, x = _check(n, x, positive_only=True)
    return float(_guard(scipy.special.yv(n, x)))


def hankel1(n, x):
    """Outgoing Hankel function H^(1)_n(x) = J_n(x) + i Y_n(x), x > 0."""
    return complex(bessel_j(n, x), bessel_y(n, x))


def bessel_i(n, x):
    """Modified Bessel function I_n(x), x >= 0."""
    n, x = _check(n, x, positive_only=False)
    return float(_guard(scipy.special.iv(n, x)))


def bessel_k(n, x):
    """Modified Bessel function K_n(x), x > 0."""
    n, x = _check(n, x, positive_only=True)
    return float(_guard(scipy.special.kv(n, x)))


def first_dirichlet_eigen_wavenumber(disc_radius):
    """Smallest k > 0 whose square is an interior Dirichlet eigenvalue of a disc.

    For a disc of radius a this is j_{0,1}/a with j_{0,1} the first positive
    zero of J_0. Running a reconstruction at exactly this wavenumber is the
    classical failure case for unmodified sampling methods.
    """
    a = float(disc_radius)
    if a <= 0.0:
        raise BesselDomainError(f"disc radius must be > 0, got {a}")
    return _J0_FIRST_ZERO / a
