"""Closed-form sharp constants in log-gamma arithmetic.

Every constant depends on ``(n, m, s)`` only, never on a particular
generator system.  Each is assembled as a sum of logs and exponentiated
once.
"""

from __future__ import annotations

import math

from scipy.special import gammaln

from .errors import PreconditionError

LOG_PI = math.log(math.pi)
LOG2 = math.log(2.0)


def _dims(n, m):
    if int(n) != n or int(m) != m or n < 1 or m < 1:
        raise PreconditionError(f"dimensions must be positive integers, got ({n}, {m})")
    return int(n), int(m)


def _unit(s, name):
    if not 0.0 < s < 1.0:
        raise PreconditionError(f"{name} requires 0 < s < 1, got s = {s}")


def _green_range(n, s, name):
    if not 0.0 < s < n + 1:
        raise PreconditionError(f"{name} requires 0 < s < n+1 = {n + 1}, got s = {s}")


def _log_gamma_ratio(n, m, s):
    """log of Gamma((n+1+s)/2) Gamma((n+m+s)/2) / (Gamma((n+1-s)/2) Gamma((n+m-s)/2))."""
    return (gammaln((n + 1 + s) / 2) + gammaln((n + m + s) / 2)
            - gammaln((n + 1 - s) / 2) - gammaln((n + m - s) / 2))


def log_abs_gamma_neg(s: float) -> float:
    """``log|Gamma(-s)|`` via the reflection formula, for non-integer ``s``."""
    # Gamma(-s) Gamma(1+s) = -pi / sin(pi s)
    return LOG_PI - math.log(abs(math.sin(math.pi * s))) - float(gammaln(1 + s))


def sharp_sobolev(n: int, m: int, s: float) -> float:
    """Sharp fractional Sobolev constant ``S_{n,m,s}``."""
    n, m = _dims(n, m)
    _unit(s, "sharp_sobolev")
    Q = 2 * n + 2 * m
    lg = (s * (Q + 2 * n) / Q * 2 * LOG2 + s * (2 * n + m) / Q * LOG_PI
          + _log_gamma_ratio(n, m, s)
          + 2 * s / Q * (gammaln(n + m / 2) - gammaln(2 * n + m)))
    return math.exp(lg)


def hardy_const(n: int, m: int, s: float) -> float:
    """Sharp Hardy constant ``N_{n,m,s}``; also the eigenvalue of U."""
    n, m = _dims(n, m)
    _unit(s, "hardy_const")
    return math.exp(2 * s * LOG2 + _log_gamma_ratio(n, m, s))


def green_const(n: int, m: int, s: float) -> float:
    """Green's function constant ``c_{n,m,s}``, valid for ``0 < s < n+1``."""
    n, m = _dims(n, m)
    _green_range(n, s, "green_const")
    lg = (gammaln((n + 1 - s) / 2) + gammaln((n + m - s) / 2)
          - (n + 1 + s) * LOG2 - (n + (m + 1) / 2) * LOG_PI - gammaln(s))
    return math.exp(lg)


def groundstate_const(n: int, m: int, s: float) -> float:
    """Ground-state representation constant ``a_{n,m,s}``."""
    n, m = _dims(n, m)
    _unit(s, "groundstate_const")
    lg = ((-n - 2 + s) * LOG2 - (n + (m + 1) / 2) * LOG_PI
          + gammaln((n + 1 + s) / 2) + gammaln((n + m + s) / 2)
          - log_abs_gamma_neg(s))
    return math.exp(lg)


def sphere_volume(n: int, m: int) -> float:
    """Integral of the Cayley Jacobian over the group."""
    n, m = _dims(n, m)
    lg = n * 2 * LOG2 + (n + m / 2) * LOG_PI + gammaln(n + m / 2) - gammaln(2 * n + m)
    return math.exp(lg)


def logsobolev_const(n: int, m: int) -> float:
    """Sharp log-Sobolev constant."""
    n, m = _dims(n, m)
    Q = 2 * n + 2 * m
    lg = ((n + 3) * LOG2 + (n + (m + 1) / 2) * LOG_PI - math.log(Q)
          - gammaln((n + 1) / 2) - gammaln((n + m) / 2))
    return math.exp(lg)


def trace_prefactor(s: float) -> float:
    """``2^{1-2s} Gamma(1-s) / Gamma(s)``."""
    _unit(s, "trace_prefactor")
    return math.exp((1 - 2 * s) * LOG2 + gammaln(1 - s) - gammaln(s))


def trace_factor(n: int, m: int, s: float) -> float:
    """Sharp constant of the Sobolev trace inequality."""
    return trace_prefactor(s) * sharp_sobolev(n, m, s)


def hls_const(n: int, m: int, s: float) -> float:
    """Sharp Hardy-Littlewood-Sobolev constant ``1 / (S c)``."""
    return 1.0 / (sharp_sobolev(n, m, s) * green_const(n, m, s))


def poisson_norm(n: int, m: int, s: float) -> float:
    """Normalisation ``C_1`` of the Poisson kernel ``C_1 rho^{2s} phi_{s, rho^2/4}``."""
    n, m = _dims(n, m)
    _unit(s, "poisson_norm")
    lg = ((-2 * n - 2 * s) * LOG2 - (n + m / 2) * LOG_PI
          + gammaln(n + s) + gammaln((n + m + s) / 2)
          - gammaln(s) - gammaln((n + s) / 2))
    return math.exp(lg)


def log_bubble_integral(n: int, m: int, b: float) -> float:
    """``log int ((1 + |z|^2/4)^2 + |w|^2)^{-b} dz dw`` for ``b > (n+m)/2``."""
    n, m = _dims(n, m)
    if not b > (n + m) / 2:
        raise PreconditionError(f"bubble power b = {b} must exceed Q/4 = {(n + m) / 2}")
    return float(n * 2 * LOG2 + (n + m / 2) * LOG_PI
                 + gammaln(2 * b - m - n) + gammaln(b - m / 2)
                 - gammaln(2 * b - m) - gammaln(b))


def logsobolev_limit_const(n: int, m: int) -> float:
    """``lim_{s -> 0} S_{n,m,s} c_{n,m,s} / s``."""
    n, m = _dims(n, m)
    lg = (gammaln((n + 1) / 2) + gammaln((n + m) / 2)
          - (n + 1) * LOG2 - (n + (m + 1) / 2) * LOG_PI)
    return math.exp(lg)


def frank_lieb_const(n: int, lam: float) -> float:
    """Sharp HLS constant on the Heisenberg group with norm ``(|z|^4 + t^2)^{1/4}``.

    Group law ``t + t' + 2 Im <z, z'>`` on ``C^n x R`` with Lebesgue
    measure, kernel ``|xi^{-1} eta|^{-lam}`` and ``0 < lam < Q = 2n + 2``.
    """
    if int(n) != n or n < 1:
        raise PreconditionError(f"n must be a positive integer, got {n}")
    Q = 2 * n + 2
    if not 0 < lam < Q:
        raise PreconditionError(f"need 0 < lambda < Q = {Q}, got {lam}")
    lg = (lam / Q * ((n + 1) * LOG_PI - (n - 1) * LOG2 - gammaln(n + 1))
          + gammaln(n + 1) + gammaln((Q - lam) / 2) - 2 * gammaln((2 * Q - lam) / 4))
    return math.exp(lg)


def all_constants(n: int, m: int, s: float) -> dict[str, tuple[float, str]]:
    """Every constant at ``(n, m, s)`` with the range it is defined on."""
    return {
        "S": (sharp_sobolev(n, m, s), "0<s<1"),
        "N": (hardy_const(n, m, s), "0<s<1"),
        "c": (green_const(n, m, s), "0<s<n+1"),
        "a": (groundstate_const(n, m, s), "0<s<1"),
        "V": (sphere_volume(n, m), "all s"),
        "logsob": (logsobolev_const(n, m), "all s"),
        "trace": (trace_factor(n, m, s), "0<s<1"),
        "hls": (hls_const(n, m, s), "0<s<1"),
        "C1": (poisson_norm(n, m, s), "0<s<1"),
    }
