"""Scalar fields on the group: the extremal, its conformal orbit, the
Cayley transform and the first variations ``omega_j``.

Fields evaluate on batches: ``f.eval(z, w)`` with ``z`` of shape
``(N, 2n)`` and ``w`` of shape ``(N, m)`` returns shape ``(N,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate as _quad

from . import kernels
from .constants import sphere_volume
from .errors import PreconditionError
from .group import GroupPoint, GroupSpec, hnorm, j_map, mul

CYLINDRICAL = "cylindrical"
NONE = "none"


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real function on the group with quadrature metadata.

    Attributes
    ----------
    eval : callable
        Batch evaluator ``(z, w) -> values``.
    symmetry : {"cylindrical", "none"}
        ``"cylindrical"`` means the value depends on ``|z|`` and ``|w|`` only.
    decay : float
        Exponent ``alpha`` with ``|f| <= C (1 + |xi|)^{-alpha}``; ``inf`` for
        compact support.
    name : str
    grad : callable, optional
        Euclidean gradient ``(z, w) -> (df/dz, df/dw)``.
    """

    eval: Callable
    symmetry: str = NONE
    decay: float = 0.0
    name: str = "field"
    grad: Optional[Callable] = None

    def __post_init__(self):
        if self.symmetry not in (CYLINDRICAL, NONE):
            raise PreconditionError(f"unknown symmetry {self.symmetry!r}")

    def __call__(self, p, w=None):
        """Evaluate at a :class:`GroupPoint` (scalar) or at arrays (batch)."""
        if isinstance(p, GroupPoint):
            return float(self.eval(p.z[None, :], p.w[None, :])[0])
        return self.eval(np.atleast_2d(p), np.atleast_2d(w))

    def scaled(self, c: float) -> "ScalarField":
        c = float(c)
        g = None if self.grad is None else (lambda z, w: tuple(c * d for d in self.grad(z, w)))
        return ScalarField(lambda z, w: c * self.eval(z, w), self.symmetry, self.decay,
                           f"{c:g}*{self.name}", g)


@dataclass(frozen=True)
class ConformalParams:
    """Dilation ``mu``, translation ``eta`` and order ``s`` of an orbit element."""

    mu: float
    eta: GroupPoint
    s: float

    def __post_init__(self):
        if not self.mu > 0:
            raise PreconditionError(f"mu must be positive, got {self.mu}")


def _sq(a):
    return np.einsum("ni,ni->n", a, a)


def bubble(G: GroupSpec, power: float, rho: float = 1.0, name: str | None = None) -> ScalarField:
    """``((rho + |z|^2/4)^2 + |w|^2)^{-power}`` with its gradient."""
    power, rho = float(power), float(rho)
    if not rho > 0:
        raise PreconditionError(f"rho must be positive, got {rho}")

    def ev(z, w):
        return np.exp(-power * kernels.log_bubble(z, w, rho))

    def gr(z, w):
        lb = kernels.log_bubble(z, w, rho)
        v = np.exp(-(power + 1) * lb)
        a = rho + 0.25 * _sq(z)
        return (-power * v * a)[:, None] * z, (-2 * power * v)[:, None] * w

    return ScalarField(ev, CYLINDRICAL, 4 * power, name or f"bubble({power:g},{rho:g})", gr)


def extremal_U(G: GroupSpec, s: float) -> ScalarField:
    """The extremal ``((1 + |z|^2/4)^2 + |w|^2)^{-(Q-2s)/4}``."""
    if not 0 < s < G.n + 1:
        raise PreconditionError(f"extremal_U needs 0 < s < n+1, got {s}")
    return bubble(G, (G.Q - 2 * s) / 4, 1.0, name="U")


def phi(G: GroupSpec, s: float, rho: float) -> ScalarField:
    """``phi_{s,rho} = ((rho + |z|^2/4)^2 + |w|^2)^{-(Q+2s)/4}``."""
    if not -(G.n + 1) < s < G.n + 1:
        raise PreconditionError(f"phi needs |s| < n+1, got {s}")
    return bubble(G, (G.Q + 2 * s) / 4, rho, name=f"phi({s:g},{rho:g})")


def cayley_jacobian(G: GroupSpec) -> ScalarField:
    """Jacobian of the Cayley transform, ``B^{-Q/2}``."""
    return bubble(G, G.Q / 2, 1.0, name="J")


def translate_field(G: GroupSpec, f: ScalarField, h: GroupPoint) -> ScalarField:
    """``xi -> f(h o xi)``."""
    hz, hw = h.rows()

    def ev(z, w):
        return f.eval(*mul(G, hz, hw, z, w))

    return ScalarField(ev, NONE, f.decay, f"{f.name}(h o .)")


def conformal_orbit(G: GroupSpec, p: ConformalParams) -> ScalarField:
    """``mu^{(Q-2s)/2} U(delta_mu(eta^{-1} o xi))``."""
    U = extremal_U(G, p.s)
    mu = float(p.mu)
    c = mu ** ((G.Q - 2 * p.s) / 2)
    ez, ew = -p.eta.z[None, :], -p.eta.w[None, :]

    def ev(z, w):
        tz, tw = mul(G, ez, ew, z, w)
        return c * U.eval(mu * tz, mu * mu * tw)

    sym = CYLINDRICAL if not (np.any(p.eta.z) or np.any(p.eta.w)) else NONE
    return ScalarField(ev, sym, U.decay, f"U[mu={mu:g}]")


def cayley_batch(G: GroupSpec, z, w) -> np.ndarray:
    """Cayley transform of each row, shape ``(N, 2n+m+1)``."""
    z, w = np.atleast_2d(z), np.atleast_2d(w)
    zz, ww = _sq(z), _sq(w)
    a = 1.0 + zz / 4
    b = a * a + ww
    # (A - J_w) z with J_w = sum_k w_k U^(k)^T
    jz = np.einsum("nk,kji,nj->ni", w, G.mats, z)
    abar_z = a[:, None] * z - jz
    return np.column_stack([abar_z / b[:, None], 2 * w / b[:, None], (-1 + zz**2 / 16 + ww) / b])


def cayley(G: GroupSpec, g: GroupPoint) -> np.ndarray:
    """Cayley transform of one point onto the unit sphere ``S^{2n+m}``."""
    Abar = (1 + g.z @ g.z / 4) * np.eye(2 * G.n) - j_map(G, g.w)
    B = (1 + g.z @ g.z / 4) ** 2 + g.w @ g.w
    return np.concatenate([Abar @ g.z, 2 * g.w, [-1 + (g.z @ g.z) ** 2 / 16 + g.w @ g.w]]) / B


def omega_all(G: GroupSpec, z, w) -> np.ndarray:
    """All ``omega_j`` at each row, shape ``(N, 2n+m+1)``."""
    return kernels.omega(np.atleast_2d(z), np.atleast_2d(w), G.mats)


def omega(G: GroupSpec, s: float, j: int) -> ScalarField:
    """The first variation ``omega_j`` (1-based).

    With ``U_{mu,eta}`` the conformal orbit, ``omega_j`` is
    ``4/(Q-2s) U^{-1} dU/d eta_j`` for translations and
    ``2/(Q-2s) U^{-1} dU/d mu`` for the dilation, at ``(mu, eta) = (1, 0)``.
    The chain rule through the group law gives closed forms in which the
    order ``s`` cancels:

        omega_z = (A z + sum_k w_k U^(k) z) / B,  omega_w = 2 w / B,
        omega_last = (1 - |z|^4/16 - |w|^2) / B.
    """
    if not 0 < s < 1:
        raise PreconditionError(f"omega needs 0 < s < 1, got {s}")
    d = G.dim + 1
    if not 1 <= int(j) <= d:
        raise PreconditionError(f"omega index must be in 1..{d}, got {j}")
    j = int(j) - 1
    return ScalarField(lambda z, w: omega_all(G, z, w)[:, j], NONE, 0.0, f"omega{j + 1}")


def omega_fd(G: GroupSpec, s: float, j: int, z, w, h: float = 1e-5) -> np.ndarray:
    """Central-difference ``omega_j`` from the conformal orbit (reference only)."""
    z, w = np.atleast_2d(z), np.atleast_2d(w)
    d = G.dim + 1
    U = extremal_U(G, s)
    u0 = U.eval(z, w)
    hh = h * (1 + hnorm(z, w))
    j = int(j) - 1

    def orbit(t):
        eta_z = np.zeros((1, 2 * G.n))
        eta_w = np.zeros((1, G.m))
        mu = 1.0
        if j < 2 * G.n:
            eta_z = eta_z + np.eye(2 * G.n)[j] * t[:, None]
        elif j < d - 1:
            eta_w = eta_w + np.eye(G.m)[j - 2 * G.n] * t[:, None]
        else:
            mu = 1.0 + t
        tz, tw = mul(G, -eta_z, -eta_w, z, w)
        mu = np.broadcast_to(mu, t.shape)
        return mu ** ((G.Q - 2 * s) / 2) * U.eval(mu[:, None] * tz, (mu**2)[:, None] * tw)

    deriv = (orbit(hh) - orbit(-hh)) / (2 * hh)
    pref = 2.0 if j == d - 1 else 4.0
    return pref / (G.Q - 2 * s) * deriv / u0


def sphere_coordinate_mean(fn: Callable[[float], float], D: int) -> float:
    """Average of ``fn(x_1)`` over the uniform measure on ``S^D``."""
    # x_1 has density proportional to (1 - x^2)^{(D-2)/2} on [-1, 1]
    e = (D - 2) / 2
    num = _quad.quad(fn, -1, 1, weight="alg", wvar=(e, e), epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    den = math.exp(math.lgamma(0.5) + math.lgamma(D / 2) - math.lgamma((D + 1) / 2))
    return num / den


def f_epsilon_constant(G: GroupSpec, eps: float) -> float:
    """``C_eps`` with ``int F_eps^2 J = sphere_volume``."""
    if not 0 < eps < 0.5:
        raise PreconditionError(f"f_epsilon needs 0 < eps < 1/2, got {eps}")
    r = math.sqrt(1 - eps * eps)
    # the Cayley transform carries J dxi to a uniform measure of mass V
    mean = sphere_coordinate_mean(lambda x: (r + eps * x) ** 2, G.dim)
    if not (np.isfinite(mean) and mean > 0):
        raise PreconditionError("normalisation integral for F_eps did not converge")
    return 1.0 / math.sqrt(mean)


def f_epsilon(G: GroupSpec, eps: float) -> ScalarField:
    """``F_eps = C_eps (sqrt(1 - eps^2) + eps omega_1)``."""
    C = f_epsilon_constant(G, eps)
    r = math.sqrt(1 - eps * eps)

    def ev(z, w):
        return C * (r + eps * omega_all(G, z, w)[:, 0])

    return ScalarField(ev, NONE, 0.0, f"F_eps({eps:g})")


def bump(G: GroupSpec, centre: GroupPoint, radius: float = 1.0, amp: float = 1.0) -> ScalarField:
    """Smooth compactly supported bump ``amp exp(-1/(1 - r^2))`` in the
    homogeneous distance ``r = |centre^{-1} o xi| / radius``."""
    cz, cw = -centre.z[None, :], -centre.w[None, :]
    radius, amp = float(radius), float(amp)

    def ev(z, w):
        r = hnorm(*mul(G, cz, cw, z, w)) / radius
        out = np.zeros_like(r)
        inside = r < 1
        out[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out

    return ScalarField(ev, NONE, math.inf, f"bump(r={radius:g})")


def field_sum(fields, coeffs, name: str = "sum") -> ScalarField:
    """Linear combination of fields; decay is the slowest component's."""
    fields, coeffs = list(fields), [float(c) for c in coeffs]

    def ev(z, w):
        return sum(c * f.eval(z, w) for c, f in zip(coeffs, fields))

    sym = CYLINDRICAL if all(f.symmetry == CYLINDRICAL for f in fields) else NONE
    return ScalarField(ev, sym, min(f.decay for f in fields), name)


def field_product(f: ScalarField, g: ScalarField, name: str | None = None) -> ScalarField:
    """Pointwise product; decays add."""
    sym = CYLINDRICAL if f.symmetry == g.symmetry == CYLINDRICAL else NONE
    return ScalarField(lambda z, w: f.eval(z, w) * g.eval(z, w), sym, f.decay + g.decay,
                       name or f"{f.name}*{g.name}")


def critical_volume(G: GroupSpec) -> float:
    """Integral of the Cayley Jacobian, exposed for callers of this module."""
    return sphere_volume(G.n, G.m)
