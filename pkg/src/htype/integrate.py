"""Quadrature on the group and on pairs of group points.

Double integrals with a singular kernel in ``zeta = eta^{-1} o xi`` are
computed after the substitution ``xi = eta o zeta`` and a polar split
``zeta = delta_rho sigma``.  The outer point is drawn from a bubble
density ``p_b`` and the pair estimator uses the balance weight
``2 / (p(xi) + p(eta))``, which is unbiased for symmetric integrands and
keeps the variance finite when either point runs off to infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate as _quad
from scipy import optimize as _opt
from scipy.special import gammaln

from . import _mc
from ._sampling import (log_bubble_density, log_polar_density, log_sphere_area, polar_step,
                        sample_bubble, sample_sphere)
from .constants import green_const, groundstate_const
from .errors import ConvergenceError, PreconditionError
from .extremals import CYLINDRICAL, ScalarField
from .group import GroupPoint, GroupSpec, hnorm, mul

METHODS = ("tensor-grid", "polar-grid", "monte-carlo")


@dataclass(frozen=True)
class IntegrationSpec:
    """Method and resolution of an integral.

    Attributes
    ----------
    method : {"monte-carlo", "polar-grid", "tensor-grid"}
    nodes : int
        Sample count (Monte Carlo) or nodes per radial axis (grids).
    truncation_radius : float
        Outer radius of grid methods.
    seed : int
        Root seed of the Monte Carlo stream.
    target_rel_tol : float
        Tolerance used to accept analytic tail remainders.
    outer_exponent : float, optional
        Fixes the bubble power ``b`` of the outer density instead of
        deriving it from the integrand's decay.  Holding it fixed keeps
        random numbers common across a family of integrands.
    antithetic : bool
        Pair every plain Monte Carlo sample with its image under
        ``z -> -z``.
    """

    method: str = "monte-carlo"
    nodes: int = 200_000
    truncation_radius: float = 20.0
    seed: int = 0
    target_rel_tol: float = 1e-2
    outer_exponent: Optional[float] = None
    antithetic: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise PreconditionError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.method == "monte-carlo" and self.nodes < 1000:
            raise PreconditionError(f"monte-carlo needs at least 1000 samples, got {self.nodes}")
        if self.method != "monte-carlo" and self.nodes < 8:
            raise PreconditionError(f"grid methods need at least 8 nodes, got {self.nodes}")
        if not self.truncation_radius > 0:
            raise PreconditionError("truncation_radius must be positive")

    def with_seed(self, seed: int) -> "IntegrationSpec":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class Estimate:
    """A value with its error bar.

    ``error`` is a standard error for Monte Carlo and a resolution-halving
    difference plus any tail remainder for grids.
    """

    value: float
    error: float
    spec_used: IntegrationSpec
    tail: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def std_error(self) -> float:
        return self.error if self.spec_used.method == "monte-carlo" else float("nan")

    @property
    def richardson_error(self) -> float:
        return self.error if self.spec_used.method != "monte-carlo" else float("nan")

    def to_dict(self) -> dict:
        return {"value": self.value, "error": self.error, "tail": self.tail,
                "spec": self.spec_used.to_dict()}


def _from_mc(res: _mc.MCResult, spec, scale=1.0, **extra) -> Estimate:
    return Estimate(float(res.mean[0] * scale), float(res.stderr[0] * abs(scale)), spec,
                    extra=dict(samples=res.count, **extra))


def _finite_decay(f: ScalarField, cap: float) -> float:
    return min(float(f.decay), cap)


# plain integrals ----------------------------------------------------------

def integrate_G(G: GroupSpec, f: ScalarField, spec: IntegrationSpec) -> Estimate:
    """Integral of ``f`` over the group with Lebesgue (Haar) measure.

    Raises
    ------
    PreconditionError
        If ``f.decay <= Q`` (no absolute convergence).
    """
    if not f.decay > G.Q:
        raise PreconditionError(f"integrate_G needs decay > Q = {G.Q}, field {f.name} has {f.decay}")
    if spec.method == "monte-carlo":
        return _integrate_mc(G, f, spec)
    if spec.method == "polar-grid":
        return _integrate_polar(G, f, spec)
    return _integrate_tensor(G, f, spec)


def _integrate_mc(G, f, spec):
    n, m = G.n, G.m
    b = spec.outer_exponent or _finite_decay(f, 2 * G.Q) / 4

    def draw(rng, k):
        z, w = sample_bubble(n, m, b, rng, k)
        lp = log_bubble_density(n, m, b, z, w)
        v = f.eval(z, w)
        if spec.antithetic:
            v = 0.5 * (v + f.eval(-z, w))
        return v * np.exp(-lp)

    return _from_mc(_mc.run(draw, spec.nodes, spec.seed), spec, outer_exponent=b)


def _tail_bound(G, f, R):
    """Bound on ``int_{|xi| > R} |f|`` from the decay exponent."""
    if math.isinf(f.decay):
        return 0.0
    rng = np.random.default_rng(12345)
    sz, sw = sample_sphere(G.n, G.m, rng, 512)
    vals = np.abs(f.eval(sz * R, sw * R * R))
    C = float(vals.max()) * R ** f.decay
    return C * math.exp(log_sphere_area(G.n, G.m)) * R ** (G.Q - f.decay) / (f.decay - G.Q)


def _sphere_rule(n, m, k):
    """Nodes (|z*|, |w*|) and weights for cylindrical integrands on the unit sphere.

    Uses ``|w*| = sin(phi)``; the measure becomes
    ``|S^{2n-1}| |S^{m-1}| 4^n cos^{n-1}(phi) sin^{m-1}(phi) d phi``.
    """
    x, wt = np.polynomial.legendre.leggauss(k)
    phi = (x + 1) * math.pi / 4
    wt = wt * math.pi / 4
    area = (2 * math.pi**n / math.gamma(n)) * (2 * math.pi ** (m / 2) / math.gamma(m / 2)) * 4**n
    wts = area * np.cos(phi) ** (n - 1) * np.sin(phi) ** (m - 1) * wt
    if m == 1:
        wts = wts / 2 * 2  # |S^0| = 2 counts w* = +-sin(phi)
    return 2 * np.sqrt(np.cos(phi)), np.sin(phi), wts


def _polar_cyl(G, f, R, nr, na):
    n, m = G.n, G.m
    rmin = 1e-6
    xs = np.linspace(math.log(rmin), math.log(R), nr)
    hx = xs[1] - xs[0]
    rad = np.exp(xs)
    wr = np.full(nr, hx)
    wr[[0, -1]] *= 0.5
    zr, wrr, ws = _sphere_rule(n, m, na)
    rho = rad[:, None]
    z = np.zeros((nr * na, 2 * n))
    w = np.zeros((nr * na, m))
    z[:, 0] = (rho * zr[None, :]).ravel()
    w[:, 0] = (rho**2 * wrr[None, :]).ravel()
    vals = f.eval(z, w).reshape(nr, na)
    return float(np.sum(wr[:, None] * rad[:, None] ** G.Q * ws[None, :] * vals))


def _integrate_polar(G, f, spec):
    if f.symmetry != CYLINDRICAL:
        raise PreconditionError("polar-grid integrate_G needs a cylindrical field")
    R = spec.truncation_radius
    nr, na = spec.nodes, max(8, spec.nodes // 4)
    full = _polar_cyl(G, f, R, nr, na)
    half = _polar_cyl(G, f, R, (nr + 1) // 2, max(4, na // 2))
    tail = _tail_bound(G, f, R)
    if tail > spec.target_rel_tol * abs(full) and tail > 0:
        raise ConvergenceError(f"tail beyond R = {R} is {tail:.3g}, above tolerance")
    return Estimate(full, abs(full - half) + tail, spec, tail=tail)


def _tensor_cyl(G, f, R, k):
    n, m = G.n, G.m
    x, wt = np.polynomial.legendre.leggauss(k)
    u = (x + 1) / 2
    wt = wt / 2
    # r = R u^2 and t = R^2 u^2 cluster nodes near the axes
    r, dr = R * u**2, 2 * R * u * wt
    t, dt = R * R * u**2, 2 * R * R * u * wt
    z = np.zeros((k * k, 2 * n))
    w = np.zeros((k * k, m))
    z[:, 0] = np.repeat(r, k)
    w[:, 0] = np.tile(t, k)
    vals = f.eval(z, w).reshape(k, k)
    s_z = 2 * math.pi**n / math.gamma(n)
    s_w = 2 * math.pi ** (m / 2) / math.gamma(m / 2)
    return float(s_z * s_w * np.einsum("i,j,ij->", dr * r ** (2 * n - 1), dt * t ** (m - 1), vals))


def _tensor_cart(G, f, R, k):
    x, wt = np.polynomial.legendre.leggauss(k)
    # odd cubic map keeps nodes dense near the origin
    u, du = x**3, 3 * x**2 * wt
    axes = [(R * u, R * du)] * (2 * G.n) + [(R * R * u, R * R * du)] * G.m
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.ones(1)
    for a in axes:
        wts = np.multiply.outer(wts, a[1]).ravel()
    return float(np.sum(wts * f.eval(pts[:, : 2 * G.n], pts[:, 2 * G.n:])))


def _integrate_tensor(G, f, spec):
    R = spec.truncation_radius
    if f.symmetry == CYLINDRICAL:
        full = _tensor_cyl(G, f, R, spec.nodes)
        half = _tensor_cyl(G, f, R, max(4, spec.nodes // 2))
        tail = _tail_bound(G, f, R / 2)
    elif G.dim <= 3:
        full = _tensor_cart(G, f, R, spec.nodes)
        half = _tensor_cart(G, f, R, max(4, spec.nodes // 2))
        tail = _tail_bound(G, f, R / 2)
    else:
        raise PreconditionError("tensor-grid needs a cylindrical field or 2n+m <= 3")
    if tail > spec.target_rel_tol * abs(full) and tail > 0:
        raise ConvergenceError(f"tail beyond the box is {tail:.3g}, above tolerance")
    return Estimate(full, abs(full - half) + tail, spec, tail=tail)


# singular double integrals ------------------------------------------------

def _pair_mc(G, F, kernel_power, a1, b1, b, spec, weight=None):
    """Monte Carlo estimate of ``int int F(xi, eta) |zeta|^{-kernel_power}``.

    ``F`` must be symmetric in ``(xi, eta)``; it may return several
    columns, which share the samples.  ``weight(xi_z, xi_w, eta_z,
    eta_w)`` optionally multiplies the integrand (also symmetric).
    """
    n, m = G.n, G.m

    def draw(rng, k):
        ez, ew = sample_bubble(n, m, b, rng, k)
        r0 = 1.0 + 0.5 * hnorm(ez, ew)
        zz, zw, rho, lq = polar_step(n, m, rng, k, a1, b1, r0)
        xz, xw = mul(G, ez, ew, zz, zw)
        lpe = log_bubble_density(n, m, b, ez, ew)
        lpx = log_bubble_density(n, m, b, xz, xw)
        Fv = F(xz, xw, ez, ew)
        if weight is not None:
            Fv = Fv * weight(xz, xw, ez, ew)
        # 2 / (p(xi) + p(eta)) computed relative to p(eta)
        bal = 2.0 * np.exp(-lpe) / (1.0 + np.exp(lpx - lpe))
        scale = rho ** (-kernel_power) * bal * np.exp(-lq)
        return Fv * (scale[:, None] if Fv.ndim == 2 else scale)

    return _mc.run(draw, spec.nodes, spec.seed)


def _dirichlet_exponent(G, f, g, s, spec):
    alpha = 0.5 * (_finite_decay(f, 4 * G.Q) + _finite_decay(g, 4 * G.Q))
    if not alpha > (G.Q - 2 * s) / 2:
        raise PreconditionError(
            f"Dirichlet form diverges: decay {alpha} must exceed (Q-2s)/2 = {(G.Q - 2 * s) / 2}")
    return spec.outer_exponent or min(G.Q + 2 * s, 2 * alpha + 2 * s) / 4


def dirichlet_pairing(G: GroupSpec, f: ScalarField, g: ScalarField, s: float,
                      spec: IntegrationSpec) -> Estimate:
    """``a_{n,m,s} int int (f(xi)-f(eta))(g(xi)-g(eta)) |eta^{-1} xi|^{-Q-2s}``."""
    if not 0 < s < 1:
        raise PreconditionError(f"dirichlet forms need 0 < s < 1, got {s}")
    b = _dirichlet_exponent(G, f, g, s, spec)
    a = groundstate_const(G.n, G.m, s)
    if spec.method == "polar-grid":
        return _dirichlet_polar(G, f, g, s, spec, b)
    if spec.method != "monte-carlo":
        raise PreconditionError("dirichlet forms support monte-carlo or polar-grid")

    def F(xz, xw, ez, ew):
        if f is g:
            d = f.eval(xz, xw) - f.eval(ez, ew)
            return d * d
        return (f.eval(xz, xw) - f.eval(ez, ew)) * (g.eval(xz, xw) - g.eval(ez, ew))

    res = _pair_mc(G, F, G.Q + 2 * s, 1 - s, s, b, spec)
    return _from_mc(res, spec, a, outer_exponent=b)


def dirichlet_form(G: GroupSpec, f: ScalarField, s: float, spec: IntegrationSpec) -> Estimate:
    """Ground-state representation of ``int f L_s f``."""
    return dirichlet_pairing(G, f, f, s, spec)


def _psi_rule(k):
    """Nodes on ``(0, pi)`` for the polar angle with ``psi = pi sin^2(pi u / 2)``."""
    x, wt = np.polynomial.legendre.leggauss(k)
    u = (x + 1) / 2
    psi = math.pi * np.sin(math.pi * u / 2) ** 2
    return psi, wt / 2 * (math.pi**2 / 2) * np.sin(math.pi * u)


def _log_rule(lo, hi, k):
    xs = np.linspace(math.log(lo), math.log(hi), k)
    wt = np.full(k, xs[1] - xs[0])
    wt[[0, -1]] *= 0.5
    return np.exp(xs), wt


def _dirichlet_grid_value(G, f, g, s, b, nr, nt, npsi):
    Q = G.Q
    rlo, rhi = 1e-3, 1e3
    orad, owt = _log_rule(rlo, 300.0, nr)
    irad, iwt = _log_rule(rlo, rhi, nr)
    opsi, opw = _psi_rule(npsi)
    ipsi, ipw = _psi_rule(npsi)
    th = np.arange(nt) * 2 * math.pi / nt
    thw = np.full(nt, 2 * math.pi / nt)
    # inner unit-sphere points and weights (d sigma = 4 d theta d psi)
    TH, PS = np.meshgrid(th, ipsi, indexing="ij")
    WS = 4 * np.outer(thw, ipw).ravel()
    sz = np.column_stack([2 * np.sqrt(np.sin(PS)).ravel() * np.cos(TH).ravel(),
                          2 * np.sqrt(np.sin(PS)).ravel() * np.sin(TH).ravel()])
    sw = np.cos(PS).ravel()[:, None]
    zz = (irad[:, None, None] * sz[None]).reshape(-1, 2)
    zw = (irad[:, None, None] ** 2 * sw[None]).reshape(-1, 1)
    kern = (iwt[:, None] * irad[:, None] ** (-2 * s) * WS[None, :]).ravel()
    lead = None
    total = 0.0
    head = 0.0
    tailc = 0.0
    for r, rw in zip(orad, owt):
        for ps, pw in zip(opsi, opw):
            ez = np.array([[2 * r * math.sqrt(math.sin(ps)), 0.0]])
            ew = np.array([[r * r * math.cos(ps)]])
            xz, xw = mul(G, ez, ew, zz, zw)
            fe, ge = f.eval(ez, ew)[0], g.eval(ez, ew)[0]
            Fv = (f.eval(xz, xw) - fe) * (g.eval(xz, xw) - ge)
            lpe = log_bubble_density(G.n, G.m, b, ez, ew)[0]
            lpx = log_bubble_density(G.n, G.m, b, xz, xw)
            bal = 2.0 / (1.0 + np.exp(lpx - lpe))
            vals = Fv * bal * kern
            outer = 2 * math.pi * 4 * r**Q * rw * pw
            total += outer * vals.sum()
            # smallest-radius shell: integrand ~ rho^{2-2s} below the grid
            lead = vals.reshape(len(irad), -1)[0].sum() / iwt[0]
            head += outer * lead / (2 - 2 * s)
            # beyond rhi only the 2 f(eta) g(eta) part survives
            tailc += outer * 2 * fe * ge * math.exp(log_sphere_area(1, 1)) * rhi ** (-2 * s) / (2 * s)
    return total + head + tailc


def _dirichlet_polar(G, f, g, s, spec, b):
    if not (G.n == 1 and G.m == 1 and f.symmetry == CYLINDRICAL and g.symmetry == CYLINDRICAL):
        raise PreconditionError("polar-grid Dirichlet forms need n = m = 1 and cylindrical fields")
    a = groundstate_const(G.n, G.m, s)
    nr = spec.nodes
    nt, npsi = max(8, (nr * 4) // 7), max(6, (nr * 3) // 7)
    full = a * _dirichlet_grid_value(G, f, g, s, b, nr, nt, npsi)
    half = a * _dirichlet_grid_value(G, f, g, s, b, (nr + 1) // 2, max(4, nt // 2), max(4, npsi // 2))
    return Estimate(full, abs(full - half), spec, extra=dict(outer_exponent=b))


def riesz_potential(G: GroupSpec, f: ScalarField, s: float, at: GroupPoint,
                    spec: IntegrationSpec) -> Estimate:
    """``c_{n,m,s} int f(eta) |at^{-1} o eta|^{-(Q-2s)} d eta``.

    Points are drawn half from a polar law centred at ``at`` (matching the
    weak singularity ``rho^{2s-1}``) and half from a bubble density centred
    at the origin; each is weighted by the equal-weight mixture density.
    """
    n, m, Q = G.n, G.m, G.Q
    if not 0 < s < n + 1:
        raise PreconditionError(f"riesz_potential needs 0 < s < n+1, got {s}")
    if not f.decay > 2 * s:
        raise PreconditionError(f"Riesz integral diverges: decay {f.decay} must exceed 2s = {2 * s}")
    if spec.method != "monte-carlo":
        raise PreconditionError("riesz_potential is Monte Carlo only")
    alpha = _finite_decay(f, 2 * Q)
    b = spec.outer_exponent or max(alpha, Q + 0.5) / 4
    a1, b1 = s, min(0.5, (alpha - 2 * s) / 2)
    az, aw = at.rows()
    r0 = 1.0 + 0.5 * float(hnorm(az, aw)[0])

    def value(ez, ew, lq1):
        lq2 = log_bubble_density(n, m, b, ez, ew)
        dz, dw = mul(G, -az, -aw, ez, ew)
        rho = hnorm(dz, dw)
        if lq1 is None:
            lq1 = log_polar_density(n, m, dz, dw, a1, b1, r0)
        mix = 0.5 * np.exp(lq1) + 0.5 * np.exp(lq2)
        return f.eval(ez, ew) * rho ** (2 * s - Q) / mix

    def draw(rng, k):
        zz, zw, _, lq1 = polar_step(n, m, rng, k, a1, b1, r0)
        e1 = mul(G, az, aw, zz, zw)
        e2 = sample_bubble(n, m, b, rng, k)
        return 0.5 * (value(*e1, lq1) + value(*e2, None))

    c = green_const(n, m, s)
    return _from_mc(_mc.run(draw, spec.nodes, spec.seed), spec, c)


# special functions ---------------------------------------------------------

def l_func(a: float, b: float, c: float) -> float:
    """``L(a, b, c) = int_0^inf exp(-a(2x+1)) x^{b-1} (1+x)^{-c} dx``.

    Integrated in ``y = log x`` and split at the mode of the integrand.
    """
    a, b, c = float(a), float(b), float(c)
    if a < 0 or b <= 0 or (a == 0 and not c - b > 0):
        raise PreconditionError(f"L({a}, {b}, {c}) diverges: need a > 0 and b > 0, or a = 0 and c > b > 0")

    def g(y):
        return -2 * a * math.exp(y) + b * y - c * math.log1p(math.exp(y)) if y < 700 else -math.inf

    # g is concave when c >= 0; otherwise the bracketed search still finds a mode
    with np.errstate(invalid="ignore", over="ignore"):
        res = _opt.minimize_scalar(lambda y: -g(y), bracket=(-5.0, 5.0), method="brent")
    y0 = float(res.x)
    g0 = g(y0)

    def integrand(y):
        return math.exp(g(y) - g0)

    kw = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    left = _quad.quad(integrand, -np.inf, y0, **kw)[0]
    right = _quad.quad(integrand, y0, np.inf, **kw)[0]
    lv = g0 - a + math.log(left + right)
    return math.exp(lv) if lv < 709.0 else math.inf


def fourier_coeff(n: int, m: int, s: float, k: int, rho: float, lam_abs: float) -> float:
    """Scalar coefficient ``c_{k,rho}^lambda(s)`` of ``phi_{s,rho}``.

    Accepts ``0 < |s| < n+1``; negative ``s`` gives the coefficients of
    ``phi_{-|s|,rho}`` used in the Green's function computation.
    """
    if not (0 < abs(s) < n + 1):
        raise PreconditionError(f"fourier_coeff needs 0 < |s| < n+1, got {s}")
    if k < 0 or int(k) != k or not rho > 0 or not lam_abs > 0:
        raise PreconditionError("need integer k >= 0, rho > 0, |lambda| > 0")
    lg = ((n + 1) * math.log(2) + (n + (m + 1) / 2) * math.log(math.pi) + s * math.log(lam_abs)
          - gammaln((n + 1 + s) / 2) - gammaln((n + m + s) / 2))
    return math.exp(lg) * l_func(rho * lam_abs, (2 * k + n + 1 + s) / 2, (2 * k + n + 1 - s) / 2)
