"""The sharp inequalities as computable functionals.

Each quotient returns a :class:`QuotientReport` whose ``deficit`` is
nonnegative exactly when the inequality holds; equality cases have
deficit zero within ``error``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _mc
from ._sampling import log_bubble_density, sample_bubble
from .constants import (groundstate_const, hardy_const, hls_const, logsobolev_const, poisson_norm, sharp_sobolev,
                        sphere_volume, trace_factor, trace_prefactor)
from .errors import PreconditionError
from .extremals import CYLINDRICAL, NONE, ScalarField, cayley_jacobian, phi
from .group import GroupPoint, GroupSpec, hnorm, mul
from .integrate import (Estimate, IntegrationSpec, _dirichlet_exponent, _pair_mc, dirichlet_form,
                        integrate_G)
from . import kernels


def subseed(seed: int, tag: int) -> int:
    """Independent stream derived from ``(seed, tag)``."""
    ss = np.random.SeedSequence([int(seed) & ((1 << 64) - 1), int(tag)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class QuotientReport:
    """A quotient compared with its sharp constant.

    ``deficit`` is ``value - sharp_constant`` for lower bounds and
    ``sharp_constant - value`` for upper bounds (``kind="upper"``).
    """

    value: float
    error: float
    sharp_constant: float
    inputs: str
    kind: str = "lower"
    parts: dict = field(default_factory=dict)

    @property
    def deficit(self) -> float:
        d = self.value - self.sharp_constant
        return -d if self.kind == "upper" else d

    @property
    def rel_deficit(self) -> float:
        return self.deficit / self.sharp_constant

    def violated(self, k: float = 2.0) -> bool:
        """True if the inequality fails by more than ``k`` error bars."""
        return self.deficit < -k * self.error

    def to_dict(self) -> dict:
        return {"value": self.value, "error": self.error, "sharp_constant": self.sharp_constant,
                "deficit": self.deficit, "kind": self.kind, "inputs": self.inputs}


def _ratio(num: Estimate, den: Estimate, power: float = 1.0):
    """``num / den^power`` with first-order error propagation (independent parts)."""
    v = num.value / den.value**power
    rel = math.hypot(num.error / abs(num.value) if num.value else 0.0,
                     power * den.error / abs(den.value))
    return v, abs(v) * rel


def _power_field(f: ScalarField, p: float, weight: Optional[ScalarField] = None) -> ScalarField:
    if weight is None:
        return ScalarField(lambda z, w: np.abs(f.eval(z, w)) ** p, f.symmetry, p * f.decay,
                           f"|{f.name}|^{p:g}")
    sym = CYLINDRICAL if f.symmetry == weight.symmetry == CYLINDRICAL else NONE
    return ScalarField(lambda z, w: np.abs(f.eval(z, w)) ** p * weight.eval(z, w), sym,
                       p * f.decay + weight.decay, f"|{f.name}|^{p:g}*{weight.name}")


def _aux_spec(spec: IntegrationSpec, f: ScalarField, tag: int) -> IntegrationSpec:
    """Spec for a single integral attached to a pair integral."""
    if spec.method == "polar-grid" and f.symmetry != CYLINDRICAL:
        spec = IntegrationSpec("monte-carlo", 200_000, seed=spec.seed)
    if spec.method == "polar-grid":
        return IntegrationSpec("polar-grid", max(200, spec.nodes), truncation_radius=60.0,
                               target_rel_tol=spec.target_rel_tol)
    return IntegrationSpec(spec.method, spec.nodes, spec.truncation_radius,
                           subseed(spec.seed, tag), spec.target_rel_tol, None, spec.antithetic)


def critical_norm_power(G, f, s, spec, tag=1) -> Estimate:
    """``int |f|^{2Q/(Q-2s)}``."""
    p = 2 * G.Q / (G.Q - 2 * s)
    return integrate_G(G, _power_field(f, p), _aux_spec(spec, f, tag))


def sobolev_quotient(G: GroupSpec, f: ScalarField, s: float, spec: IntegrationSpec) -> QuotientReport:
    """``int f L_s f / ||f||_{2Q/(Q-2s)}^2`` against ``S_{n,m,s}``."""
    D = dirichlet_form(G, f, s, spec)
    L = critical_norm_power(G, f, s, spec)
    p = 2 * G.Q / (G.Q - 2 * s)
    v, e = _ratio(D, L, 2 / p)
    return QuotientReport(v, e, sharp_sobolev(G.n, G.m, s), f"sobolev f={f.name} s={s:g}",
                          parts={"dirichlet": D, "norm": L})


def hardy_weight(G: GroupSpec, s: float) -> ScalarField:
    """``((1 + |z|^2/4)^2 + |w|^2)^{-s}``."""
    return ScalarField(lambda z, w: np.exp(-s * kernels.log_bubble(z, w, 1.0)), CYLINDRICAL,
                       4 * s, "hardy_weight")


def hardy_quotient(G: GroupSpec, f: ScalarField, s: float, spec: IntegrationSpec) -> QuotientReport:
    """``int f L_s f / int f^2 B^{-s}`` against ``N_{n,m,s}``."""
    D = dirichlet_form(G, f, s, spec)
    L = integrate_G(G, _power_field(f, 2.0, hardy_weight(G, s)), _aux_spec(spec, f, 2))
    v, e = _ratio(D, L)
    return QuotientReport(v, e, hardy_const(G.n, G.m, s), f"hardy f={f.name} s={s:g}",
                          parts={"dirichlet": D, "weighted_l2": L})


def hardy_remainder(G: GroupSpec, f: ScalarField, s: float, spec: IntegrationSpec,
                    rho: float = 1.0) -> dict:
    """Both sides of the ground-state remainder identity.

    ``lhs = int f L_s f - N rho^s int f^2 ((rho + |z|^2/4)^2 + |w|^2)^{-s}``
    and ``rhs = a int int |g(xi) - g(eta)|^2 phi(xi) phi(eta) |eta^{-1} xi|^{-Q-2s}``
    with ``phi = phi_{-s,rho}`` and ``g = f / phi``.

    ``residual`` is ``lhs - rhs`` computed with ``phi`` as a control
    variate: the pair term of ``phi`` itself and ``N rho^s int phi^2 B^{-s}``
    (equal by the eigen-relation of ``phi``) are subtracted sample by
    sample, so only the difference ``f - phi`` contributes noise.
    """
    if not 0 < s < 1:
        raise PreconditionError(f"hardy_remainder needs 0 < s < 1, got {s}")
    if spec.method != "monte-carlo":
        raise PreconditionError("hardy_remainder is Monte Carlo only")
    ph = phi(G, -s, rho)
    b = _dirichlet_exponent(G, f, f, s, spec)

    def F(xz, xw, ez, ew):
        fx, fe = f.eval(xz, xw), f.eval(ez, ew)
        px, pe = ph.eval(xz, xw), ph.eval(ez, ew)
        d0 = (fx - fe) ** 2
        d1 = (fx / px - fe / pe) ** 2 * px * pe
        return np.column_stack([d0, d1, d0 - d1 - (px - pe) ** 2])

    def weight(z, w):
        return np.exp(-s * kernels.log_bubble(z, w, rho))

    a = groundstate_const(G.n, G.m, s)
    coef = hardy_const(G.n, G.m, s) * rho**s
    res = _pair_mc(G, F, G.Q + 2 * s, 1 - s, s, b, spec)
    aux = _aux_spec(spec, f, 2)
    L = integrate_G(G, ScalarField(lambda z, w: f.eval(z, w) ** 2 * weight(z, w), NONE,
                                   2 * min(f.decay, G.Q) + 4 * s, "f^2 B^-s"), aux)
    Ld = integrate_G(G, ScalarField(lambda z, w: (f.eval(z, w) ** 2 - ph.eval(z, w) ** 2) * weight(z, w),
                                    NONE, 2 * min(f.decay, G.Q) + 4 * s, "(f^2-phi^2) B^-s"), aux)
    D, E = a * res.mean, a * res.stderr
    lhs = Estimate(D[0] - coef * L.value, math.hypot(E[0], coef * L.error), spec)
    rhs = Estimate(D[1], E[1], spec)
    resid = Estimate(D[2] - coef * Ld.value, math.hypot(E[2], coef * Ld.error), spec)
    return {"lhs": lhs, "rhs": rhs, "residual": resid}


def hls_integral(G: GroupSpec, f: ScalarField, g: ScalarField, s: float,
                 spec: IntegrationSpec) -> Estimate:
    """``int int f(xi) g(eta) |eta^{-1} o xi|^{-(Q-2s)}``."""
    if spec.method != "monte-carlo":
        raise PreconditionError("hls_value is Monte Carlo only")
    Q = G.Q
    alpha = 0.5 * (min(f.decay, 2 * Q) + min(g.decay, 2 * Q))
    if not alpha > 2 * s:
        raise PreconditionError(f"HLS integral diverges for decay {alpha}")
    b = spec.outer_exponent or max(min(alpha + Q - 2 * s, 2 * Q), Q + 1) / 4
    b1 = min(0.5, (alpha - 2 * s) / 2)

    def F(xz, xw, ez, ew):
        if f is g:
            return f.eval(xz, xw) * f.eval(ez, ew)
        return 0.5 * (f.eval(xz, xw) * g.eval(ez, ew) + f.eval(ez, ew) * g.eval(xz, xw))

    res = _pair_mc(G, F, Q - 2 * s, s, b1, b, spec)
    return Estimate(float(res.mean[0]), float(res.stderr[0]), spec, extra={"outer_exponent": b})


def hls_value(G: GroupSpec, f: ScalarField, g: ScalarField, s: float,
              spec: IntegrationSpec) -> QuotientReport:
    """Normalised HLS form against ``1 / (S c)``; this is an upper bound."""
    I = hls_integral(G, f, g, s, spec)
    p = 2 * G.Q / (G.Q + 2 * s)
    nf = integrate_G(G, _power_field(f, p), _aux_spec(spec, f, 3))
    ng = nf if g is f else integrate_G(G, _power_field(g, p), _aux_spec(spec, g, 4))
    den = nf.value ** (1 / p) * ng.value ** (1 / p)
    v = I.value / den
    rel = math.sqrt((I.error / I.value) ** 2 + (nf.error / nf.value / p) ** 2
                    + (ng.error / ng.value / p) ** 2)
    return QuotientReport(v, abs(v) * rel, hls_const(G.n, G.m, s),
                          f"hls f={f.name} g={g.name} s={s:g}", kind="upper",
                          parts={"integral": I, "norm_f": nf, "norm_g": ng})


def logsob_pair(G: GroupSpec, f: ScalarField, spec: IntegrationSpec):
    """Both sides of the sharp log-Sobolev inequality.

    ``f`` is rescaled so that ``int f^2 J = sphere_volume``; the factor is
    reported in ``lhs.extra["normalisation"]``.

    Returns
    -------
    lhs, rhs : Estimate
    """
    J = cayley_jacobian(G)
    V = sphere_volume(G.n, G.m)
    fJ = _power_field(f, 2.0, J)
    fJ = ScalarField(fJ.eval, fJ.symmetry, 2 * G.Q, fJ.name)
    mspec = IntegrationSpec("monte-carlo", max(spec.nodes, 1000), seed=subseed(spec.seed, 5),
                            antithetic=spec.antithetic)
    M = integrate_G(G, fJ, mspec)
    if not (np.isfinite(M.value) and M.value > 0):
        raise PreconditionError("log-Sobolev input must be nonzero")
    kappa = math.sqrt(V / M.value)

    def fk(z, w):
        v = f.eval(z, w)
        if np.any(v < 0):
            raise PreconditionError("log-Sobolev input must be nonnegative")
        return kappa * v

    def ent(z, w):
        v = fk(z, w) ** 2
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = v[pos] * np.log(v[pos])
        return out * J.eval(z, w)

    rhs_i = integrate_G(G, ScalarField(ent, NONE, 2 * G.Q, "f^2 ln f^2 J"), mspec.with_seed(subseed(spec.seed, 6)))
    K = logsobolev_const(G.n, G.m)
    rhs = Estimate(K * rhs_i.value, K * rhs_i.error, rhs_i.spec_used)

    def F(xz, xw, ez, ew):
        d = fk(xz, xw) - fk(ez, ew)
        return d * d

    def wgt(xz, xw, ez, ew):
        return np.sqrt(J.eval(xz, xw) * J.eval(ez, ew))

    b = spec.outer_exponent or (G.Q + 1) / 4
    res = _pair_mc(G, F, G.Q, 1.0, 0.5, b, spec, weight=wgt)
    lhs = Estimate(float(res.mean[0]), float(res.stderr[0]), spec,
                   extra={"normalisation": kappa, "outer_exponent": b})
    return lhs, rhs


# Poisson extension ----------------------------------------------------------

def _kernel_and_derivs(G, zg, wg, rho, s):
    """Poisson kernel ``C_1 rho^{2s} phi_{s, rho^2/4}`` at ``g`` and its
    derivatives ``(d/drho, rho/2 grad_w, X_1..X_2n)``."""
    gam = (G.Q + 2 * s) / 4
    a = rho * rho / 4 + 0.25 * np.einsum("ni,ni->n", zg, zg)
    B = a * a + np.einsum("ni,ni->n", wg, wg)
    K = poisson_norm(G.n, G.m, s) * rho ** (2 * s) * B ** (-gam)
    dr = K * (2 * s / rho - gam * rho * a / B)
    dw = (-2 * gam * K / B)[:, None] * wg
    dz = (-gam * K * a / B)[:, None] * zg
    uz = np.einsum("kji,nj->nki", G.mats, zg)  # (U^(k)^T z)_i
    X = dz + 0.5 * np.einsum("nki,nk->ni", uz, dw)
    return K, np.column_stack([dr, 0.5 * rho * dw, X])


@dataclass(frozen=True, eq=False)
class ExtensionField:
    """A function of ``(xi, rho)`` on the upper half space over the group.

    ``eval`` returns the Monte Carlo value at one point; ``boundary`` is
    the trace at ``rho = 0``.  ``extra`` is an optional analytic addend
    ``(z, w, rho) -> (values, gradient)`` whose gradient has columns
    ``(d/drho, rho/2 grad_w, X_1..X_2n)``.
    """

    G: GroupSpec
    boundary: ScalarField
    s: float
    extra: Optional[Callable] = None

    # -- sampling of eta' from the kernel and from a fixed bubble -------------
    def _mixture(self, zx, wx, rho, rng, k):
        """Two draws per row of ``xi``: one from the kernel, one from a bubble."""
        G, s = self.G, self.s
        n, m = G.n, G.m
        N = zx.shape[0]
        b = self._bubble_power()
        gz, gw = sample_bubble(n, m, (G.Q + 2 * s) / 4, rng, N * k)
        gz, gw = gz * (rho / 2), gw * (rho * rho / 4)
        zxr, wxr = np.repeat(zx, k, 0), np.repeat(wx, k, 0)
        e1 = mul(G, zxr, wxr, -gz, -gw)
        e2 = sample_bubble(n, m, b, rng, N * k)
        ez = np.concatenate([e1[0], e2[0]])
        ew = np.concatenate([e1[1], e2[1]])
        xz2, xw2 = np.concatenate([zxr, zxr]), np.concatenate([wxr, wxr])
        gz2, gw2 = mul(G, -ez, -ew, xz2, xw2)
        K, D = _kernel_and_derivs(G, gz2, gw2, rho, s)
        qmix = 0.5 * K + 0.5 * np.exp(log_bubble_density(n, m, b, ez, ew))
        return ez, ew, K, D, qmix

    def _bubble_power(self):
        return (self.G.Q + 2 * self.s) / 4

    def value(self, p: GroupPoint, rho: float, samples: int = 100_000, seed: int = 0) -> Estimate:
        """Monte Carlo value of the Poisson integral at ``(p, rho)``."""
        if not rho > 0:
            raise PreconditionError("rho must be positive")
        zx, wx = p.rows()
        f = self.boundary

        def draw(rng, k):
            ez, ew, K, _, q = self._mixture(zx, wx, rho, rng, k)
            v = f.eval(ez, ew) * K / q
            return 0.5 * (v[:k] + v[k:])

        spec = IntegrationSpec("monte-carlo", samples, seed=seed)
        res = _mc.run(draw, samples, seed)
        est = Estimate(float(res.mean[0]), float(res.stderr[0]), spec)
        if self.extra is not None:
            ev = float(self.extra(zx, wx, rho)[0][0])
            est = Estimate(est.value + ev, est.error, spec)
        return est

    def eval(self, p: GroupPoint, rho: float) -> float:
        return self.value(p, rho).value

    def gradient_halves(self, zx, wx, rho, rng, k):
        """Two independent unbiased estimates of the scaled gradient at each row."""
        f = self.boundary
        N = zx.shape[0]
        ez, ew, _, D, q = self._mixture(zx, wx, rho, rng, k)
        fx = np.repeat(f.eval(zx, wx), k)
        fx = np.concatenate([fx, fx])
        val = ((f.eval(ez, ew) - fx) / q)[:, None] * D
        val = val.reshape(2, N, k, -1)
        pair = 0.5 * (val[0] + val[1])
        h = k // 2
        A, B = pair[:, :h].mean(1), pair[:, h:2 * h].mean(1)
        if self.extra is not None:
            g = self.extra(zx, wx, rho)[1]
            A, B = A + g, B + g
        return A, B

    def neumann(self, p: GroupPoint, rho: float, samples: int = 400_000, seed: int = 0) -> Estimate:
        """``-rho^{1-2s} d u / d rho`` at ``p``, extrapolated from ``rho`` and ``2 rho``."""
        s = self.s
        zx, wx = p.rows()
        f = self.boundary
        r2 = 2 * rho
        w1 = 2 ** (2 - 2 * s)

        def at(r, rng, k):
            ez, ew, _, D, q = self._mixture(zx, wx, r, rng, k)
            v = (f.eval(ez, ew) - f.eval(zx, wx)[0]) / q * D[:, 0]
            return -r ** (1 - 2 * s) * 0.5 * (v[:k] + v[k:])

        def draw(rng, k):
            return (w1 * at(rho, rng, k) - at(r2, rng, k)) / (w1 - 1)

        res = _mc.run(draw, samples, seed)
        return Estimate(float(res.mean[0]), float(res.stderr[0]),
                        IntegrationSpec("monte-carlo", samples, seed=seed))


def poisson_extension(G: GroupSpec, f: ScalarField, s: float) -> ExtensionField:
    """``P(f)(xi, rho) = C_1 rho^{2s} (f * phi_{s, rho^2/4})(xi)``."""
    if not 0 < s < 1:
        raise PreconditionError(f"poisson_extension needs 0 < s < 1, got {s}")
    return ExtensionField(G, f, s)


def trace_energy(G: GroupSpec, u: ExtensionField, s: float, spec: IntegrationSpec,
                 rho_min: float = 1e-4, rho_max: float = 300.0, step: float = 0.35,
                 inner: int = 256) -> Estimate:
    """``int_0^inf int_G (|u_rho|^2 + rho^2/4 |grad_w u|^2 + |grad_G u|^2) rho^{1-2s}``.

    The height integral is a trapezoid rule in ``log rho``; below
    ``rho_min`` the integrand behaves like ``rho^{2s}`` per unit of
    ``log rho`` and that remainder is added in closed form.  At each height
    the squared gradient is the product of two independent half-sample
    estimates, which is unbiased.  ``spec.nodes`` is the number of outer
    points per height.
    """
    if not 0 < s < 1:
        raise PreconditionError(f"trace_energy needs 0 < s < 1, got {s}")
    if spec.method != "monte-carlo":
        raise PreconditionError("trace_energy is Monte Carlo only")
    if not u.boundary.decay > (G.Q - 2 * s) / 2:
        raise PreconditionError("boundary field decays too slowly for a finite energy")
    n, m, Q = G.n, G.m, G.Q
    b = (Q + 2 * s) / 4
    xs = np.arange(math.log(rho_min), math.log(rho_max) + 1e-12, step)
    Nx = max(64, spec.nodes // len(xs))
    total = var = 0.0
    head = head_var = 0.0
    per_height = []
    root = np.random.SeedSequence(spec.seed)
    children = root.spawn(len(xs))
    for i, x in enumerate(xs):
        rho = math.exp(x)
        lam = math.sqrt(1 + rho * rho / 4)
        node_seed = int(children[i].generate_state(1, np.uint64)[0])

        def draw(rng, k, rho=rho, lam=lam):
            zx, wx = sample_bubble(n, m, b, rng, k, lam)
            lp = log_bubble_density(n, m, b, zx, wx, lam)
            A, B = u.gradient_halves(zx, wx, rho, rng, inner)
            return np.einsum("ni,ni->n", A, B) * np.exp(-lp)

        res = _mc.run(draw, Nx, node_seed, batch=256)
        g, ge = float(res.mean[0]), float(res.stderr[0])
        wgt = (step / 2 if i in (0, len(xs) - 1) else step) * rho ** (2 - 2 * s)
        total += wgt * g
        var += (wgt * ge) ** 2
        per_height.append((rho, g * rho ** (2 - 2 * s), ge * rho ** (2 - 2 * s)))
        if i == 0:
            head = g * rho ** (2 - 2 * s) / (2 * s)
            head_var = (ge * rho ** (2 - 2 * s) / (2 * s)) ** 2
    return Estimate(total + head, math.sqrt(var + head_var), spec, tail=head,
                    extra={"per_height": per_height})


def trace_quotient(G: GroupSpec, u: ExtensionField, s: float, spec: IntegrationSpec) -> QuotientReport:
    """Trace energy over ``||u(., 0)||_{2Q/(Q-2s)}^2`` against the sharp trace constant."""
    E = trace_energy(G, u, s, spec)
    L = critical_norm_power(G, u.boundary, s, IntegrationSpec("monte-carlo", 200_000, seed=subseed(spec.seed, 7)))
    p = 2 * G.Q / (G.Q - 2 * s)
    v, e = _ratio(E, L, 2 / p)
    return QuotientReport(v, e, trace_factor(G.n, G.m, s), f"trace f={u.boundary.name} s={s:g}",
                          parts={"energy": E, "norm": L})


def compact_bump_extension(G: GroupSpec, amp: float, centre_rho: float = 1.0, width: float = 0.5,
                           radius: float = 1.0) -> Callable:
    """Analytic addend ``amp chi(log rho) psi(|xi| / radius)`` vanishing near ``rho = 0``.

    ``chi`` is a smooth bump of half width ``width`` around ``log centre_rho``;
    ``psi(r) = (1 - r^2)^3`` inside the unit ball of ``|z|^2/4 + |w|`` (a
    polynomial, so its derivatives are exact).
    """
    c = math.log(centre_rho)

    def chi(r):
        t = (math.log(r) - c) / width
        if abs(t) >= 1:
            return 0.0, 0.0
        e = math.exp(1 - 1 / (1 - t * t))
        return e, e * (-2 * t / (1 - t * t) ** 2) / (width * r)

    def addend(z, w, rho):
        zz = np.einsum("ni,ni->n", z, z)
        ww = np.sqrt(np.einsum("ni,ni->n", w, w) + 1e-300)
        r2 = (zz / 4 + ww) / radius**2
        inside = r2 < 1
        psi = np.where(inside, (1 - r2) ** 3, 0.0)
        dpsi = np.where(inside, -3 * (1 - r2) ** 2, 0.0) / radius**2  # d psi / d r2
        cv, dcv = chi(rho)
        val = amp * cv * psi
        dz = (amp * cv * dpsi / 2)[:, None] * z  # d r2/dz = z/2
        dw = (amp * cv * dpsi)[:, None] * (w / ww[:, None])
        uz = np.einsum("kji,nj->nki", G.mats, z)
        X = dz + 0.5 * np.einsum("nki,nk->ni", uz, dw)
        grad = np.column_stack([amp * dcv * psi, 0.5 * rho * dw, X])
        return val, grad

    return addend
