"""Exact samplers with closed-form densities used by the integrators.

* bubble densities ``p_b proportional to ((1 + |z|^2/4)^2 + |w|^2)^{-b}``;
* the uniform measure on the unit sphere ``{|xi| = 1}`` of the polar
  decomposition ``d xi = rho^{Q-1} d rho d sigma``;
* radial laws ``rho = r0 sqrt(t)`` with ``t`` beta-prime distributed.

On the unit sphere write ``z = 2 (1 - |t|^2)^{1/4} theta`` with ``theta``
in ``S^{2n-1}`` and ``w = t`` in the unit ball of ``R^m``.  Then
``d sigma = 4^n (1 - |t|^2)^{(n-2)/2} d theta dt``, so ``|t|^2`` is
Beta(m/2, n/2) under the normalised measure.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import betaln, gammaln

from . import kernels
from .constants import log_bubble_integral


def _directions(rng, k, d):
    v = rng.standard_normal((k, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v


def sample_bubble(n, m, b, rng, k, scale=1.0):
    """Draw ``k`` points from ``p_b`` pushed forward by ``delta_scale``."""
    x = rng.standard_gamma(n, k) / rng.standard_gamma(2 * b - m - n, k)
    z = _directions(rng, k, 2 * n) * (2 * np.sqrt(x))[:, None]
    y = rng.standard_gamma(m / 2, k) / rng.standard_gamma(b - m / 2, k)
    w = _directions(rng, k, m) * ((1 + x) * np.sqrt(y))[:, None]
    scale = np.asarray(scale, float)
    if scale.ndim:
        return z * scale[:, None], w * (scale**2)[:, None]
    return z * scale, w * scale**2


def log_bubble_density(n, m, b, z, w, scale=1.0):
    """Log density of :func:`sample_bubble` at the given rows."""
    scale = np.asarray(scale, float)
    Q = 2 * n + 2 * m
    if scale.ndim:
        zz, ww = z / scale[:, None], w / (scale**2)[:, None]
    else:
        zz, ww = z / scale, w / scale**2
    return -b * kernels.log_bubble(zz, ww, 1.0) - log_bubble_integral(n, m, b) - Q * np.log(scale)


def log_sphere_area(n, m):
    """``log |Sigma|`` for the unit sphere of the homogeneous norm."""
    return (2 * n * math.log(2) + math.log(2) + n * math.log(math.pi) - gammaln(n)
            + m / 2 * math.log(math.pi) + gammaln(n / 2) - gammaln((n + m) / 2))


def sample_sphere(n, m, rng, k):
    """Uniform samples on ``{|xi| = 1}`` (normalised polar measure)."""
    theta = _directions(rng, k, 2 * n)
    u = rng.beta(m / 2, n / 2, k)
    t = _directions(rng, k, m) * np.sqrt(u)[:, None]
    z = theta * (2 * (1 - u) ** 0.25)[:, None]
    return z, t


def sample_radius(rng, k, a1, b1, r0):
    """``rho = r0 sqrt(t)``, ``t ~ BetaPrime(a1, b1)``; returns (rho, log density)."""
    t = rng.standard_gamma(a1, k) / rng.standard_gamma(b1, k)
    rho = r0 * np.sqrt(t)
    return rho, log_radius_density(rho, a1, b1, r0)


def log_radius_density(rho, a1, b1, r0):
    t = (rho / r0) ** 2
    return (np.log(2 * rho / r0**2) + (a1 - 1) * np.log(t)
            - (a1 + b1) * np.log1p(t) - betaln(a1, b1))


def polar_step(n, m, rng, k, a1, b1, r0):
    """Random increment ``zeta = delta_rho sigma`` with its log density."""
    Q = 2 * n + 2 * m
    sz, sw = sample_sphere(n, m, rng, k)
    rho, lq = sample_radius(rng, k, a1, b1, r0)
    return sz * rho[:, None], sw * (rho**2)[:, None], rho, lq - log_sphere_area(n, m) - (Q - 1) * np.log(rho)


def log_polar_density(n, m, zeta_z, zeta_w, a1, b1, r0):
    """Log density of :func:`polar_step` at a given increment."""
    Q = 2 * n + 2 * m
    rho = kernels.hnorm(zeta_z, zeta_w)
    return log_radius_density(rho, a1, b1, r0) - log_sphere_area(n, m) - (Q - 1) * np.log(rho)
