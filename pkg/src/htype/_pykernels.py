"""Vectorised numpy implementations of the batch kernels.

Every function takes C-contiguous float64 arrays with a leading batch
axis of common length and returns freshly allocated arrays.
"""

import numpy as np


def group_mul(z1, w1, z2, w2, mats):
    """Batch group law ``(z1, w1) o (z2, w2)``."""
    z = z1 + z2
    # sum over i < j of U_ij (z1_i z2_j - z1_j z2_i): exactly zero when z2 = -z1
    iu, ju = np.triu_indices(z1.shape[1], 1)
    P = z1[:, iu] * z2[:, ju] - z1[:, ju] * z2[:, iu]
    w = w1 + w2 + 0.5 * P @ mats[:, iu, ju].T
    return z, w


def log_bubble(z, w, rho):
    """``log((rho + |z|^2/4)^2 + |w|^2)`` with ``rho`` of shape (N,)."""
    a = rho + 0.25 * np.einsum("ni,ni->n", z, z)
    return np.log(a * a + np.einsum("ni,ni->n", w, w))


def hnorm(z, w):
    """Homogeneous norm ``(|z|^4/16 + |w|^2)^(1/4)``."""
    zz = np.einsum("ni,ni->n", z, z)
    return (zz * zz / 16.0 + np.einsum("ni,ni->n", w, w)) ** 0.25


def omega(z, w, mats):
    """The ``2n+m+1`` conformal first variations at each point."""
    zz = np.einsum("ni,ni->n", z, z)
    ww = np.einsum("ni,ni->n", w, w)
    a = 1.0 + 0.25 * zz
    b = a * a + ww
    jz = np.einsum("nk,kij,nj->ni", w, mats, z, optimize=False)
    out = np.empty((z.shape[0], z.shape[1] + w.shape[1] + 1))
    nz = z.shape[1]
    out[:, :nz] = (a[:, None] * z + jz) / b[:, None]
    out[:, nz:-1] = 2.0 * w / b[:, None]
    out[:, -1] = (1.0 - zz * zz / 16.0 - ww) / b
    return out
