"""Backend selection for the batch kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used.  Setting ``HTYPE_PURE_PYTHON=1`` forces the fallback.
Both backends receive broadcast, C-contiguous float64 inputs.
"""

import os

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "python"
if os.environ.get("HTYPE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels


def _rows(*arrays):
    arrs = [np.asarray(a, dtype=float) for a in arrays]
    n = max(a.shape[0] for a in arrs)
    return [
        np.ascontiguousarray(np.broadcast_to(a, (n,) + a.shape[1:])) for a in arrs
    ]


def group_mul(z1, w1, z2, w2, mats, impl=None):
    """Batch group law with broadcasting over the leading axis."""
    z1, w1, z2, w2 = _rows(z1, w1, z2, w2)
    return (impl or _impl).group_mul(z1, w1, z2, w2, np.ascontiguousarray(mats, float))


def log_bubble(z, w, rho=1.0, impl=None):
    """``log((rho + |z|^2/4)^2 + |w|^2)`` row-wise."""
    z, w = _rows(z, w)
    rho = np.ascontiguousarray(np.broadcast_to(np.asarray(rho, float), (z.shape[0],)))
    return (impl or _impl).log_bubble(z, w, rho)


def hnorm(z, w, impl=None):
    """Homogeneous norm row-wise."""
    z, w = _rows(z, w)
    return (impl or _impl).hnorm(z, w)


def omega(z, w, mats, impl=None):
    """Conformal first variations row-wise, shape (N, 2n+m+1)."""
    z, w = _rows(z, w)
    return (impl or _impl).omega(z, w, np.ascontiguousarray(mats, float))
