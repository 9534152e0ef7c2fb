"""Group law, homogeneous geometry and finite-difference operators.

Points are ``(z, w)`` with ``z`` in ``R^{2n}`` and ``w`` in ``R^m``; the law is

    (z, w) o (z', w') = (z + z', w + w' + 1/2 <z, U^(k) z'>_k).

The batch helpers (``mul``, ``hnorm``) work on stacked arrays of shape
``(N, 2n)`` and ``(N, m)``; the scalar operations wrap them for
:class:`GroupPoint`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .clifford import GeneratorSet, build_generators, verify_generators
from .errors import PreconditionError


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """An H-type group determined by its generator system."""

    gens: GeneratorSet
    mats: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not verify_generators(self.gens).ok(1e-12):
            raise PreconditionError("generator set fails the H-type identities")
        mats = np.ascontiguousarray(self.gens.mats, dtype=float)
        mats.setflags(write=False)
        object.__setattr__(self, "mats", mats)

    @classmethod
    def build(cls, n: int, m: int) -> "GroupSpec":
        return cls(build_generators(n, m))

    @property
    def n(self) -> int:
        return self.gens.n

    @property
    def m(self) -> int:
        return self.gens.m

    @property
    def Q(self) -> int:
        """Homogeneous dimension ``2n + 2m``."""
        return 2 * self.n + 2 * self.m

    @property
    def dim(self) -> int:
        """Topological dimension ``2n + m``."""
        return 2 * self.n + self.m

    def identity(self) -> "GroupPoint":
        return GroupPoint(np.zeros(2 * self.n), np.zeros(self.m))

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "Q": self.Q, "mats": self.gens.mats.tolist()}

    def __repr__(self) -> str:
        return f"GroupSpec(n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class GroupPoint:
    """A single element ``(z, w)``."""

    z: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=float)).copy()
        w = np.atleast_1d(np.asarray(self.w, dtype=float)).copy()
        if z.ndim != 1 or w.ndim != 1:
            raise PreconditionError("GroupPoint holds one point; use arrays for batches")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
            raise PreconditionError("GroupPoint entries must be finite")
        z.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)

    def rows(self):
        """The point as a batch of one."""
        return self.z[None, :], self.w[None, :]

    def __repr__(self) -> str:
        return f"GroupPoint(z={self.z.tolist()}, w={self.w.tolist()})"


def _check(G: GroupSpec, *pts: GroupPoint) -> None:
    for p in pts:
        if p.z.shape != (2 * G.n,) or p.w.shape != (G.m,):
            raise PreconditionError(
                f"point dimensions ({p.z.size}, {p.w.size}) do not match "
                f"group (2n, m) = ({2 * G.n}, {G.m})"
            )


# batch helpers -----------------------------------------------------------

def mul(G: GroupSpec, z1, w1, z2, w2):
    """Batch product; inputs broadcast along the leading axis."""
    return kernels.group_mul(np.atleast_2d(z1), np.atleast_2d(w1),
                             np.atleast_2d(z2), np.atleast_2d(w2), G.mats)


def hnorm(z, w):
    """Batch homogeneous norm."""
    return kernels.hnorm(np.atleast_2d(z), np.atleast_2d(w))


# point operations --------------------------------------------------------

def multiply(G: GroupSpec, a: GroupPoint, b: GroupPoint) -> GroupPoint:
    """Group product ``a o b``."""
    _check(G, a, b)
    z, w = mul(G, *a.rows(), *b.rows())
    return GroupPoint(z[0], w[0])


def inverse(G: GroupSpec, a: GroupPoint) -> GroupPoint:
    """``(-z, -w)``; the correction term vanishes because ``<z, Uz> = 0``."""
    _check(G, a)
    return GroupPoint(-a.z, -a.w)


def norm(G: GroupSpec, a: GroupPoint) -> float:
    """Homogeneous norm ``(|z|^4/16 + |w|^2)^(1/4)``."""
    _check(G, a)
    return float(hnorm(*a.rows())[0])


def dilate(mu: float, a: GroupPoint) -> GroupPoint:
    """Anisotropic dilation ``(mu z, mu^2 w)``."""
    if not mu > 0:
        raise PreconditionError(f"dilation factor must be positive, got {mu}")
    return GroupPoint(mu * a.z, mu * mu * a.w)


def distance(G: GroupSpec, a: GroupPoint, b: GroupPoint) -> float:
    """Left-invariant distance ``|b^{-1} o a|``."""
    return norm(G, multiply(G, inverse(G, b), a))


def j_map(G: GroupSpec, w) -> np.ndarray:
    """Matrix ``J_w`` with ``<J_w v, u> = <w, [v, u]>``.

    The bracket induced by the group law is ``[v, u]_k = v^T U^(k) u``,
    which forces ``J_w = sum_k w_k U^(k)^T``.
    """
    w = np.asarray(w, dtype=float).reshape(G.m)
    return np.einsum("k,kji->ij", w, G.mats)


def bracket(G: GroupSpec, v, u) -> np.ndarray:
    """Lie bracket of two horizontal vectors, a vector in ``R^m``."""
    return np.einsum("i,kij,j->k", np.asarray(v, float), G.mats, np.asarray(u, float))


def polar_split(G: GroupSpec, p: GroupPoint) -> tuple[float, GroupPoint]:
    """Write ``p = dilate(rho, sigma)`` with ``norm(sigma) = 1``."""
    rho = norm(G, p)
    if rho == 0.0:
        raise PreconditionError("polar_split is undefined at the identity")
    return rho, dilate(1.0 / rho, p)


# finite-difference operators ---------------------------------------------

def _default_step(G, p, h):
    return 1e-4 * (1.0 + norm(G, p)) if h is None else float(h)


def _stencil(G, f, p, h):
    """Values of ``f`` at ``p o (+-h e_j, 0)`` for every horizontal ``j``."""
    d = 2 * G.n
    steps = np.vstack([h * np.eye(d), -h * np.eye(d)])
    z, w = mul(G, p.z[None, :], p.w[None, :], steps, np.zeros((2 * d, G.m)))
    vals = np.asarray(f.eval(z, w), dtype=float)
    centre = float(np.asarray(f.eval(*p.rows()), dtype=float)[0])
    if not (np.all(np.isfinite(vals)) and np.isfinite(centre)):
        raise PreconditionError(f"non-finite field values near {p}")
    return vals[:d], vals[d:], centre


def horizontal_gradient_fd(G: GroupSpec, f, p: GroupPoint, h: float | None = None) -> np.ndarray:
    """Central differences of ``X_j f`` along the curves ``p o (t e_j, 0)``."""
    _check(G, p)
    h = _default_step(G, p, h)
    if h <= 0:
        raise PreconditionError("step must be positive")
    fp, fm, _ = _stencil(G, f, p, h)
    return (fp - fm) / (2 * h)


def sublaplacian_fd(G: GroupSpec, f, p: GroupPoint, h: float | None = None) -> float:
    """Second-order estimate of ``-sum_j X_j^2 f`` at ``p``.

    The curves ``t -> p o (t e_j, 0)`` are integral curves of ``X_j``, so the
    three-point second difference along them is ``X_j^2 f + O(h^2)``.
    """
    _check(G, p)
    h = _default_step(G, p, h)
    if h <= 0:
        raise PreconditionError("step must be positive")
    fp, fm, c = _stencil(G, f, p, h)
    return float(-np.sum(fp - 2 * c + fm) / h**2)
