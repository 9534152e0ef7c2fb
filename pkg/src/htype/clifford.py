"""Anticommuting skew-orthogonal generator systems.

An H-type group on ``R^{2n} x R^m`` is fixed by ``m`` matrices
``U^(k)`` of size ``2n`` that are skew-symmetric, orthogonal and pairwise
anticommuting.  They are built as Kronecker words in the real 2x2 blocks
``I``, ``E = [[0, 1], [-1, 0]]``, ``X`` and ``Z`` on the smallest
admissible power-of-two size, then repeated block-diagonally up to ``2n``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .errors import PreconditionError

_BLOCKS = {
    "E": np.array([[0, 1], [-1, 0]]),
    "X": np.array([[0, 1], [1, 0]]),
    "Z": np.array([[1, 0], [0, -1]]),
    "I": np.eye(2, dtype=int),
}
# E first so that the one-generator case is exactly E.
_ORDER = "EXZI"


def radon_hurwitz(N: int) -> int:
    """Radon-Hurwitz number ``rho(N) = 8a + 2^b`` for ``N = 2^(4a+b) c``.

    Parameters
    ----------
    N : int
        Positive integer.

    Returns
    -------
    int
        One more than the maximal number of anticommuting orthogonal
        complex structures on ``R^N``.
    """
    N = int(N)
    if N < 1:
        raise PreconditionError(f"radon_hurwitz needs N >= 1, got {N}")
    e = 0
    while N % 2 == 0:
        N //= 2
        e += 1
    a, b = divmod(e, 4)
    return 8 * a + 2**b


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """The matrices ``U^(1..m)`` stacked as an integer or float array.

    Attributes
    ----------
    n, m : int
        Half horizontal dimension and centre dimension.
    mats : ndarray, shape (m, 2n, 2n)
    """

    n: int
    m: int
    mats: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.mats)
        if mats.shape != (self.m, 2 * self.n, 2 * self.n):
            raise PreconditionError(
                f"expected mats of shape {(self.m, 2 * self.n, 2 * self.n)}, got {mats.shape}"
            )
        mats = mats.copy()
        mats.setflags(write=False)
        object.__setattr__(self, "mats", mats)

    def to_json(self) -> str:
        """Nested row-major arrays under ``"mats"`` plus the dimensions."""
        return json.dumps({"n": self.n, "m": self.m, "mats": self.mats.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "GeneratorSet":
        d = json.loads(text)
        return cls(int(d["n"]), int(d["m"]), np.array(d["mats"]))


@dataclass(frozen=True)
class GeneratorReport:
    """Largest residual of each defining identity."""

    skew: float
    orthogonal: float
    anticommute: float

    def ok(self, tol: float = 1e-13) -> bool:
        return max(self.skew, self.orthogonal, self.anticommute) <= tol


def _anticommute(u: str, v: str) -> bool:
    # Distinct non-identity blocks anticommute; the word pair does iff an odd
    # number of positions do.
    return sum(a != b and a != "I" and b != "I" for a, b in zip(u, v)) % 2 == 1


@lru_cache(maxsize=None)
def _words(level: int, m: int) -> tuple[str, ...] | None:
    skew = [
        "".join(w)
        for w in itertools.product(_ORDER, repeat=level)
        if "".join(w).count("E") % 2 == 1
    ]

    def extend(chosen, start):
        if len(chosen) == m:
            return chosen
        for i in range(start, len(skew)):
            w = skew[i]
            if all(_anticommute(w, c) for c in chosen):
                found = extend(chosen + [w], i + 1)
                if found:
                    return found
        return None

    found = extend([], 0)
    return tuple(found) if found else None


def _word_matrix(word: str) -> np.ndarray:
    return reduce(np.kron, (_BLOCKS[c] for c in word))


def build_generators(n: int, m: int) -> GeneratorSet:
    """Deterministic generator system for the pair ``(n, m)``.

    Raises
    ------
    PreconditionError
        If ``m > radon_hurwitz(2n) - 1``.
    """
    n, m = int(n), int(m)
    if n < 1 or m < 1:
        raise PreconditionError(f"need n, m >= 1, got ({n}, {m})")
    bound = radon_hurwitz(2 * n) - 1
    if m > bound:
        raise PreconditionError(
            f"(n, m) = ({n}, {m}) is inadmissible: the Radon-Hurwitz bound "
            f"gives m <= rho(2n) - 1 = {bound}"
        )
    level = 1
    while radon_hurwitz(2**level) - 1 < m:
        level += 1
    words = _words(level, m)
    if words is None:  # pragma: no cover - excluded by the bound
        raise RuntimeError(f"no generator words at level {level} for m = {m}")
    copies = 2 * n // 2**level
    mats = np.stack([np.kron(np.eye(copies, dtype=int), _word_matrix(w)) for w in words])
    return GeneratorSet(n, m, mats)


def verify_generators(g: GeneratorSet) -> GeneratorReport:
    """Measure skewness, orthogonality and anticommutation residuals."""
    U = np.asarray(g.mats, dtype=float)
    eye = np.eye(U.shape[1])
    skew = max(np.abs(u + u.T).max() for u in U)
    orth = max(np.abs(u.T @ u - eye).max() for u in U)
    anti = 0.0
    for j in range(len(U)):
        for k in range(j + 1, len(U)):
            anti = max(anti, np.abs(U[j] @ U[k] + U[k] @ U[j]).max())
    return GeneratorReport(float(skew), float(orth), float(anti))
