"""Deterministic batched Monte Carlo reduction.

Samples are drawn in fixed-size batches, each with its own child of a
``SeedSequence``.  Per-batch sums are combined in batch order, so the
result for a given seed and sample count does not depend on the number
of worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

BATCH = 1 << 15
_threads = max(1, int(os.environ.get("HTYPE_THREADS", "1") or 1))


def set_threads(k: int) -> None:
    """Cap the worker threads used for batch evaluation."""
    global _threads
    _threads = max(1, int(k))


def get_threads() -> int:
    return _threads


@dataclass(frozen=True)
class MCResult:
    """Sample mean of a (possibly vector) estimator with its covariance."""

    mean: np.ndarray
    cov: np.ndarray
    count: int

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.diag(self.cov), 0.0))


def batch_sizes(total: int, batch: int = BATCH) -> list[int]:
    full, rest = divmod(int(total), batch)
    return [batch] * full + ([rest] if rest else [])


def run(sample_fn, total: int, seed: int, batch: int = BATCH) -> MCResult:
    """Average ``sample_fn(rng, k)`` over ``total`` samples.

    ``sample_fn`` returns an array of shape ``(k,)`` or ``(k, d)``.  The
    reported covariance is that of the mean.
    """
    sizes = batch_sizes(total, batch)
    children = np.random.SeedSequence(int(seed) & ((1 << 64) - 1)).spawn(len(sizes))

    def one(i):
        vals = np.asarray(sample_fn(np.random.default_rng(children[i]), sizes[i]), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0, 0]
            raise FloatingPointError(f"non-finite sample in batch {i} at row {bad}")
        mu = vals.mean(0)
        d = vals - mu
        return mu, d.T @ d, len(vals)

    if _threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(_threads) as ex:
            parts = list(ex.map(one, range(len(sizes))))
    else:
        parts = [one(i) for i in range(len(sizes))]
    # ordered pairwise merge of centred moments
    mean, m2, n = parts[0]
    for mu, d2, k in parts[1:]:
        delta = mu - mean
        tot = n + k
        mean = mean + delta * (k / tot)
        m2 = m2 + d2 + np.outer(delta, delta) * (n * k / tot)
        n = tot
    return MCResult(mean, m2 / max(n - 1, 1) / n, n)
