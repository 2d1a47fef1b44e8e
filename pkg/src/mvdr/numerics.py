"""Scalar/vector primitives shared by every other module.

All arithmetic runs in 64-bit floats regardless of storage precision so
that rankings do not depend on the platform or on accumulation order.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateVector, EmptyInput, NotADistribution, ShapeError

# how far a distribution may stray from summing to 1
DISTRIBUTION_ATOL = 1e-9


def mean(values) -> float:
    """Arithmetic mean of a non-empty sequence."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("mean of empty sequence")
    low = float(arr.min())
    if low == float(arr.max()):
        # exact for constant input; float summation noise would otherwise
        # break the strict-threshold fallback contract for uniform scores
        return low
    return float(arr.mean())


def std_pop(values) -> float:
    """Population standard deviation (1/N denominator, not 1/(N-1))."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("standard deviation of empty sequence")
    if float(arr.min()) == float(arr.max()):
        return 0.0
    return float(arr.std())


def cosine_sim(u, v) -> float:
    """Cosine similarity of two equal-length, nonzero vectors."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateVector("cosine similarity of a zero-norm vector")
    return float(np.dot(a, b) / (norm_a * norm_b))


def shannon_entropy(p) -> float:
    """Entropy of a probability distribution, in nats.

    ``0 * ln(0)`` is taken as 0.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.size == 0:
        raise NotADistribution("empty distribution")
    if np.any(arr < 0.0):
        raise NotADistribution("negative probability mass")
    total = float(arr.sum())
    if abs(total - 1.0) > DISTRIBUTION_ATOL:
        raise NotADistribution(f"probabilities sum to {total}, not 1")
    positive = arr[arr > 0.0]
    return float(-np.sum(positive * np.log(positive)))
