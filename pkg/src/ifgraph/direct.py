"""Direct-interference estimators based on co-activation counts."""

from __future__ import annotations

import numpy as np

from .model import EstimationResult, ModelParams, SessionTrace, complete_pairs


def cooccurrence_counts(trace: SessionTrace) -> np.ndarray:
    """Integer matrix of sessions in which both i and j transmitted (diagonal: i alone)."""
    X = trace.X.astype(np.int64)
    return X.T @ X


def cooccurrence(trace: SessionTrace) -> np.ndarray:
    """Empirical co-activation frequencies Î (symmetric, diagonal = activity rate)."""
    if trace.k < 1:
        raise ValueError("empty trace")
    return cooccurrence_counts(trace) / trace.k


def direct_from_counts(counts: np.ndarray, k: int, threshold_count: float | None = None) -> frozenset:
    """Pairs kept as direct edges.

    With ``threshold_count`` None a pair is eliminated as soon as it was seen
    co-active once; otherwise it is eliminated when its count reaches the
    threshold (inclusive).
    """
    n = counts.shape[0]
    iu, ju = np.triu_indices(n, 1)
    c = counts[iu, ju]
    keep = c == 0 if threshold_count is None else c < threshold_count
    return frozenset(zip(iu[keep].tolist(), ju[keep].tolist()))


def estimate_direct_static(trace: SessionTrace) -> EstimationResult:
    """Start from the complete graph and drop every pair ever seen transmitting together."""
    counts = cooccurrence_counts(trace)
    edges = direct_from_counts(counts, trace.k)
    return EstimationResult(trace.n, edges, stats={"cooccurrence": counts, "k": trace.k})


def robust_epsilon(params: ModelParams) -> float:
    """Elimination threshold for the random-channel estimator."""
    if params.c3 <= 1.0:
        raise ValueError("assumption 2 violated: robust threshold needs c3 > 1")
    return params.epsilon


def estimate_direct_robust(trace: SessionTrace, eps: float) -> EstimationResult:
    """Drop pairs whose co-activation frequency is at least ``eps``."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"threshold must lie in (0,1), got {eps}")
    counts = cooccurrence_counts(trace)
    # compare frequencies exactly as Î >= eps, not via a rounded count
    freq = counts / trace.k
    n = trace.n
    iu, ju = np.triu_indices(n, 1)
    keep = freq[iu, ju] < eps
    edges = frozenset(zip(iu[keep].tolist(), ju[keep].tolist()))
    return EstimationResult(n, edges, stats={"cooccurrence": counts, "k": trace.k, "eps": eps})


def first_coactivation(X: np.ndarray, offset: int = 0, known: np.ndarray | None = None) -> np.ndarray:
    """Session index (1-based, shifted by ``offset``) of each pair's first co-activation.

    ``known`` carries results from earlier blocks; pairs not yet seen hold 0.
    """
    n = X.shape[1]
    first = np.zeros((n, n), dtype=np.int64) if known is None else known.copy()
    Xb = X.astype(bool)
    for i in range(n):
        both = Xb[:, i:i + 1] & Xb[:, i + 1:]
        hit = both.any(axis=0)
        idx = both.argmax(axis=0) + 1 + offset
        row = first[i, i + 1:]
        upd = hit & (row == 0)
        row[upd] = idx[upd]
        first[i, i + 1:] = row
    return first


__all__ = [
    "cooccurrence", "cooccurrence_counts", "direct_from_counts", "estimate_direct_static",
    "robust_epsilon", "estimate_direct_robust", "first_coactivation", "complete_pairs",
]
