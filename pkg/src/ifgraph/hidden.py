"""Hidden-interference estimators.

* static channel: per target j, the minimum hitting set of the sets of
  nodes that were on the air whenever j's packet was lost;
* s = 1: a counting shortcut for the same search;
* random channel: a conditional-loss ratio minimised over screening sets and
  thresholded halfway between the fade level and ``p_min``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import _pykernels, kernels
from .model import EstimationResult, ModelParams, SessionTrace, neighbor_sets, upair


@dataclass(frozen=True)
class CandidateCollection:
    """Candidate interferer sets of target ``j``, one per NACK session."""

    j: int
    sets: tuple = ()
    sessions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self) -> None:
        if any(self.j in s for s in self.sets):
            raise ValueError("a candidate set may not contain its own target")
        if len(self.sets) != len(self.sessions):
            raise ValueError("one session index per candidate set")

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)


def collect_candidates(trace: SessionTrace, j: int) -> CandidateCollection:
    if not 0 <= j < trace.n:
        raise ValueError(f"node {j} outside 0..{trace.n - 1}")
    sessions = np.flatnonzero(trace.nack[:, j])
    X = trace.X
    sets = tuple(frozenset(int(i) for i in np.flatnonzero(X[t]) if i != j) for t in sessions)
    return CandidateCollection(j, sets, sessions)


# -- minimum hitting set -----------------------------------------------------

def _is_hitting(candidate: frozenset, collection: Iterable[frozenset]) -> bool:
    return all(candidate & s for s in collection)


def _search(masks: Sequence[int] | np.ndarray, nbits: int, max_size: int):
    """Smallest lexicographically-first bit combination hitting every mask."""
    use_compiled = nbits <= 64 and isinstance(masks, np.ndarray)
    for r in range(1, max_size + 1):
        if r > nbits:
            break
        if use_compiled:
            combo = kernels.first_hitting_combo(masks, nbits, r)
        else:
            combo = _pykernels.first_hitting_combo(masks, nbits, r)
        if combo is not None:
            return combo
    return None


def _hitting_from_masks(node_masks: np.ndarray, allowed: Sequence[int], max_size: int):
    """Hitting set over ``allowed`` for collections given as node-bit uint64 masks."""
    if node_masks.size == 0:
        return frozenset()
    node_masks = np.unique(node_masks)
    comp = np.zeros_like(node_masks)
    one = np.uint64(1)
    for pos, a in enumerate(allowed):
        comp |= ((node_masks >> np.uint64(a)) & one) << np.uint64(pos)
    if np.any(comp == 0):
        return None
    combo = _search(np.unique(comp), len(allowed), max_size)
    if combo is None:
        return None
    result = frozenset(allowed[c] for c in combo)
    chosen = np.uint64(sum(1 << a for a in result))
    assert np.all(node_masks & chosen), "hitting-set search returned a non-hitting set"
    return result


def min_hitting_set(collection: Iterable[Iterable[int]], allowed: Iterable[int], max_size: int):
    """Smallest subset of ``allowed`` (size <= ``max_size``) meeting every set.

    Ties between minimisers are broken lexicographically on sorted node
    indices.  Returns ``frozenset()`` for an empty collection and ``None``
    when no such subset exists.
    """
    if max_size < 0:
        raise ValueError("max_size must be non-negative")
    sets = [frozenset(s) for s in collection]
    if not sets:
        return frozenset()
    allowed = sorted(set(int(a) for a in allowed))
    pos = {a: k for k, a in enumerate(allowed)}
    masks = []
    for s in sets:
        m = 0
        for a in s:
            if a in pos:
                m |= 1 << pos[a]
        if m == 0:
            return None
        masks.append(m)
    masks = sorted(set(masks))
    if len(allowed) <= 64:
        masks = np.asarray(masks, dtype=np.uint64)
    combo = _search(masks, len(allowed), max_size)
    if combo is None:
        return None
    result = frozenset(allowed[c] for c in combo)
    assert _is_hitting(result, sets), "hitting-set search returned a non-hitting set"
    return result


def _row_masks(X: np.ndarray) -> np.ndarray:
    n = X.shape[1]
    weights = np.left_shift(np.uint64(1), np.arange(n, dtype=np.uint64))
    return (X.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


def _as_edges(direct_estimate) -> frozenset:
    if isinstance(direct_estimate, EstimationResult):
        return direct_estimate.direct_edges
    return frozenset(upair(int(i), int(j)) for i, j in direct_estimate)


def _severity(trace: SessionTrace, i: int, j: int) -> float:
    both = (trace.X[:, i] == 1) & (trace.X[:, j] == 1)
    total = int(both.sum())
    return float((both & trace.nack[:, j]).sum()) / total if total else 0.0


def estimate_hidden_static(trace: SessionTrace, direct_estimate, s: int,
                           restrict: bool = True) -> EstimationResult:
    """Minimum-hitting-set estimator for the static channel.

    ``restrict`` limits the search for target j to nodes that are not its
    neighbours in ``direct_estimate`` (disable for ablation).
    """
    n = trace.n
    direct = _as_edges(direct_estimate)
    nbrs = neighbor_sets(n, direct)
    fast = n <= 64
    if fast:
        rows = _row_masks(trace.X)
    nack = trace.nack
    hidden, flags = {}, []
    for j in range(n):
        allowed = [a for a in range(n) if a != j and not (restrict and a in nbrs[j])]
        if fast:
            res = _hitting_from_masks(rows[nack[:, j]], allowed, s)
        else:
            res = min_hitting_set(collect_candidates(trace, j).sets, allowed, s)
        if res is None:
            flags.append((j, "no-hitting-set"))
            continue
        for i in sorted(res):
            hidden[(i, j)] = _severity(trace, i, j)
    return EstimationResult(n, direct, hidden, stats={"k": trace.k, "s": s}, flags=flags)


def estimate_hidden_s1(trace: SessionTrace) -> EstimationResult:
    """Counting shortcut for s = 1: the interferer is on the air in every loss."""
    n = trace.n
    X = trace.X.astype(np.int64)
    nack = trace.nack
    hidden, flags = {}, []
    for j in range(n):
        lost = nack[:, j]
        total = int(lost.sum())
        if total == 0:
            continue
        counts = X[lost].sum(axis=0)
        counts[j] = -1
        full = np.flatnonzero(counts == total)
        if full.size == 0:
            flags.append((j, "no-hitting-set"))
            continue
        if full.size > 1:
            flags.append((j, "ambiguous"))
        i = int(full[0])
        hidden[(i, j)] = _severity(trace, i, j)
    return EstimationResult(n, frozenset(), hidden, stats={"k": trace.k, "s": 1}, flags=flags)


# -- random channel ------------------------------------------------------------

@dataclass(frozen=True)
class PatternTable:
    """Distinct (activation, loss) rows of a trace with multiplicities."""

    X: np.ndarray
    nack: np.ndarray
    counts: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[1]


def compress_trace(trace: SessionTrace) -> PatternTable:
    n = trace.n
    key = np.concatenate([trace.X, trace.nack.astype(np.uint8)], axis=1)
    uniq, counts = np.unique(np.packbits(key, axis=1), axis=0, return_counts=True)
    rows = np.unpackbits(uniq, axis=1, count=2 * n).astype(bool)
    return PatternTable(rows[:, :n], rows[:, n:], counts.astype(np.int64))


def _table(data) -> PatternTable:
    return data if isinstance(data, PatternTable) else compress_trace(data)


def p_hat(data, i: int, j: int, neighbors_j: Iterable[int], s: int):
    """Minimum over screening sets S of the conditional loss ratio; ``None`` if undefined.

    For each S outside ``neighbors_j`` and {i, j} with |S| <= s, the ratio is
    (#sessions with i, j on air, ``neighbors_j`` and S silent, j lost) /
    (#sessions with i, j on air, ``neighbors_j`` and S silent); S with no
    such sessions are skipped.
    """
    tab = _table(data)
    if i == j:
        raise ValueError("p_hat needs distinct nodes")
    nb = set(int(a) for a in neighbors_j)
    if i in nb:
        raise ValueError(f"{i} is a direct neighbour of {j}")
    X = tab.X
    base = X[:, i] & X[:, j]
    if nb:
        base &= ~X[:, sorted(nb)].any(axis=1)
    sub = X[base]
    cnt = tab.counts[base]
    lost = tab.nack[base, j]
    rest = [a for a in range(tab.n) if a not in nb and a not in (i, j)]
    best = None
    for r in range(0, s + 1):
        for S in combinations(rest, r):
            sel = ~sub[:, list(S)].any(axis=1) if S else np.ones(len(cnt), dtype=bool)
            den = int(cnt[sel].sum())
            if den == 0:
                continue
            ratio = int(cnt[sel & lost].sum()) / den
            if best is None or ratio < best:
                best = ratio
    return best


def estimate_hidden_robust(trace, direct_estimate, params: ModelParams,
                           s: int | None = None) -> EstimationResult:
    """Declare (i -> j) when the screened loss ratio reaches (p_min + p_empty) / 2."""
    tab = _table(trace)
    n = tab.n
    s = params.s if s is None else s
    delta = params.hidden_threshold
    direct = _as_edges(direct_estimate)
    nbrs = neighbor_sets(n, direct)
    hidden, flags, values = {}, [], {}
    for j in range(n):
        for i in range(n):
            if i == j or i in nbrs[j]:
                continue
            v = p_hat(tab, i, j, nbrs[j], s)
            values[(i, j)] = v
            if v is None:
                flags.append((j, f"insufficient-data:{i}"))
            elif v >= delta:
                hidden[(i, j)] = v
    k = int(tab.counts.sum())
    return EstimationResult(n, direct, hidden,
                            stats={"k": k, "s": s, "delta": delta, "p_hat": values}, flags=flags)


__all__ = [
    "CandidateCollection", "collect_candidates", "min_hitting_set", "estimate_hidden_static",
    "estimate_hidden_s1", "PatternTable", "compress_trace", "p_hat", "estimate_hidden_robust",
]
