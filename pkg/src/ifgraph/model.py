"""Domain types shared by every other module.

Nodes are dense integer indices ``0..n-1``.  Direct edges are unordered
pairs stored as ``(i, j)`` with ``i < j``; hidden edges are ordered pairs
``(i, j)`` meaning "i corrupts transmissions of j".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

Pair = tuple[int, int]


class Feedback(enum.IntEnum):
    """Per-session feedback at an AP."""

    IDLE = -1
    NACK = 0
    ACK = 1


def upair(i: int, j: int) -> Pair:
    """Canonical unordered pair."""
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class ModelParams:
    """Statistical model constants.

    ``p_empty`` is the upper bound on the per-node fade probability and
    ``c3`` the separation constant relating ``q_up`` and ``q_low``.
    """

    p: float = 0.5
    W: float = 32.0
    d: int = 2
    s: int = 1
    p_min: float = 0.5
    p_empty: float = 0.0
    q_low: float = 0.0
    q_up: float = 1.0
    c3: float = 2.0
    channel_mode: str = "static"

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"traffic probability p must lie in (0,1), got {self.p}")
        if not self.W > 0:
            raise ValueError(f"backoff window W must be positive, got {self.W}")
        if self.d < 1 or self.s < 0:
            raise ValueError("degree caps need d >= 1 and s >= 0")
        if not 0.0 < self.p_min < 1.0:
            raise ValueError(f"p_min must lie in (0,1), got {self.p_min}")
        if not 0.0 <= self.q_low < self.q_up <= 1.0:
            raise ValueError("sensing bounds need 0 <= q_low < q_up <= 1")
        if self.channel_mode not in ("static", "random"):
            raise ValueError(f"unknown channel mode {self.channel_mode!r}")
        if self.channel_mode == "random":
            if self.c3 < 1.0:
                raise ValueError("assumption 2 violated: c3 must be >= 1")
            if self.q_up < self.c3 * self.d**2 * self.q_low:
                raise ValueError("assumption 2 violated: q_up < c3 * d^2 * q_low")
            if not 0.0 <= self.p_empty < self.p_min:
                raise ValueError("assumption 3 violated: need 0 <= p_empty < p_min")

    @property
    def hidden_threshold(self) -> float:
        """Decision threshold for the robust hidden estimator."""
        return (self.p_min + self.p_empty) / 2.0

    @property
    def epsilon(self) -> float:
        """Co-occurrence threshold for the robust direct estimator."""
        return self.p**2 * self.q_up * (1.0 - 1.0 / self.c3) / (2.0 * self.d**2)


@dataclass(frozen=True, eq=False)
class InterferenceGraph:
    """Ground-truth interference graph.

    ``sensing_fail`` holds only overrides; pairs not listed default to 0 on
    direct edges and 1 elsewhere (the static channel).  Passing ``params``
    additionally enforces the degree caps, ``p_min`` and the sensing bounds.
    """

    n: int
    direct_edges: frozenset = frozenset()
    hidden_edges: Mapping[Pair, float] = field(default_factory=dict)
    fade_prob: tuple = ()
    sensing_fail: Mapping[Pair, float] = field(default_factory=dict)
    non_compounding: bool = False
    params: ModelParams | None = None

    def __post_init__(self) -> None:
        n = self.n
        if n < 1:
            raise ValueError("graph needs at least one node")
        direct = set()
        for i, j in self.direct_edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop ({i},{j}) in direct edges")
            self._check_node(i), self._check_node(j)
            direct.add(upair(i, j))
        hidden = {}
        for (i, j), w in dict(self.hidden_edges).items():
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise ValueError(f"self-loop ({i},{j}) in hidden edges")
            self._check_node(i), self._check_node(j)
            if not 0.0 < w <= 1.0:
                raise ValueError(f"hidden weight p_{i}{j}={w} outside (0,1]")
            if upair(i, j) in direct:
                raise ValueError(f"pair ({i},{j}) is both direct and hidden")
            hidden[(i, j)] = w
        fade = tuple(float(x) for x in self.fade_prob) or (0.0,) * n
        if len(fade) != n:
            raise ValueError("fade_prob must have one entry per node")
        if any(not 0.0 <= f < 1.0 for f in fade):
            raise ValueError("fade probabilities must lie in [0,1)")
        sensing = {}
        for (i, j), q in dict(self.sensing_fail).items():
            i, j, q = int(i), int(j), float(q)
            if i == j:
                raise ValueError("sensing override on a self-pair")
            self._check_node(i), self._check_node(j)
            if not 0.0 <= q <= 1.0:
                raise ValueError(f"sensing-failure probability {q} outside [0,1]")
            key = upair(i, j)
            if key in sensing and sensing[key] != q:
                raise ValueError(f"asymmetric sensing failure for pair {key}")
            sensing[key] = q
        object.__setattr__(self, "direct_edges", frozenset(direct))
        object.__setattr__(self, "hidden_edges", MappingProxyType(dict(sorted(hidden.items()))))
        object.__setattr__(self, "fade_prob", fade)
        object.__setattr__(self, "sensing_fail", MappingProxyType(dict(sorted(sensing.items()))))
        if self.params is not None:
            self.validate(self.params)

    def _check_node(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise ValueError(f"node {i} outside 0..{self.n - 1}")

    def validate(self, params: ModelParams) -> None:
        """Check the parameter-dependent invariants; raise ValueError on violation."""
        deg = self.degrees()
        if deg.max(initial=0) > params.d - 1:
            raise ValueError(f"direct degree {deg.max()} exceeds d-1={params.d - 1}")
        indeg = self.hidden_in_degrees()
        if indeg.max(initial=0) > params.s:
            raise ValueError(f"hidden in-degree {indeg.max()} exceeds s={params.s}")
        for (i, j), w in self.hidden_edges.items():
            if w < params.p_min:
                raise ValueError(f"p_{i}{j}={w} below p_min={params.p_min}")
        for i in range(self.n):
            for j in range(i + 1, self.n):
                q = self.q(i, j)
                if (i, j) in self.direct_edges:
                    if q > params.q_low:
                        raise ValueError(f"q_{i}{j}={q} above q_low on a direct edge")
                elif q < params.q_up:
                    raise ValueError(f"q_{i}{j}={q} below q_up on a non-edge")
        if params.channel_mode == "random":
            if max(self.fade_prob) > params.p_empty:
                raise ValueError("fade probability above p_empty")
        elif any(self.fade_prob):
            raise ValueError("static mode requires zero fade probabilities")

    # -- queries -----------------------------------------------------------

    def p(self, i: int, j: int) -> float:
        """Hidden collision probability of i on j; 0 when (i->j) is not an edge."""
        return self.hidden_edges.get((i, j), 0.0)

    def q(self, i: int, j: int) -> float:
        key = upair(i, j)
        if key in self.sensing_fail:
            return self.sensing_fail[key]
        return 0.0 if key in self.direct_edges else 1.0

    def neighbors(self, i: int) -> frozenset:
        return frozenset(b if a == i else a for a, b in self.direct_edges if i in (a, b))

    def hidden_sources(self, j: int) -> frozenset:
        return frozenset(i for (i, t) in self.hidden_edges if t == j)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.direct_edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def hidden_in_degrees(self) -> np.ndarray:
        indeg = np.zeros(self.n, dtype=np.int64)
        for _, j in self.hidden_edges:
            indeg[j] += 1
        return indeg

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        for i, j in self.direct_edges:
            a[i, j] = a[j, i] = 1
        return a

    def sensing_matrix(self) -> np.ndarray:
        """Dense symmetric q matrix with zero diagonal."""
        q = np.ones((self.n, self.n))
        for i, j in self.direct_edges:
            q[i, j] = q[j, i] = 0.0
        for (i, j), v in self.sensing_fail.items():
            q[i, j] = q[j, i] = v
        np.fill_diagonal(q, 0.0)
        return q

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max(initial=0))

    @property
    def max_hidden_in_degree(self) -> int:
        return int(self.hidden_in_degrees().max(initial=0))

    def replace(self, **changes) -> "InterferenceGraph":
        kw = dict(
            n=self.n,
            direct_edges=self.direct_edges,
            hidden_edges=dict(self.hidden_edges),
            fade_prob=self.fade_prob,
            sensing_fail=dict(self.sensing_fail),
            non_compounding=self.non_compounding,
            params=self.params,
        )
        kw.update(changes)
        return InterferenceGraph(**kw)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InterferenceGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.direct_edges == other.direct_edges
            and dict(self.hidden_edges) == dict(other.hidden_edges)
            and self.fade_prob == other.fade_prob
            and dict(self.sensing_fail) == dict(other.sensing_fail)
            and self.non_compounding == other.non_compounding
        )

    __hash__ = None  # type: ignore[assignment]

    def __reduce__(self):
        return (InterferenceGraph, (self.n, self.direct_edges, dict(self.hidden_edges), self.fade_prob,
                                    dict(self.sensing_fail), self.non_compounding, self.params))


@dataclass(frozen=True, eq=False)
class SessionTrace:
    """k sessions of activations ``X`` (0/1) and feedback ``Y`` (Feedback codes)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self) -> None:
        X = np.ascontiguousarray(self.X, dtype=np.uint8)
        Y = np.ascontiguousarray(self.Y, dtype=np.int8)
        if X.ndim != 2 or X.shape != Y.shape:
            raise ValueError("X and Y must be k x n arrays of equal shape")
        if X.size and X.max() > 1:
            raise ValueError("X must be binary")
        idle = Y == Feedback.IDLE
        if np.any(idle != (X == 0)):
            raise ValueError("Y must be IDLE exactly where X is 0")
        if np.any((Y != Feedback.IDLE) & (Y != Feedback.NACK) & (Y != Feedback.ACK)):
            raise ValueError("Y holds an unknown feedback code")
        X.flags.writeable = False
        Y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def k(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def nack(self) -> np.ndarray:
        return self.Y == Feedback.NACK

    def head(self, k: int) -> "SessionTrace":
        return SessionTrace(self.X[:k], self.Y[:k])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SessionTrace):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.Y, other.Y)

    __hash__ = None  # type: ignore[assignment]


@dataclass
class EstimationResult:
    """Output of the estimators.

    ``hidden_edges`` maps (i, j) to an empirical severity estimate.  ``flags``
    lists ``(node, reason)`` for targets the estimator could not resolve.
    """

    n: int
    direct_edges: frozenset = frozenset()
    hidden_edges: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def __post_init__(self) -> None:
        self.direct_edges = frozenset(upair(int(i), int(j)) for i, j in self.direct_edges)
        if any(i == j for i, j in self.direct_edges) or any(i == j for i, j in self.hidden_edges):
            raise ValueError("estimated edges may not be self-loops")

    def hidden_in_degrees(self) -> np.ndarray:
        indeg = np.zeros(self.n, dtype=np.int64)
        for _, j in self.hidden_edges:
            indeg[j] += 1
        return indeg


def _edge_sets(g) -> tuple[int, frozenset, frozenset]:
    if isinstance(g, (InterferenceGraph, EstimationResult)):
        return g.n, frozenset(g.direct_edges), frozenset(g.hidden_edges)
    raise TypeError(f"expected a graph or estimation result, got {type(g).__name__}")


def graph_equal(a, b) -> bool:
    """True iff both direct edge sets and hidden edge sets (as directed pairs) agree."""
    na, da, ha = _edge_sets(a)
    nb, db, hb = _edge_sets(b)
    if na != nb:
        raise ValueError(f"graphs have different node counts ({na} vs {nb})")
    return da == db and ha == hb


def edit_distance(a, b) -> int:
    """Number of edge insertions/deletions turning ``a`` into ``b``."""
    na, da, ha = _edge_sets(a)
    nb, db, hb = _edge_sets(b)
    if na != nb:
        raise ValueError(f"graphs have different node counts ({na} vs {nb})")
    return len(da ^ db) + len(ha ^ hb)


def complete_pairs(n: int) -> frozenset:
    return frozenset((i, j) for i in range(n) for j in range(i + 1, n))


def neighbor_sets(n: int, edges: Iterable[Pair]) -> list[set]:
    nb = [set() for _ in range(n)]
    for i, j in edges:
        nb[i].add(j)
        nb[j].add(i)
    return nb
