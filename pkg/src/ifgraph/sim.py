"""Session-synchronized CSMA/CA sampler.

Each session every node draws a queue indicator and a uniform backoff time;
nodes are served in backoff order and transmit unless an already-active node
they sense is on the air.  Feedback then marks each transmitter's packet as
ACK or NACK from fades, hidden-interferer collisions and (when sensing
fails) direct-neighbour collisions.

Randomness is organised in blocks of ``BLOCK`` sessions.  Block ``b`` of a
trace with master seed ``seed`` uses ``SeedSequence(seed, spawn_key=(b,))``,
spawned into one independent stream per purpose, so a trace of length k is
always a prefix of any longer trace with the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _pykernels, kernels
from .model import Feedback, InterferenceGraph, ModelParams, SessionTrace

BLOCK = 4096
STREAMS = ("traffic", "backoff", "sensing", "fade", "collision", "noncompounding")


@dataclass(frozen=True)
class SessionInputs:
    """Random inputs of one session.

    ``sense_ok`` is an optional symmetric n x n boolean matrix; when omitted
    a node senses exactly its direct neighbours.
    """

    Q: np.ndarray
    T: np.ndarray
    sense_ok: np.ndarray | None = None

    def __post_init__(self) -> None:
        Q = np.asarray(self.Q, dtype=np.uint8)
        T = np.asarray(self.T, dtype=float)
        if Q.ndim != 1 or Q.shape != T.shape:
            raise ValueError("Q and T must be vectors of equal length")
        if self.sense_ok is not None:
            S = np.asarray(self.sense_ok, dtype=bool)
            if S.shape != (Q.size, Q.size) or not np.array_equal(S, S.T):
                raise ValueError("sense_ok must be a symmetric n x n matrix")
            object.__setattr__(self, "sense_ok", S)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "T", T)


def resolve_transmissions(inputs: SessionInputs, graph: InterferenceGraph) -> np.ndarray:
    """Activation vector for one session (deterministic in its inputs)."""
    n = graph.n
    if inputs.Q.size != n:
        raise ValueError(f"inputs are for {inputs.Q.size} nodes, graph has {n}")
    sensed = inputs.sense_ok if inputs.sense_ok is not None else graph.adjacency().astype(bool)
    X = np.zeros(n, dtype=np.uint8)
    for i in np.argsort(inputs.T, kind="stable"):
        if inputs.Q[i] and not np.any(X.astype(bool) & sensed[:, i]):
            X[i] = 1
    return X


class _Compiled:
    """Flat arrays describing a graph, in the layout the kernels expect."""

    def __init__(self, graph: InterferenceGraph):
        n = graph.n
        self.n = n
        self.adj = np.ascontiguousarray(graph.adjacency())
        q = graph.sensing_matrix()
        self.sense_base = np.ascontiguousarray((q == 0.0).astype(np.uint8))
        np.fill_diagonal(self.sense_base, 0)
        self.pair_slot = np.full((n, n), -1, dtype=np.int64)
        thr = []
        for i in range(n):
            for j in range(i + 1, n):
                if 0.0 < q[i, j] < 1.0:
                    self.pair_slot[i, j] = self.pair_slot[j, i] = len(thr)
                    thr.append(1.0 - q[i, j])
        self.slot_thr = np.asarray(thr, dtype=float)
        self.fade = np.asarray(graph.fade_prob, dtype=float)
        edges = sorted(graph.hidden_edges.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        self.h_src = np.asarray([i for (i, _), _ in edges], dtype=np.int64)
        self.h_p = np.asarray([p for _, p in edges], dtype=float)
        targets = np.asarray([j for (_, j), _ in edges], dtype=np.int64)
        self.h_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.h_ptr, targets + 1, 1)
        self.h_ptr = np.cumsum(self.h_ptr)
        self.non_compounding = bool(graph.non_compounding)

    @property
    def nslots(self) -> int:
        return self.slot_thr.size

    @property
    def nhidden(self) -> int:
        return self.h_p.size


def block_generators(seed: int, block: int) -> dict[str, np.random.Generator]:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return {name: np.random.Generator(np.random.PCG64(child))
            for name, child in zip(STREAMS, ss.spawn(len(STREAMS)))}


def resolve_feedback(X: np.ndarray, graph: InterferenceGraph, rng: np.random.Generator) -> np.ndarray:
    """Feedback vector for one session given its activations."""
    X = np.asarray(X, dtype=np.uint8).reshape(1, -1)
    c = _Compiled(graph)
    n = c.n
    fade_u = rng.random((1, n))
    hid_u = rng.random((1, c.nhidden))
    nc_u = rng.random((1, n))
    nack = _pykernels._feedback(X, c.adj, fade_u, c.fade, c.h_ptr, c.h_src, c.h_p,
                                hid_u, c.non_compounding, nc_u)
    return _pykernels._to_y(X, nack)[0]


def _node_probs(graph, params, node_p):
    if node_p is None:
        if params is None:
            raise ValueError("need params or node_p for Bernoulli traffic")
        return np.full(graph.n, params.p)
    node_p = np.asarray(node_p, dtype=float)
    if node_p.shape != (graph.n,) or np.any((node_p < 0) | (node_p > 1)):
        raise ValueError("node_p must hold one probability in [0,1] per node")
    return node_p


def iter_blocks(graph: InterferenceGraph, params: ModelParams | None, seed: int,
                traffic: str = "bernoulli", node_p=None, arrival_rates=None,
                W: float | None = None, backend=None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield successive ``(X, Y)`` blocks of ``BLOCK`` sessions forever."""
    if traffic not in ("bernoulli", "queued"):
        raise ValueError(f"unknown traffic mode {traffic!r}")
    kern = backend or kernels
    c = _Compiled(graph)
    n = c.n
    W = W if W is not None else (params.W if params is not None else 1.0)
    if traffic == "bernoulli":
        probs = _node_probs(graph, params, node_p)
    else:
        if arrival_rates is None:
            raise ValueError("queued traffic needs arrival_rates")
        rates = np.asarray(arrival_rates, dtype=float)
        if rates.shape != (n,) or np.any(rates < 0):
            raise ValueError("arrival_rates must hold one non-negative rate per node")
        queue = np.zeros(n, dtype=np.int64)
    block = 0
    while True:
        g = block_generators(seed, block)
        if traffic == "bernoulli":
            Q = (g["traffic"].random((BLOCK, n)) < probs).astype(np.uint8)
        else:
            arrivals = g["traffic"].poisson(rates, (BLOCK, n)).astype(np.int64)
        T = g["backoff"].random((BLOCK, n)) * W
        order = np.ascontiguousarray(np.argsort(T, axis=1, kind="stable").astype(np.int64))
        coins = g["sensing"].random((BLOCK, c.nslots))
        fade_u = g["fade"].random((BLOCK, n))
        hid_u = g["collision"].random((BLOCK, c.nhidden))
        nc_u = g["noncompounding"].random((BLOCK, n))
        common = (c.sense_base, c.pair_slot, coins, c.slot_thr, c.adj, fade_u, c.fade,
                  c.h_ptr, c.h_src, c.h_p, hid_u, c.non_compounding, nc_u)
        if traffic == "bernoulli":
            yield kern.simulate_block(order, Q, *common)
        else:
            yield kern.simulate_block_queued(order, arrivals, queue, *common)
        block += 1


def sample_trace(graph: InterferenceGraph, params: ModelParams | None, k: int, seed: int,
                 traffic: str = "bernoulli", node_p=None, arrival_rates=None,
                 W: float | None = None, backend=None) -> SessionTrace:
    """Draw ``k`` sessions; identical arguments give a bit-identical trace."""
    if k < 1:
        raise ValueError(f"need at least one session, got k={k}")
    nblocks = -(-k // BLOCK)
    gen = iter_blocks(graph, params, seed, traffic, node_p, arrival_rates, W, backend)
    Xs, Ys = [], []
    for _ in range(nblocks):
        X, Y = next(gen)
        Xs.append(X)
        Ys.append(Y)
    return SessionTrace(np.concatenate(Xs)[:k], np.concatenate(Ys)[:k])


def static_violations(trace: SessionTrace, graph: InterferenceGraph) -> int:
    """Number of sessions in which two direct neighbours both transmitted."""
    X = trace.X.astype(np.int64)
    bad = 0
    for i, j in graph.direct_edges:
        bad += int(np.sum(X[:, i] & X[:, j]))
    return bad


__all__ = [
    "BLOCK", "Feedback", "SessionInputs", "resolve_transmissions", "resolve_feedback",
    "iter_blocks", "sample_trace", "block_generators", "static_violations",
]
