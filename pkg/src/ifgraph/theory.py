"""Closed-form quantities and analytic graph families.

Sample-size bounds use natural logarithms throughout.  The two lower-bound
families (disjoint cliques for direct interference, clique-pair groups for
hidden interference) double as test fixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import InterferenceGraph, ModelParams, upair

THEOREMS = ("THM1", "THM2", "THM3", "THM4", "THM5", "THM6")


@dataclass(frozen=True)
class BoundInputs:
    """Inputs for :func:`sample_complexity`; each bound reads only what it needs."""

    n: int | None = None
    d: int | None = None
    s: int | None = None
    p: float | None = None
    p_min: float | None = None
    p_empty: float = 0.0
    q_low: float = 0.0
    q_up: float = 1.0
    c3: float | None = None
    delta: float | None = None
    gamma: float | None = None
    alpha_tsybakov: float | None = None
    c1: float | None = None
    c2: float | None = None


@dataclass(frozen=True)
class BoundResult:
    """``k`` is a sufficient sample size (upper bounds) or the largest k under
    which the minimax error floor applies (lower bounds)."""

    which: str
    k: int
    threshold: float
    floor: float | None = None
    aux: dict = field(default_factory=dict)


def _need(inputs: BoundInputs, *names: str) -> list:
    vals = []
    for name in names:
        v = getattr(inputs, name)
        if v is None:
            raise ValueError(f"missing bound input {name!r}")
        vals.append(v)
    return vals


def _check_prob(name: str, v: float, closed_low=False) -> None:
    ok = (0.0 <= v < 1.0) if closed_low else (0.0 < v < 1.0)
    if not ok:
        raise ValueError(f"{name}={v} out of range")


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 0.125:
        raise ValueError(f"Tsybakov constant alpha={alpha} must lie in (0, 1/8)")


def _minimax_floor(m: float, alpha: float) -> float:
    r = math.sqrt(m)
    return r / (1.0 + r) * (1.0 - 2.0 * alpha - math.sqrt(2.0 * alpha / math.log(m)))


def _ceil(x: float) -> int:
    # guard against values like 293.0000000001 produced by rounding
    r = round(x)
    return int(r) if abs(x - r) < 1e-9 else math.ceil(x)


def _thm1(b: BoundInputs) -> BoundResult:
    n, d, p, delta = _need(b, "n", "d", "p", "delta")
    _check_prob("p", p), _check_prob("delta", delta)
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    rate = -math.log1p(-(p**2) / d**2)
    x = (math.log(math.comb(n, 2)) + math.log(1.0 / delta)) / rate
    return BoundResult("THM1", _ceil(x), x)


def _thm2(b: BoundInputs) -> BoundResult:
    n, d, p, alpha = _need(b, "n", "d", "p", "alpha_tsybakov")
    _check_prob("p", p), _check_alpha(alpha)
    if n < 3:
        raise ValueError("lower bound needs n >= 3")
    if d - 1 > (3 * n - math.sqrt(n * n + 16 * n)) / 4:
        raise ValueError("clique construction infeasible: d-1 > (3n - sqrt(n^2+16n))/4")
    x = alpha * (d - 1) ** 2 * math.log(n) / (2.0 + 1.0 / (1.0 - p))
    return BoundResult("THM2", math.floor(x), x, _minimax_floor(n, alpha))


def _thm3(b: BoundInputs) -> BoundResult:
    n, d, s, p, p_min, delta = _need(b, "n", "d", "s", "p", "p_min", "delta")
    _check_prob("p", p), _check_prob("p_min", p_min), _check_prob("delta", delta)
    if s < 1:
        raise ValueError("hidden bound needs s >= 1")
    rate = -math.log1p(-(p**2) * (1 - p) ** s * p_min / d**2)
    x = (math.log(n * s) + math.log(1.0 / delta)) / rate
    return BoundResult("THM3", _ceil(x), x)


def group_family_size(n: int, c1: float, c2: float) -> float:
    """Number of alternative hypotheses in the hidden lower-bound family."""
    return 2.0 * c1 * (1.0 / (2.0 * c1 + c2) - 1.0) * n


def _thm4_constants(b: BoundInputs) -> tuple[float, float]:
    n, d, s = _need(b, "n", "d", "s")
    c1 = b.c1 if b.c1 is not None else d / n
    c2 = b.c2 if b.c2 is not None else (s - 1) / n
    tol = 1e-12
    if d > c1 * n + tol:
        raise ValueError("scaling condition violated: d > c1 n")
    if s - 1 > c2 * n + tol:
        raise ValueError("scaling condition violated: s-1 > c2 n")
    if not 2 * c1 + c2 < 1:
        raise ValueError("scaling condition violated: 2 c1 + c2 >= 1")
    return c1, c2


def _thm4(b: BoundInputs) -> BoundResult:
    n, d, s, p, p_min, alpha = _need(b, "n", "d", "s", "p", "p_min", "alpha_tsybakov")
    _check_prob("p", p), _check_prob("p_min", p_min), _check_alpha(alpha)
    if s < 1:
        raise ValueError("hidden lower bound needs s >= 1")
    c1, c2 = _thm4_constants(b)
    m = group_family_size(n, c1, c2)
    if m <= 1.0:
        raise ValueError(f"hypothesis count {m:.3g} too small for a lower bound")
    denom = ((1 - (1 - p) ** d) / d) ** 2 * (1 - p) ** (s - 1) * math.log1p(-p_min)
    x = -math.log(m) / denom
    return BoundResult("THM4", math.floor(x), x, _minimax_floor(m, alpha), {"M": m, "c1": c1, "c2": c2})


def _robust_eps(b: BoundInputs) -> float:
    d, p, c3 = _need(b, "d", "p", "c3")
    _check_prob("p", p)
    if not 0.0 <= b.q_low < b.q_up <= 1.0:
        raise ValueError("sensing bounds need 0 <= q_low < q_up <= 1")
    if c3 <= 1.0:
        raise ValueError("assumption 2 violated: c3 must exceed 1 for a positive threshold")
    if b.q_up < c3 * d**2 * b.q_low:
        raise ValueError("assumption 2 violated: q_up < c3 d^2 q_low")
    return p**2 * b.q_up * (1 - 1 / c3) / (2 * d**2)


def _thm5(b: BoundInputs) -> BoundResult:
    n, delta = _need(b, "n", "delta")
    _check_prob("delta", delta)
    eps = _robust_eps(b)
    x = (math.log(n) + 0.5 * math.log(1.0 / delta)) / eps**2
    return BoundResult("THM5", _ceil(x), x, aux={"epsilon": eps})


def _thm6(b: BoundInputs) -> BoundResult:
    n, d, s, p, p_min, gamma = _need(b, "n", "d", "s", "p", "p_min", "gamma")
    _check_prob("p_min", p_min), _check_prob("gamma", gamma)
    if not 0.0 <= b.p_empty < p_min:
        raise ValueError("assumption 3 violated: need 0 <= p_empty < p_min")
    eps = _robust_eps(b)
    delta = (p_min + b.p_empty) / 2
    delta_w = ((p_min - b.p_empty) * (1 - p) ** s * (1 - b.q_low) ** d * p**2
               / ((1 + delta) * d**2))
    k_direct = (math.log(n) + 0.5 * math.log(2.0 / gamma)) / eps**2
    k_hidden = 2.0 / delta_w**2 * ((s + 2) * math.log(n) + math.log(4.0 / gamma))
    x = max(k_direct, k_hidden)
    return BoundResult("THM6", _ceil(x), x, aux={
        "epsilon": eps, "delta": delta, "delta_w": delta_w,
        "k_direct": k_direct, "k_hidden": k_hidden})


_DISPATCH = {"THM1": _thm1, "THM2": _thm2, "THM3": _thm3,
             "THM4": _thm4, "THM5": _thm5, "THM6": _thm6}


def sample_complexity(which: str, inputs: BoundInputs) -> BoundResult:
    key = which.upper()
    if key not in _DISPATCH:
        raise ValueError(f"unknown theorem {which!r}; choose from {', '.join(THEOREMS)}")
    return _DISPATCH[key](inputs)


# -- distributions -------------------------------------------------------------

def clique_pattern_dist(p: float, m: int) -> np.ndarray:
    """Activity distribution of an isolated m-clique: ``[P(idle), P(node 1), ..., P(node m)]``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} out of range")
    if m < 1:
        raise ValueError("clique size must be at least 1")
    idle = (1.0 - p) ** m
    out = np.full(m + 1, (1.0 - idle) / m)
    out[0] = idle
    return out


def backoff_order_prob(a: int, b: int, m: int) -> Fraction:
    """P(i precedes all a of its neighbours and j precedes the b neighbours
    of j that are not neighbours of i), with m = |neighbourhood union|.

    Because the two groups partition the union, m must equal a + b.
    """
    if a < 0 or b < 0:
        raise ValueError("neighbourhood sizes must be non-negative")
    if m != a + b:
        raise ValueError(f"infeasible sizes: union of disjoint groups of {a} and {b} cannot have {m} nodes")
    return Fraction(math.comb(m + 2, a + 1) * math.factorial(a) * math.factorial(b),
                    math.factorial(m + 2))


def beta_coefficients(p: float, d: int) -> tuple[float, float, float]:
    """(q, beta1, beta2) for two (d-1)-cliques joined by one extra edge.

    ``beta1`` is the probability shifted onto each of the two patterns in
    which only one endpoint of the new edge transmits and the other clique is
    idle; ``beta2`` is the probability shifted onto each of the 2(d-2)
    patterns in which one endpoint transmits alongside another member of the
    other clique.  Together they absorb the joint pattern mass q^2.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if not 0.0 <= p < 1.0:
        raise ValueError(f"p={p} out of range")
    q = (1.0 - (1.0 - p) ** (d - 1)) / (d - 1)
    series = sum((d - l - 1) * (1.0 - p) ** l for l in range(d - 1))
    beta1 = series * p**2 * (1.0 - p) ** (d - 2) / (d * (d - 1))
    beta2 = 0.0 if d == 2 else (q * q - 2.0 * beta1) / (2.0 * (d - 2))
    return q, beta1, beta2


def kl_direct_pair(p: float, d: int) -> tuple[float, float]:
    """(KL divergence between the perturbed and base clique laws, its upper bound)."""
    if d < 3:
        raise ValueError("need d >= 3")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p={p} out of range")
    q, beta1, beta2 = beta_coefficients(p, d)
    base1 = q * (1.0 - p) ** (d - 1)
    t1 = base1 + beta1
    t2 = q * q + beta2
    exact = 2.0 * t1 * math.log(t1 / base1) + 2.0 * (d - 2) * t2 * math.log(t2 / (q * q))
    upper = (2.0 + 1.0 / (1.0 - p)) / (d - 1) ** 2
    assert exact <= upper + 1e-12, "KL exceeds its closed-form bound"
    return exact, upper


# -- graph families ------------------------------------------------------------

def clique_partition(n: int, size: int) -> list[list[int]]:
    """Contiguous blocks of ``size`` nodes; the last block holds the remainder."""
    return [list(range(a, min(a + size, n))) for a in range(0, n, size)]


def _clique_edges(members) -> set:
    return {(a, b) for x, a in enumerate(members) for b in members[x + 1:]}


def gen_clique_family(n: int, d: int):
    """Base graph of disjoint (d-1)-cliques and ``n`` one-edge perturbations."""
    if n < 5:
        raise ValueError("clique family needs n >= 5")
    if d < 2 or d - 1 > (3 * n - math.sqrt(n * n + 16 * n)) / 4:
        raise ValueError(f"clique family infeasible for n={n}, d={d}")
    size = d - 1
    cliques = clique_partition(n, size)
    m0 = n // size
    edges = set()
    for c in cliques:
        edges |= _clique_edges(c)
    base = InterferenceGraph(n, frozenset(edges))
    which = {v: ci for ci, c in enumerate(cliques) for v in c}
    cross = [(u, v) for u in range(m0 * size) for v in range(u + 1, m0 * size) if which[u] != which[v]]
    if len(cross) < n:
        raise ValueError("not enough cross-clique pairs for n perturbations")
    perturbed = [InterferenceGraph(n, frozenset(edges | {e})) for e in cross[:n]]
    return base, perturbed


def gen_group_family(n: int, d: int, s: int, p_min: float,
                     c1: float | None = None, c2: float | None = None):
    """Groups of two d-cliques plus s-1 detached nodes, with non-compounding
    hidden edges of weight ``p_min``; returns (base graph, perturbations).

    Each clique node is hidden-interfered by its group's detached nodes and
    by the lowest-index node of the opposite clique.  Each perturbation
    removes one of the cross-clique hidden edges.  Nodes beyond the last
    complete group are isolated.
    """
    if d < 1 or s < 1:
        raise ValueError("need d >= 1 and s >= 1")
    if not 0.0 < p_min <= 1.0:
        raise ValueError("p_min out of range")
    c1, c2 = _thm4_constants(BoundInputs(n=n, d=d, s=s, c1=c1, c2=c2))
    g = 2 * d + s - 1
    ngroups = n // g
    if ngroups < 1:
        raise ValueError(f"n={n} too small for a group of {g} nodes")
    direct, hidden, cross = set(), {}, []
    for k in range(ngroups):
        b = k * g
        A = list(range(b, b + d))
        B = list(range(b + d, b + 2 * d))
        atoms = list(range(b + 2 * d, b + g))
        direct |= _clique_edges(A) | _clique_edges(B)
        for mine, other in ((A, B), (B, A)):
            for u in mine:
                for a in atoms:
                    hidden[(a, u)] = p_min
                hidden[(other[0], u)] = p_min
                cross.append((other[0], u))
    m = int(math.floor(group_family_size(n, c1, c2) + 1e-9))
    if m > len(cross):
        raise ValueError(f"only {len(cross)} cross-clique edges for {m} perturbations")
    base = InterferenceGraph(n, frozenset(direct), hidden, non_compounding=True)
    cross.sort()
    perturbed = []
    for e in cross[:m]:
        h = dict(hidden)
        del h[e]
        perturbed.append(InterferenceGraph(n, frozenset(direct), h, non_compounding=True))
    return base, perturbed


def random_graph(n: int, d: int, s: int, p_min: float, rng: np.random.Generator,
                 p_max: float = 1.0, edge_prob: float = 0.5, hidden_prob: float = 0.7,
                 fade: float = 0.0) -> InterferenceGraph:
    """Random graph obeying degree <= d-1, hidden in-degree <= s and p_ij in [p_min, p_max]."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    deg = np.zeros(n, dtype=int)
    direct = set()
    for i, j in pairs:
        if deg[i] < d - 1 and deg[j] < d - 1 and rng.random() < edge_prob:
            direct.add((i, j))
            deg[i] += 1
            deg[j] += 1
    hidden = {}
    for j in range(n):
        cand = [i for i in range(n) if i != j and upair(i, j) not in direct]
        rng.shuffle(cand)
        for i in cand[:s]:
            if rng.random() < hidden_prob:
                hidden[(int(i), j)] = float(rng.uniform(p_min, p_max))
    return InterferenceGraph(n, frozenset(direct), hidden, fade_prob=(fade,) * n)


def params_for(graph: InterferenceGraph, **kw) -> ModelParams:
    """Smallest degree caps consistent with ``graph``."""
    d = max(graph.max_degree + 1, 1)
    s = graph.max_hidden_in_degree
    return ModelParams(d=d, s=s, **kw)


__all__ = [
    "THEOREMS", "BoundInputs", "BoundResult", "sample_complexity", "group_family_size",
    "clique_pattern_dist", "backoff_order_prob", "beta_coefficients", "kl_direct_pair",
    "clique_partition", "gen_clique_family", "gen_group_family", "random_graph", "params_for",
]
