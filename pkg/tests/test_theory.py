import itertools
import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest

from ifgraph.model import InterferenceGraph, ModelParams, edit_distance
from ifgraph.sim import sample_trace
from ifgraph.theory import (BoundInputs, backoff_order_prob, beta_coefficients,
                            clique_pattern_dist, gen_clique_family, gen_group_family,
                            kl_direct_pair, random_graph, sample_complexity)


# -- oracles -----------------------------------------------------------------------

def backoff_by_enumeration(a, b):
    """P(i first among {i} ∪ A and j first among {j} ∪ B) over uniform orderings.

    A and B members are interchangeable, so the distinct arrangements of the
    multiset {i, j, A^a, B^b} are equiprobable and suffice.
    """
    labels = ["i", "j"] + ["A"] * a + ["B"] * b
    good = total = 0
    for arr in set(itertools.permutations(labels)):
        total += 1
        first_ia = next(x for x in arr if x in ("i", "A"))
        first_jb = next(x for x in arr if x in ("j", "B"))
        good += first_ia == "i" and first_jb == "j"
    return Fraction(good, total)


def two_clique_laws(p, d):
    """Exact activity laws of two (d-1)-cliques without / with the edge (0, d-1)."""
    m = d - 1
    n = 2 * m
    base = {(u, v) for C in (range(m), range(m, n)) for u in C for v in C if u < v}
    laws = []
    for edges in (base, base | {(0, m)}):
        P = defaultdict(float)
        for Q in itertools.product((0, 1), repeat=n):
            w = math.prod(p if x else 1 - p for x in Q) / math.factorial(n)
            for order in itertools.permutations(range(n)):
                on = []
                for i in order:
                    if Q[i] and not any((min(i, u), max(i, u)) in edges for u in on):
                        on.append(i)
                P[tuple(sorted(on))] += w
        laws.append(P)
    return laws


# -- bounds --------------------------------------------------------------------------

class TestBounds:
    def test_thm1(self):
        r = sample_complexity("THM1", BoundInputs(n=20, d=3, p=0.5, delta=0.05))
        x = (math.log(math.comb(20, 2)) + math.log(20)) / -math.log(1 - 0.25 / 9)
        assert r.k == 293 == math.ceil(x)

    def test_thm3(self):
        r = sample_complexity("THM3", BoundInputs(n=20, s=2, d=3, p=0.5, p_min=0.5, delta=0.05))
        assert r.k == 1922

    def test_thm5(self):
        r = sample_complexity("THM5", BoundInputs(n=20, p=0.5, q_up=0.8, c3=2, d=2, delta=0.05))
        assert r.aux["epsilon"] == pytest.approx(0.0125)
        assert r.k == 28760

    def test_thm6_components(self):
        b = BoundInputs(n=8, d=2, s=1, p=0.5, p_min=0.6, p_empty=0.1, q_low=0.0, q_up=1.0,
                        c3=2.0, gamma=0.2)
        r = sample_complexity("THM6", b)
        assert r.aux["delta"] == pytest.approx(0.35)
        assert r.k == math.ceil(max(r.aux["k_direct"], r.aux["k_hidden"]))

    def test_thm2_threshold_and_floor(self):
        r = sample_complexity("THM2", BoundInputs(n=20, d=6, p=0.5, alpha_tsybakov=0.1))
        assert r.threshold == pytest.approx(0.1 * 25 * math.log(20) / 4)
        assert 0 < r.floor < 1

    def test_thm4_family_size(self):
        r = sample_complexity("THM4", BoundInputs(n=22, d=5, s=2, p=0.5, p_min=0.5,
                                                  alpha_tsybakov=0.1))
        assert r.aux["M"] == pytest.approx(10.0)

    @pytest.mark.parametrize("which,kw,match", [
        ("THM2", {"n": 20, "d": 6, "p": 0.5, "alpha_tsybakov": 0.2}, "alpha"),
        ("THM2", {"n": 10, "d": 9, "p": 0.5, "alpha_tsybakov": 0.1}, "infeasible"),
        ("THM5", {"n": 20, "d": 3, "p": 0.5, "q_low": 0.1, "q_up": 0.5, "c3": 2, "delta": 0.1}, "assumption 2"),
        ("THM6", {"n": 8, "d": 2, "s": 1, "p": 0.5, "p_min": 0.3, "p_empty": 0.4, "c3": 2, "gamma": 0.2}, "assumption 3"),
        ("THM1", {"n": 20, "d": 3}, "missing"),
        ("THM9", {}, "unknown"),
    ])
    def test_invalid(self, which, kw, match):
        with pytest.raises(ValueError, match=match):
            sample_complexity(which, BoundInputs(**kw))

    def test_thm1_scaling(self):
        def k(n, d):
            return sample_complexity("THM1", BoundInputs(n=n, d=d, p=0.5, delta=0.05)).threshold
        # quadratic in d once p^2/d^2 is small
        for d in (10, 20, 40):
            assert k(100, 2 * d) / k(100, d) == pytest.approx(4.0, rel=0.1)
        # logarithmic in n: doubling n adds a constant, ratios shrink towards 1
        ratios = [k(2 * n, 5) / k(n, 5) for n in (50, 500, 5000)]
        assert all(1 < r < 1.25 for r in ratios) and ratios == sorted(ratios, reverse=True)


# -- distributions -------------------------------------------------------------------

class TestCliquePattern:
    def test_two_clique(self):
        assert clique_pattern_dist(0.5, 2) == pytest.approx([0.25, 0.375, 0.375])

    def test_singleton_and_limit(self):
        assert clique_pattern_dist(0.3, 1) == pytest.approx([0.7, 0.3])
        assert clique_pattern_dist(0.0, 4)[0] == 1.0

    def test_sums_to_one(self):
        for m in range(1, 8):
            assert clique_pattern_dist(0.37, m).sum() == pytest.approx(1.0)


class TestBackoff:
    def test_examples(self):
        assert backoff_order_prob(0, 0, 0) == 1
        assert backoff_order_prob(1, 1, 2) == Fraction(1, 4)
        assert backoff_order_prob(2, 1, 3) == Fraction(1, 6)

    def test_full_permutation_small(self):
        # plain enumeration of all 4! and 5! orderings
        for a, b, size in ((1, 1, 4), (2, 1, 5)):
            nodes = ["i", "j"] + [f"A{x}" for x in range(a)] + [f"B{x}" for x in range(b)]
            good = sum(
                min(o.index("i"), *(o.index(f"A{x}") for x in range(a))) == o.index("i")
                and min(o.index("j"), *(o.index(f"B{x}") for x in range(b))) == o.index("j")
                for o in itertools.permutations(nodes))
            assert backoff_order_prob(a, b, a + b) == Fraction(good, math.factorial(size))

    @pytest.mark.parametrize("a,b", [(a, b) for a in range(5) for b in range(5)])
    def test_matches_enumeration(self, a, b):
        v = backoff_order_prob(a, b, a + b)
        assert v == backoff_by_enumeration(a, b)
        assert v >= Fraction(1, (a + 1) * (b + 1))

    @pytest.mark.parametrize("a,b,m", [(1, 1, 3), (2, 0, 1), (-1, 0, 0)])
    def test_infeasible(self, a, b, m):
        with pytest.raises(ValueError):
            backoff_order_prob(a, b, m)

    def test_coactivation_lower_bound(self):
        # nonadjacent i=0, j=1 with disjoint neighbourhoods {2,3} and {4}
        g = InterferenceGraph(5, {(0, 2), (0, 3), (1, 4)})
        k = 100_000
        X = sample_trace(g, ModelParams(p=0.5, d=3), k, 5).X
        freq = np.mean(X[:, 0] & X[:, 1])
        bound = 0.25 * float(backoff_order_prob(2, 1, 3))
        assert freq >= bound - 3 * math.sqrt(bound * (1 - bound) / k)


class TestBeta:
    def test_examples(self):
        assert beta_coefficients(0.5, 2) == pytest.approx((0.5, 0.125, 0.0))
        q, b1, b2 = beta_coefficients(0.5, 3)
        assert (q, b1) == pytest.approx((0.375, 25 / 480))
        assert b2 == pytest.approx(0.0182292, abs=1e-7)
        assert beta_coefficients(0.0, 5) == (0.0, 0.0, 0.0)

    def test_identity(self):
        for d in range(3, 11):
            for p in (0.3, 0.5, 0.7):
                q, b1, b2 = beta_coefficients(p, d)
                assert 2 * b1 + 2 * (d - 2) * b2 == pytest.approx(q * q, rel=1e-12)

    @pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_against_enumerated_laws(self, p, d):
        P0, P1 = two_clique_laws(p, d)
        m = d - 1
        q, b1, b2 = beta_coefficients(p, d)
        assert P0[(0,)] == pytest.approx(q * (1 - p) ** m, abs=1e-12)
        assert P1[(0,)] - P0[(0,)] == pytest.approx(b1, abs=1e-12)
        assert P1[(m,)] - P0[(m,)] == pytest.approx(b1, abs=1e-12)
        assert P1.get((0, m), 0.0) == 0.0
        for other in range(m + 1, 2 * m):
            assert P1[(0, other)] - P0[(0, other)] == pytest.approx(b2, abs=1e-12)
        if d >= 3:
            kl = sum(v * math.log(v / P0[k]) for k, v in P1.items() if v > 0)
            assert kl_direct_pair(p, d)[0] == pytest.approx(kl, rel=1e-9)

    def test_d_too_small(self):
        with pytest.raises(ValueError):
            beta_coefficients(0.5, 1)
        with pytest.raises(ValueError):
            kl_direct_pair(0.5, 2)


class TestKL:
    def test_upper_bounds(self):
        assert kl_direct_pair(0.5, 3)[1] == pytest.approx(1.0)
        assert kl_direct_pair(0.5, 5)[1] == pytest.approx(0.25)

    def test_within_bound(self):
        for d in range(3, 11):
            for p in (0.3, 0.5, 0.7):
                kl, ub = kl_direct_pair(p, d)
                assert 0 <= kl <= ub


# -- families --------------------------------------------------------------------------

class TestFamilies:
    def test_clique_family_shape(self):
        base, pert = gen_clique_family(20, 6)
        assert len(pert) == 20
        assert base.max_degree == 4 and len(base.direct_edges) == 4 * 10
        assert all(edit_distance(base, g) == 1 for g in pert)
        for g in [base] + pert:
            g.validate(ModelParams(d=6))

    def test_clique_family_cross_pairs(self):
        # C(m0, 2) (d-1)^2 cross pairs available
        assert math.comb(4, 2) * 25 == 150 >= 20

    def test_group_family_shape(self):
        base, pert = gen_group_family(22, 5, 2, 0.5)
        assert base.non_compounding
        assert len(pert) == 10
        indeg = base.hidden_in_degrees()
        clique_nodes = [v for g0 in (0, 11) for v in range(g0, g0 + 10)]
        assert all(indeg[v] == 2 for v in clique_nodes)
        assert all(edit_distance(base, g) == 1 for g in pert)
        for g in [base] + pert:
            g.validate(ModelParams(d=5, s=2, p_min=0.5))
            assert not ({tuple(sorted(e)) for e in g.hidden_edges} & g.direct_edges)

    def test_infeasible(self):
        with pytest.raises(ValueError):
            gen_clique_family(6, 6)
        with pytest.raises(ValueError):
            gen_group_family(5, 5, 2, 0.5)

    def test_random_graph_respects_caps(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            g = random_graph(15, 4, 2, 0.6, rng)
            g.validate(ModelParams(d=4, s=2, p_min=0.6))
