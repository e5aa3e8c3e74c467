import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import make_trace
from ifgraph.direct import (cooccurrence, cooccurrence_counts, estimate_direct_robust,
                            estimate_direct_static, first_coactivation, robust_epsilon)
from ifgraph.model import InterferenceGraph, ModelParams, complete_pairs
from ifgraph.sim import sample_trace
from ifgraph.theory import random_graph


class TestCooccurrence:
    def test_half(self):
        assert cooccurrence(make_trace([[1, 1], [0, 0]]))[0, 1] == 0.5

    def test_all_zero(self):
        I = cooccurrence(make_trace(np.zeros((5, 4))))
        assert not I[~np.eye(4, dtype=bool)].any()

    def test_three_rows(self):
        I = cooccurrence(make_trace([[1, 1, 0], [1, 0, 1], [1, 1, 1]]))
        assert I[0, 1] == pytest.approx(2 / 3)
        assert I[0, 2] == pytest.approx(2 / 3)
        assert I[1, 2] == pytest.approx(1 / 3)
        assert np.array_equal(I, I.T)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.lists(st.integers(0, 1), min_size=4, max_size=4), min_size=1, max_size=30))
    def test_counts_match_loop(self, rows):
        X = np.array(rows)
        C = cooccurrence_counts(make_trace(X))
        for i in range(4):
            for j in range(4):
                assert C[i, j] == sum(r[i] and r[j] for r in rows)


class TestStatic:
    def test_small(self):
        est = estimate_direct_static(make_trace([[1, 1, 0], [0, 1, 1]]))
        assert est.direct_edges == {(0, 2)}

    def test_nothing_eliminated(self):
        est = estimate_direct_static(make_trace(np.eye(5, dtype=int)))
        assert est.direct_edges == complete_pairs(5)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_superset_of_truth(self, seed):
        # in the static model true neighbours never co-transmit
        g = random_graph(10, 4, 1, 0.5, np.random.default_rng(seed))
        t = sample_trace(g, ModelParams(d=4), 300, seed)
        assert g.direct_edges <= estimate_direct_static(t).direct_edges

    def test_monotone_in_k(self):
        g = random_graph(10, 3, 1, 0.5, np.random.default_rng(0))
        t = sample_trace(g, ModelParams(d=3), 2000, 0)
        prev = None
        for k in (10, 50, 200, 1000, 2000):
            cur = estimate_direct_static(t.head(k)).direct_edges
            if prev is not None:
                assert cur <= prev
            prev = cur


class TestRobust:
    def test_epsilon(self):
        assert robust_epsilon(ModelParams(p=0.5, q_up=0.8, c3=2, d=2)) == pytest.approx(0.0125)

    def test_epsilon_needs_c3_above_one(self):
        with pytest.raises(ValueError):
            robust_epsilon(ModelParams(c3=1.0))

    def test_boundary_inclusive(self):
        # one co-activation in four sessions: Î = 0.25 exactly
        t = make_trace([[1, 1], [1, 0], [0, 1], [0, 0]])
        assert estimate_direct_robust(t, 0.25).direct_edges == frozenset()
        assert estimate_direct_robust(t, 0.2500001).direct_edges == {(0, 1)}

    def test_never_removed_when_sensing_perfect(self):
        g = InterferenceGraph(2, {(0, 1)}, sensing_fail={(0, 1): 0.0})
        t = sample_trace(g, ModelParams(p=0.9), 20_000, 1)
        assert estimate_direct_robust(t, 1e-6).direct_edges == {(0, 1)}

    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
    def test_rejects_threshold(self, eps):
        with pytest.raises(ValueError):
            estimate_direct_robust(make_trace([[1, 1]]), eps)


class TestFirstCoactivation:
    def test_indices(self):
        X = np.array([[1, 0, 1], [1, 1, 0], [1, 1, 1]])
        F = first_coactivation(X)
        assert F[0, 1] == 2 and F[0, 2] == 1 and F[1, 2] == 3

    def test_blockwise_equals_whole(self):
        X = np.random.default_rng(0).integers(0, 2, (100, 6)) * (np.random.default_rng(1).random((100, 6)) < 0.3)
        whole = first_coactivation(X)
        part = first_coactivation(X[:40])
        part = first_coactivation(X[40:], offset=40, known=part)
        assert np.array_equal(whole, part)
