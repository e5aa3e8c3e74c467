import pickle

import numpy as np
import pytest

from ifgraph.model import (EstimationResult, Feedback, InterferenceGraph, ModelParams,
                           SessionTrace, edit_distance, graph_equal, upair)
from ifgraph.theory import gen_clique_family


def test_upair_canonical():
    assert upair(3, 1) == (1, 3)
    assert upair(1, 3) == (1, 3)


class TestModelParams:
    def test_defaults_valid(self):
        ModelParams()

    @pytest.mark.parametrize("kw", [
        {"p": 0.0}, {"p": 1.0}, {"W": 0.0}, {"d": 0}, {"s": -1}, {"p_min": 0.0},
        {"q_low": 0.5, "q_up": 0.5}, {"channel_mode": "foo"},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            ModelParams(**kw)

    def test_random_mode_assumptions(self):
        ModelParams(channel_mode="random", d=2, q_low=0.01, q_up=0.8, p_min=0.6, p_empty=0.1)
        with pytest.raises(ValueError, match="assumption 2"):
            ModelParams(channel_mode="random", d=3, q_low=0.1, q_up=0.8)
        with pytest.raises(ValueError, match="assumption 3"):
            ModelParams(channel_mode="random", p_min=0.5, p_empty=0.5)

    def test_derived_thresholds(self):
        par = ModelParams(p=0.5, q_up=0.8, c3=2, d=2, p_min=0.6, p_empty=0.1)
        assert par.epsilon == pytest.approx(0.0125)
        assert par.hidden_threshold == pytest.approx(0.35)


class TestInterferenceGraph:
    def test_normalises_pairs(self):
        g = InterferenceGraph(3, {(2, 0)})
        assert g.direct_edges == {(0, 2)}
        assert g.neighbors(0) == {2}

    @pytest.mark.parametrize("kw", [
        {"direct_edges": {(0, 0)}},
        {"direct_edges": {(0, 3)}},
        {"hidden_edges": {(0, 1): 0.0}},
        {"hidden_edges": {(0, 1): 1.5}},
        {"direct_edges": {(0, 1)}, "hidden_edges": {(1, 0): 0.5}},
        {"fade_prob": (0.1,)},
        {"fade_prob": (1.0, 0.0, 0.0)},
        {"sensing_fail": {(0, 1): 0.2, (1, 0): 0.3}},
    ])
    def test_structural_errors(self, kw):
        with pytest.raises(ValueError):
            InterferenceGraph(3, **kw)

    def test_params_validation(self):
        par = ModelParams(d=2, s=1, p_min=0.5)
        with pytest.raises(ValueError, match="degree"):
            InterferenceGraph(3, {(0, 1), (1, 2)}, params=par)
        with pytest.raises(ValueError, match="in-degree"):
            InterferenceGraph(3, hidden_edges={(0, 2): 0.6, (1, 2): 0.6}, params=par)
        with pytest.raises(ValueError, match="p_min"):
            InterferenceGraph(3, hidden_edges={(0, 2): 0.4}, params=par)
        with pytest.raises(ValueError, match="static"):
            InterferenceGraph(3, fade_prob=(0.1, 0, 0), params=par)

    def test_default_sensing(self):
        g = InterferenceGraph(3, {(0, 1)}, sensing_fail={(1, 2): 0.9})
        assert g.q(0, 1) == 0.0 and g.q(0, 2) == 1.0 and g.q(2, 1) == 0.9
        Q = g.sensing_matrix()
        assert np.allclose(Q, Q.T) and np.all(np.diag(Q) == 0)

    def test_queries(self):
        g = InterferenceGraph(4, {(0, 1), (1, 2)}, {(3, 1): 0.7, (0, 2): 0.5})
        assert list(g.degrees()) == [1, 2, 1, 0]
        assert list(g.hidden_in_degrees()) == [0, 1, 1, 0]
        assert g.hidden_sources(1) == {3}
        assert g.p(3, 1) == 0.7 and g.p(1, 3) == 0.0
        assert g.max_degree == 2 and g.max_hidden_in_degree == 1

    def test_pickle_and_replace(self):
        g = InterferenceGraph(3, {(0, 1)}, {(2, 0): 0.5}, non_compounding=True)
        assert pickle.loads(pickle.dumps(g)) == g
        h = g.replace(hidden_edges={})
        assert h != g and h.direct_edges == g.direct_edges


class TestGraphEqual:
    def test_reflexive(self):
        g = InterferenceGraph(3, {(0, 1)}, {(2, 0): 0.5})
        assert graph_equal(g, g)

    def test_direct_differs(self):
        assert not graph_equal(InterferenceGraph(2, {(0, 1)}), InterferenceGraph(2))

    def test_direction_matters(self):
        a = InterferenceGraph(2, hidden_edges={(0, 1): 0.5})
        b = InterferenceGraph(2, hidden_edges={(1, 0): 0.5})
        assert not graph_equal(a, b)

    def test_weights_ignored(self):
        a = InterferenceGraph(2, hidden_edges={(0, 1): 0.5})
        b = EstimationResult(2, frozenset(), {(0, 1): 0.93})
        assert graph_equal(a, b)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            graph_equal(InterferenceGraph(2), InterferenceGraph(3))


class TestEditDistance:
    def test_clique_family_distances(self):
        base, pert = gen_clique_family(20, 6)
        assert all(edit_distance(base, g) == 1 for g in pert)
        assert edit_distance(pert[0], pert[1]) == 2
        assert edit_distance(pert[3], pert[17]) == 2

    def test_zero(self):
        g = InterferenceGraph(4, {(0, 1)}, {(2, 3): 0.5})
        assert edit_distance(g, g) == 0


class TestSessionTrace:
    def test_idle_consistency(self):
        with pytest.raises(ValueError):
            SessionTrace(np.array([[1, 0]]), np.array([[Feedback.ACK, Feedback.ACK]]))
        with pytest.raises(ValueError):
            SessionTrace(np.array([[0]]), np.array([[Feedback.ACK]]))

    def test_readonly_and_head(self):
        t = SessionTrace(np.array([[1, 0], [1, 1]]), np.array([[1, -1], [0, 1]]))
        assert t.k == 2 and t.n == 2
        with pytest.raises(ValueError):
            t.X[0, 0] = 0
        assert t.head(1) == SessionTrace(np.array([[1, 0]]), np.array([[1, -1]]))
        assert t.nack.tolist() == [[False, False], [True, False]]
