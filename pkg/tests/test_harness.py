import json

import numpy as np
import pytest

from ifgraph.direct import estimate_direct_static
from ifgraph.harness import (ExperimentConfig, aggregate, derive_seed, measure_recovery_time,
                             run_experiment, topology_filter)
from ifgraph.hidden import estimate_hidden_static
from ifgraph.model import InterferenceGraph, ModelParams
from ifgraph.sim import sample_trace
from ifgraph.theory import BoundInputs, gen_clique_family, random_graph, sample_complexity


def brute_first_k(graph, params, max_k, seed, estimate, ks):
    """First k in ``ks`` at which re-estimating from the prefix gives the truth."""
    t = sample_trace(graph, params, max_k, seed)
    for k in ks:
        if estimate(t.head(k)):
            return k
    return None


class TestRecovery:
    def test_nonadjacent_pair_full_load(self):
        rec = measure_recovery_time(InterferenceGraph(2), None, "direct-static", 100, 1, 0,
                                    node_p=np.ones(2))
        assert rec.k == 1 and rec.stable

    def test_adjacent_pair(self):
        rec = measure_recovery_time(InterferenceGraph(2, {(0, 1)}), ModelParams(), "direct-static",
                                    100, 1, 0)
        assert rec.k == 1

    @pytest.mark.parametrize("seed", range(6))
    def test_direct_static_exact_equals_prefix_search(self, seed):
        g = random_graph(7, 3, 1, 0.5, np.random.default_rng(seed))
        par = ModelParams(d=3)
        rec = measure_recovery_time(g, par, "direct-static", 600, 1, seed)
        want = brute_first_k(g, par, 600, seed,
                             lambda t: estimate_direct_static(t).direct_edges == g.direct_edges,
                             range(1, 601))
        assert rec.k == want

    @pytest.mark.parametrize("seed", range(3))
    def test_hidden_static_on_check_grid(self, seed):
        g = random_graph(7, 3, 1, 0.8, np.random.default_rng(seed + 10))
        par = ModelParams(d=3, s=1)
        rec = measure_recovery_time(g, par, "hidden-static", 3000, 50, seed)

        def ok(t):
            est = estimate_hidden_static(t, estimate_direct_static(t), 1)
            return set(est.hidden_edges) == set(g.hidden_edges)
        assert rec.k == brute_first_k(g, par, 3000, seed, ok, range(50, 3001, 50))

    def test_censored(self):
        rec = measure_recovery_time(InterferenceGraph(3), ModelParams(p=0.01), "direct-static", 5, 1, 0)
        assert rec.censored and rec.k is None and not rec.stable

    def test_unknown_estimator(self):
        with pytest.raises(ValueError):
            measure_recovery_time(InterferenceGraph(2), ModelParams(), "magic", 10, 1, 0)

    def test_clique_median_within_budget(self):
        base, _ = gen_clique_family(20, 6)
        budget = sample_complexity("THM1", BoundInputs(n=20, d=6, p=0.5, delta=0.5)).k
        ks = [measure_recovery_time(base, ModelParams(d=6), "direct-static", 10 * budget, 1, s).k
              for s in range(41)]
        assert np.median(ks) <= budget


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig(kind="hidden-static", values=(20, 24), trials=3, target_s=2, eps=0.01)
        again = ExperimentConfig.from_text(cfg.to_text())
        assert again == cfg

    @pytest.mark.parametrize("text,match", [
        ("trials=0", "trials"),
        ("kind=nope", "kind"),
        ("colour=red", "unknown key"),
        ("just words", "key=value"),
        ("source=geo\nsweep=n\nrows=4\nvalues=30", "multiples"),
    ])
    def test_rejects(self, text, match):
        with pytest.raises(ValueError, match=match):
            ExperimentConfig.from_text(text)

    def test_comments_and_blank_lines(self):
        cfg = ExperimentConfig.from_text("# sweep\n\nvalues = 10, 12  # two points\ntrials=2\n")
        assert cfg.values == (10, 12) and cfg.trials == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            ExperimentConfig.from_file(tmp_path / "absent.cfg")


class TestFilter:
    def test_keeps_match(self):
        g = InterferenceGraph(7, {(0, i) for i in range(1, 6)}, {(6, 1): 0.5, (2, 1): 0.5})
        assert g.max_degree == 5 and g.max_hidden_in_degree == 2
        kept, rate = topology_filter([g], 5, 2)
        assert kept == [g] and rate == 1.0

    def test_empty(self):
        assert topology_filter([], 5, 2) == ([], 0.0)

    def test_rejects_mismatch(self):
        kept, rate = topology_filter([InterferenceGraph(3, {(0, 1)})], 5, 2)
        assert kept == [] and rate == 0.0


class TestAggregate:
    def test_median_of_topology_means(self):
        rows = [{"sweep_value": 1, "topology_id": t, "trace_id": r, "recovery_k": k, "censored": False}
                for t, ks in enumerate([[1, 3], [10, 10], [5, 7]]) for r, k in enumerate(ks)]
        agg = aggregate(rows, 100)["1"]
        assert agg["median"] == 6.0 and agg["worst"] == 10.0 and agg["per_topology_mean"] == [2.0, 10.0, 6.0]

    def test_majority_censored_has_no_median(self):
        rows = [{"sweep_value": 1, "topology_id": 0, "trace_id": r, "recovery_k": 100,
                 "censored": r > 0} for r in range(3)]
        assert aggregate(rows, 100)["1"]["median"] is None


class TestRun:
    def test_derive_seed(self):
        assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
        assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)
        assert 0 <= derive_seed(5, 3) < 2**63

    def test_model_sweep(self, tmp_path):
        cfg = ExperimentConfig(values=(10, 12, 14, 16), trials=2, traces=2, d=3, max_k=5000,
                               out=str(tmp_path))
        res = run_experiment(cfg)
        lines = (tmp_path / "raw.csv").read_text().splitlines()
        assert lines[0] == "sweep_value,topology_id,trace_id,recovery_k,censored,stable"
        assert len(lines) == 1 + 4 * 2 * 2
        agg = json.loads((tmp_path / "aggregate.json").read_text())
        assert set(agg["aggregates"]) == {"10", "12", "14", "16"}
        assert res.aggregates["10"]["n_censored"] == 0

    def test_workers_do_not_change_output(self):
        cfg = ExperimentConfig(family="random", values=(8, 10), trials=2, traces=2, d=3, s=1,
                               kind="hidden-static", max_k=4000, check_interval=100)
        serial = run_experiment(cfg).raw_csv()
        cfg.workers = 2
        assert run_experiment(cfg).raw_csv() == serial

    def test_geo_selection_metadata(self):
        cfg = ExperimentConfig(source="geo", sweep="n", values=(8,), rows=2, trials=2, traces=1,
                               max_k=20_000, traffic="queued", interference_offset=8.0)
        res = run_experiment(cfg)
        sel = res.meta["selection"]["8"]
        assert sel["accepted"] == 2 and 0 < sel["acceptance_rate"] <= 1

    def test_bounds_table(self, tmp_path):
        cfg = ExperimentConfig(kind="bounds-table", values=(20, 40), d=3, s=2, out=str(tmp_path))
        run_experiment(cfg)
        text = (tmp_path / "bounds.csv").read_text().splitlines()
        assert text[0] == "sweep_value,theorem,k,threshold,floor,error"
        assert len(text) == 1 + 2 * 6
        assert text[1].startswith("20,THM1,")
