"""Experiment driver: recovery-time measurement over swept network families.

A run is fully determined by its configuration.  Every topology and trace
seed is derived from the master seed and the item's position in the work
list, so serial and pooled execution give byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import geo, theory
from .direct import estimate_direct_robust, first_coactivation
from .hidden import estimate_hidden_robust, estimate_hidden_static
from .model import InterferenceGraph, ModelParams, SessionTrace, upair
from .sim import BLOCK, iter_blocks

KINDS = ("direct-static", "direct-robust", "hidden-static", "hidden-robust", "bounds-table")
SOURCES = ("model", "geo")
SWEEPS = ("n", "d", "s", "cs_range")
FAMILIES = ("clique", "group", "random")
RAW_HEADER = ("sweep_value", "topology_id", "trace_id", "recovery_k", "censored", "stable")


@dataclass
class ExperimentConfig:
    """Flat experiment description; see README for the key reference."""

    kind: str = "direct-static"
    source: str = "model"
    sweep: str = "n"
    values: tuple = (20,)
    trials: int = 10
    traces: int = 5
    max_k: int = 100_000
    check_interval: int = 10
    seed: int = 0
    out: str | None = None
    workers: int = 1
    # statistical model
    family: str = "clique"
    n: int = 20
    d: int = 3
    s: int = 1
    p: float = 0.5
    W: float = 32.0
    p_min: float = 0.5
    p_empty: float = 0.0
    q_low: float = 0.0
    q_up: float = 1.0
    c3: float = 2.0
    fade: float = 0.0
    # estimator knobs
    eps: float | None = None
    s_cap: int | None = None
    delta: float = 0.05
    gamma: float = 0.1
    alpha_tsybakov: float = 0.1
    # geometry
    rows: int = 4
    cols: int = 8
    cell_side: float = 50.0
    clients_per_cell: int = 6
    cs_range: float = 70.0
    cs_ranges: tuple = (70.0, 80.0, 90.0, 100.0)
    interference_offset: float = 0.0
    channel: str = "static"
    traffic: str = "bernoulli"
    target_d: int | None = None
    target_s: int | None = None
    max_candidates: int = 20_000

    def __post_init__(self) -> None:
        self.values = tuple(self.values)
        self.cs_ranges = tuple(float(v) for v in self.cs_ranges)

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}, got {self.sweep!r}")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not self.values:
            raise ValueError("values: at least one sweep value required")
        if self.trials < 1 or self.traces < 1:
            raise ValueError("trials and traces must be >= 1")
        if self.check_interval < 1 or self.max_k < 1:
            raise ValueError("check_interval and max_k must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.channel not in ("static", "random") or self.traffic not in ("bernoulli", "queued"):
            raise ValueError("channel must be static|random and traffic bernoulli|queued")
        if self.source == "geo":
            if self.sweep == "n" and any(int(v) % self.rows for v in self.values):
                raise ValueError("geo n-sweep values must be multiples of rows")
            if self.sweep == "d" and self.target_s is None:
                raise ValueError("geo d-sweep needs target_s")
        if self.kind == "hidden-robust" or (self.kind == "direct-robust" and self.source == "geo"):
            if self.kind == "direct-robust" and self.eps is None:
                raise ValueError("direct-robust on geo networks needs eps")

    # -- flat text format ---------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
            key, val = (x.strip() for x in line.split("=", 1))
            if key not in types:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            kw[key] = _parse_value(key, val, types[key])
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
        return cls.from_text(text)

    def to_text(self) -> str:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(_fmt(x) for x in v)
            out.append(f"{f.name}={_fmt(v)}")
        return "\n".join(out) + "\n"

    def params(self, d: int | None = None, s: int | None = None) -> ModelParams:
        return ModelParams(p=self.p, W=self.W, d=d or self.d, s=self.s if s is None else s,
                           p_min=self.p_min, p_empty=self.p_empty, q_low=self.q_low,
                           q_up=self.q_up, c3=self.c3, channel_mode=self.channel)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(key: str, val: str, typ: str):
    typ = str(typ)
    if val.lower() in ("none", "") and "None" in typ:
        return None
    if "tuple" in typ:
        parts = [v.strip() for v in val.split(",") if v.strip()]
        return tuple(_number(p) for p in parts)
    if "int" in typ and "float" not in typ:
        try:
            return int(val)
        except ValueError:
            raise ValueError(f"{key}: expected an integer, got {val!r}") from None
    if "float" in typ:
        try:
            return float(val)
        except ValueError:
            raise ValueError(f"{key}: expected a number, got {val!r}") from None
    return val


def _number(s: str):
    try:
        return int(s)
    except ValueError:
        return float(s)


# -- seeds ---------------------------------------------------------------------

def derive_seed(master: int, *key: int) -> int:
    """Deterministic 63-bit seed for the work item at position ``key``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


# -- recovery time -------------------------------------------------------------

@dataclass(frozen=True)
class Recovery:
    """First k at which the estimate matched the truth; ``k`` is None when censored."""

    k: int | None
    stable: bool

    @property
    def censored(self) -> bool:
        return self.k is None


CENSORED = None


def _target_sets(kind: str, graph: InterferenceGraph):
    return graph.direct_edges if kind.startswith("direct") else frozenset(graph.hidden_edges)


def _estimate(kind: str, trace: SessionTrace, params: ModelParams | None, eps, s_cap):
    if kind == "direct-robust":
        return estimate_direct_robust(trace, eps).direct_edges
    if kind == "hidden-static":
        from .direct import estimate_direct_static
        return frozenset(estimate_hidden_static(trace, estimate_direct_static(trace), s_cap).hidden_edges)
    if kind == "hidden-robust":
        direct = estimate_direct_robust(trace, eps)
        return frozenset(estimate_hidden_robust(trace, direct, params, s=s_cap).hidden_edges)
    raise ValueError(f"unsupported estimator {kind!r}")


def _direct_static_recovery(graph, params, max_k, seed, sim_kw) -> Recovery:
    n = graph.n
    iu, ju = np.triu_indices(n, 1)
    is_edge = np.array([(int(a), int(b)) in graph.direct_edges for a, b in zip(iu, ju)], dtype=bool)
    may_collide = any(graph.q(i, j) > 0 for i, j in graph.direct_edges)
    first = None
    seen = 0
    k_rec = None
    for X, _ in iter_blocks(graph, params, seed, **sim_kw):
        take = min(BLOCK, max_k - seen)
        first = first_coactivation(X[:take], offset=seen, known=first)
        seen += take
        f = first[iu, ju]
        if k_rec is None and np.all(f[~is_edge] > 0):
            k_rec = int(f[~is_edge].max()) if (~is_edge).any() else 1
            if not may_collide:
                break
        if seen >= max_k:
            break
    f = first[iu, ju]
    fe = f[is_edge]
    if k_rec is None:
        return Recovery(CENSORED, False)
    if np.any((fe > 0) & (fe <= k_rec)):
        # a true edge was eliminated before the last non-edge: never equal
        return Recovery(CENSORED, False)
    return Recovery(k_rec, not np.any(fe > 0))


def measure_recovery_time(graph: InterferenceGraph, params: ModelParams | None, estimator: str,
                          max_k: int, check_interval: int, seed: int, *, eps: float | None = None,
                          s_cap: int | None = None, node_p=None, traffic: str = "bernoulli",
                          arrival_rates=None) -> Recovery:
    """Simulate sessions until the estimate first equals the truth (or ``max_k``).

    The static direct estimator only ever removes edges, so its first
    matching k is computed exactly from first co-activation times.  The other
    estimators are re-run every ``check_interval`` sessions; ``stable`` tells
    whether the estimate stayed correct at every later check up to ``max_k``.
    """
    sim_kw = dict(traffic=traffic, node_p=node_p, arrival_rates=arrival_rates)
    if estimator == "direct-static":
        return _direct_static_recovery(graph, params, max_k, seed, sim_kw)
    if estimator not in KINDS[1:4]:
        raise ValueError(f"unknown estimator {estimator!r}")
    if estimator in ("direct-robust", "hidden-robust") and eps is None:
        eps = params.epsilon
    if estimator.startswith("hidden") and s_cap is None:
        s_cap = params.s if params is not None else graph.max_hidden_in_degree
    target = _target_sets(estimator, graph)
    Xs, Ys = [], []
    seen = 0
    checks = list(range(check_interval, max_k + 1, check_interval))
    if not checks or checks[-1] != max_k:
        checks.append(max_k)
    ci = 0
    k_rec, stable = None, True
    X = Y = None
    for Xb, Yb in iter_blocks(graph, params, seed, **sim_kw):
        take = min(BLOCK, max_k - seen)
        Xs.append(Xb[:take])
        Ys.append(Yb[:take])
        seen += take
        X, Y = np.concatenate(Xs), np.concatenate(Ys)
        Xs, Ys = [X], [Y]
        while ci < len(checks) and checks[ci] <= seen:
            k = checks[ci]
            ci += 1
            ok = _estimate(estimator, SessionTrace(X[:k], Y[:k]), params, eps, s_cap) == target
            if k_rec is None and ok:
                k_rec = k
            elif k_rec is not None and not ok:
                stable = False
                break
        if seen >= max_k or not stable:
            break
    return Recovery(k_rec, stable if k_rec is not None else False)


# -- topology selection --------------------------------------------------------

def _matches(graph: InterferenceGraph, target_d, target_s) -> bool:
    if target_d is not None and graph.max_degree != target_d:
        return False
    if target_s is not None and graph.max_hidden_in_degree != target_s:
        return False
    return True


def topology_filter(candidates, target_d: int | None, target_s: int | None):
    """Keep graphs whose max direct degree and max hidden in-degree hit the targets.

    Returns ``(kept, acceptance_rate)``; the rate is 0.0 for an empty input.
    """
    if (target_d is not None and target_d < 1) or (target_s is not None and target_s < 1):
        raise ValueError("targets must be >= 1")
    kept = []
    for c in candidates:
        g = c.graph if isinstance(c, geo.DerivedNetwork) else c
        if _matches(g, target_d, target_s):
            kept.append(c)
    rate = len(kept) / len(candidates) if candidates else 0.0
    return kept, rate


@dataclass
class _Network:
    graph: InterferenceGraph
    node_p: np.ndarray | None = None
    arrival_rates: np.ndarray | None = None
    label: dict = field(default_factory=dict)


def _geo_networks(cfg: ExperimentConfig, a: int, value):
    """Rejection-sample geo networks for sweep point ``a``; returns (networks, stats)."""
    rows, cols, ranges = cfg.rows, cfg.cols, (cfg.cs_range,)
    td, ts = cfg.target_d, cfg.target_s
    if cfg.sweep == "n":
        cols = int(value) // rows
    elif cfg.sweep == "d":
        td, ranges = int(value), cfg.cs_ranges
    elif cfg.sweep == "s":
        ts = int(value)
    else:
        ranges = (float(value),)
    nets, tried, evaluated = [], 0, 0
    while len(nets) < cfg.trials and tried < cfg.max_candidates:
        tseed = derive_seed(cfg.seed, 1, a, tried)
        tried += 1
        base = geo.gen_topology(rows, cols, cfg.cell_side, cfg.clients_per_cell, seed=tseed,
                                cs_range=ranges[0], interference_offset=cfg.interference_offset)
        if np.any(base.client_counts() == 0):
            evaluated += len(ranges)
            continue
        for r in ranges:
            evaluated += 1
            top = base.with_cs_range(r)
            if td is not None and cfg.channel == "static" and geo.direct_degrees(top).max() != td:
                continue
            dn = geo.derive_graph(top, cfg.channel, p_min=cfg.p_min)
            if _matches(dn.graph, td, ts):
                nets.append(_Network(dn.graph, dn.traffic_p, dn.arrival_rates,
                                     {"topology_seed": tseed, "cs_range": r}))
                if len(nets) == cfg.trials:
                    break
    stats = {"candidates": tried, "evaluated": evaluated, "accepted": len(nets),
             "acceptance_rate": len(nets) / evaluated if evaluated else 0.0}
    return nets, stats


def _model_networks(cfg: ExperimentConfig, a: int, value):
    n, d, s = cfg.n, cfg.d, cfg.s
    if cfg.sweep == "n":
        n = int(value)
    elif cfg.sweep == "d":
        d = int(value)
    elif cfg.sweep == "s":
        s = int(value)
    else:
        raise ValueError("cs_range sweeps need a geo source")
    nets = []
    for t in range(cfg.trials):
        if cfg.family == "clique":
            g = theory.gen_clique_family(n, d)[0]
        elif cfg.family == "group":
            g = theory.gen_group_family(n, d, s, cfg.p_min)[0]
        else:
            rng = np.random.default_rng(derive_seed(cfg.seed, 1, a, t))
            g = theory.random_graph(n, d, s, cfg.p_min, rng, fade=cfg.fade)
        if cfg.channel == "random" and cfg.fade and not any(g.fade_prob):
            g = g.replace(fade_prob=(cfg.fade,) * n)
        nets.append(_Network(g, label={"n": n, "d": d, "s": s}))
    return nets, {"candidates": cfg.trials, "evaluated": cfg.trials, "accepted": cfg.trials,
                  "acceptance_rate": 1.0}


def _work(item):
    cfg, net, seed = item
    graph = net.graph
    d = max(graph.max_degree + 1, cfg.d if cfg.source == "model" else 1)
    s = max(graph.max_hidden_in_degree, cfg.s if cfg.source == "model" else 0)
    params = ModelParams(p=cfg.p, W=cfg.W, d=d, s=s, p_min=cfg.p_min, p_empty=cfg.p_empty,
                         q_low=0.0, q_up=1.0, c3=cfg.c3, channel_mode="static")
    eps = cfg.eps
    if eps is None and cfg.kind in ("direct-robust", "hidden-robust"):
        eps = cfg.params(d, s).epsilon
    if cfg.kind == "hidden-robust":
        params = cfg.params(d, s)
    rec = measure_recovery_time(
        graph, params, cfg.kind, cfg.max_k, cfg.check_interval, seed, eps=eps,
        s_cap=cfg.s_cap if cfg.s_cap is not None else s,
        node_p=net.node_p if cfg.traffic == "bernoulli" else None,
        traffic=cfg.traffic, arrival_rates=net.arrival_rates)
    return rec.k, rec.stable


@dataclass
class ExperimentResult:
    """Raw per-trace rows plus per-sweep-point aggregates."""

    rows: list
    aggregates: dict
    meta: dict

    def raw_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RAW_HEADER)
        for r in self.rows:
            w.writerow([_fmt(r["sweep_value"]), r["topology_id"], r["trace_id"], r["recovery_k"],
                        int(r["censored"]), int(r["stable"])])
        return buf.getvalue()

    def aggregate_json(self) -> str:
        return json.dumps({"aggregates": self.aggregates, "meta": self.meta},
                          indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            raw, agg = out / "raw.csv", out / "aggregate.json"
            raw.write_text(self.raw_csv())
            agg.write_text(self.aggregate_json())
        except OSError as exc:
            raise OSError(f"cannot write results under {out}: {exc.strerror}") from exc
        return raw, agg


def aggregate(rows: list, max_k: int) -> dict:
    """Per sweep value: mean over traces per topology, then median/worst/mean over topologies."""
    out = {}
    for value in dict.fromkeys(r["sweep_value"] for r in rows):
        pts = [r for r in rows if r["sweep_value"] == value]
        per_topo = {}
        for r in pts:
            per_topo.setdefault(r["topology_id"], []).append(r["recovery_k"])
        means = [float(np.mean(v)) for _, v in sorted(per_topo.items())]
        n_cens = sum(r["censored"] for r in pts)
        out[_fmt(value)] = {
            "median": float(np.median(means)) if n_cens * 2 <= len(pts) else None,
            "worst": float(max(means)),
            "mean": float(np.mean(means)),
            "n_censored": int(n_cens),
            "per_topology_mean": means,
        }
    return out


def _bounds_rows(cfg: ExperimentConfig) -> list:
    rows = []
    for value in cfg.values:
        kw = dict(n=cfg.n, d=cfg.d, s=cfg.s)
        if cfg.sweep in kw:
            kw[cfg.sweep] = int(value)
        inputs = theory.BoundInputs(p=cfg.p, p_min=cfg.p_min, p_empty=cfg.p_empty, q_low=cfg.q_low,
                                    q_up=cfg.q_up, c3=cfg.c3, delta=cfg.delta, gamma=cfg.gamma,
                                    alpha_tsybakov=cfg.alpha_tsybakov, **kw)
        for which in theory.THEOREMS:
            try:
                r = theory.sample_complexity(which, inputs)
                rows.append({"sweep_value": value, "theorem": which, "k": r.k,
                             "threshold": r.threshold, "floor": r.floor, "error": ""})
            except ValueError as exc:
                rows.append({"sweep_value": value, "theorem": which, "k": None,
                             "threshold": None, "floor": None, "error": str(exc)})
    return rows


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the configured sweep; output depends only on the configuration."""
    config.validate()
    meta = {"config": config.to_text(), "selection": {}}
    if config.kind == "bounds-table":
        rows = _bounds_rows(config)
        res = ExperimentResult(rows, {}, meta)
        if config.out:
            _write_bounds(rows, Path(config.out))
        return res
    work, labels = [], []
    for a, value in enumerate(config.values):
        if config.source == "geo":
            nets, stats = _geo_networks(config, a, value)
        else:
            nets, stats = _model_networks(config, a, value)
        meta["selection"][_fmt(value)] = stats
        for t, net in enumerate(nets):
            for r in range(config.traces):
                work.append((config, net, derive_seed(config.seed, 2, a, t, r)))
                labels.append((value, t, r))
    if config.workers > 1 and len(work) > 1:
        ctx = get_context("fork" if os.name == "posix" else "spawn")
        with ctx.Pool(config.workers) as pool:
            results = pool.map(_work, work, chunksize=1)
    else:
        results = [_work(item) for item in work]
    rows = []
    for (value, t, r), (k, stable) in zip(labels, results):
        rows.append({"sweep_value": value, "topology_id": t, "trace_id": r,
                     "recovery_k": config.max_k if k is None else k,
                     "censored": k is None, "stable": bool(stable)})
    res = ExperimentResult(rows, aggregate(rows, config.max_k), meta)
    if config.out:
        res.write(config.out)
    return res


def _write_bounds(rows, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "bounds.csv").write_text(bounds_csv(rows))


def bounds_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sweep_value", "theorem", "k", "threshold", "floor", "error"])
    for r in rows:
        w.writerow([_fmt(r["sweep_value"]), r["theorem"], "" if r["k"] is None else r["k"],
                    "" if r["threshold"] is None else repr(r["threshold"]),
                    "" if r["floor"] is None else repr(r["floor"]), r["error"]])
    return buf.getvalue()


__all__ = [
    "ExperimentConfig", "ExperimentResult", "Recovery", "CENSORED", "measure_recovery_time",
    "run_experiment", "topology_filter", "aggregate", "derive_seed", "bounds_csv",
]
