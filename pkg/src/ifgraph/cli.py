"""Command-line entry point: ``ifgraph <command> [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as ifio
from . import theory
from .direct import estimate_direct_robust, estimate_direct_static, robust_epsilon
from .geo import derive_graph, gen_topology
from .harness import ExperimentConfig, bounds_csv, run_experiment
from .hidden import estimate_hidden_robust, estimate_hidden_s1, estimate_hidden_static
from .model import ModelParams
from .sim import sample_trace

METHODS = ("direct-static", "direct-robust", "hidden-static", "hidden-s1", "hidden-robust")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model constants")
    g.add_argument("--p", type=float, default=0.5, help="per-session traffic probability")
    g.add_argument("--W", type=float, default=32.0, help="backoff window")
    g.add_argument("--d", type=int, default=None, help="direct degree cap (max degree + 1)")
    g.add_argument("--s", type=int, default=None, help="hidden in-degree cap")
    g.add_argument("--p-min", type=float, default=0.5)
    g.add_argument("--p-empty", type=float, default=0.0)
    g.add_argument("--q-low", type=float, default=0.0)
    g.add_argument("--q-up", type=float, default=1.0)
    g.add_argument("--c3", type=float, default=2.0)
    g.add_argument("--channel", choices=("static", "random"), default="static")


def _params(args, d_default=2, s_default=1) -> ModelParams:
    return ModelParams(p=args.p, W=args.W, d=args.d or d_default,
                       s=s_default if args.s is None else args.s, p_min=args.p_min,
                       p_empty=args.p_empty, q_low=args.q_low, q_up=args.q_up, c3=args.c3,
                       channel_mode=args.channel)


def cmd_simulate(args) -> int:
    if args.graph:
        graph = ifio.loads_graph(Path(args.graph).read_text())
    elif args.family == "clique":
        graph = theory.gen_clique_family(args.n, args.d)[0]
    elif args.family == "group":
        graph = theory.gen_group_family(args.n, args.d, args.s or 1, args.p_min)[0]
    else:
        graph = theory.random_graph(args.n, args.d, args.s or 1, args.p_min,
                                    np.random.default_rng(args.seed))
    params = _params(args, d_default=graph.max_degree + 1, s_default=graph.max_hidden_in_degree)
    trace = sample_trace(graph, params, args.k, args.seed)
    if args.graph_out:
        Path(args.graph_out).write_text(ifio.dumps_graph(graph))
    if args.out:
        ifio.write_trace(trace, args.out)
    else:
        sys.stdout.write(ifio.dumps_trace_csv(trace))
    return 0


def cmd_estimate(args) -> int:
    trace = ifio.read_trace(args.trace)
    method = args.method
    if method == "hidden-s1":
        res = estimate_hidden_s1(trace)
    elif method in ("direct-static", "hidden-static"):
        res = estimate_direct_static(trace)
        if method == "hidden-static":
            res = estimate_hidden_static(trace, res, args.s or 1)
    else:
        params = _params(args)
        eps = args.eps if args.eps is not None else robust_epsilon(params)
        res = estimate_direct_robust(trace, eps)
        if method == "hidden-robust":
            res = estimate_hidden_robust(trace, res, params)
    _emit(ifio.dumps_result(res), args.out)
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    for key in ("seed", "out", "workers"):
        v = getattr(args, key)
        if v is not None:
            setattr(cfg, key, v)
    res = run_experiment(cfg)
    if not cfg.out:
        sys.stdout.write(res.aggregate_json() if res.aggregates else bounds_csv(res.rows))
    return 0


def cmd_bounds(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
        cfg.kind = "bounds-table"
    else:
        cfg = ExperimentConfig(kind="bounds-table", sweep="n", values=(args.n,), n=args.n,
                               d=args.d or 3, s=1 if args.s is None else args.s, p=args.p,
                               p_min=args.p_min, p_empty=args.p_empty, q_low=args.q_low,
                               q_up=args.q_up, c3=args.c3, delta=args.delta, gamma=args.gamma,
                               alpha_tsybakov=args.alpha)
    cfg.out = None
    res = run_experiment(cfg)
    _emit(bounds_csv(res.rows), args.out)
    return 0


def cmd_gen_topology(args) -> int:
    top = gen_topology(args.rows, args.cols, args.cell_side, args.clients_per_cell,
                       seed=args.seed, cs_range=args.cs_range,
                       interference_offset=args.interference_offset)
    _emit(ifio.dumps_topology(top), args.out)
    if args.graph_out:
        net = derive_graph(top, mode=args.channel)
        Path(args.graph_out).write_text(ifio.dumps_graph(net.graph))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ifgraph", description="Interference-graph inference from session logs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a session trace")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--graph", help="graph file in the text format")
    src.add_argument("--family", choices=("clique", "group", "random"), default="clique")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--k", type=int, default=1000, help="number of sessions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="trace path (.bin for binary, CSV otherwise); stdout if omitted")
    p.add_argument("--graph-out", help="also write the ground-truth graph")
    _model_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the interference graph from a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--method", choices=METHODS, default="hidden-static")
    p.add_argument("--eps", type=float, default=None, help="co-activation threshold (robust)")
    p.add_argument("--out")
    _model_args(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment", help="run a configured recovery-time sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory for raw.csv / aggregate.json")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bounds", help="tabulate the sample-size bounds")
    p.add_argument("--config", help="take inputs (and sweep) from a config file")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.1, help="minimax error level")
    p.add_argument("--out")
    _model_args(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("gen-topology", help="generate a grid-cell WLAN topology")
    p.add_argument("--rows", type=int, default=4)
    p.add_argument("--cols", type=int, default=8)
    p.add_argument("--cell-side", type=float, default=50.0)
    p.add_argument("--clients-per-cell", type=int, default=6)
    p.add_argument("--cs-range", type=float, default=70.0)
    p.add_argument("--interference-offset", type=float, default=0.0)
    p.add_argument("--channel", choices=("static", "random"), default="static")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--graph-out", help="also write the derived interference graph")
    p.set_defaults(func=cmd_gen_topology)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"ifgraph {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
