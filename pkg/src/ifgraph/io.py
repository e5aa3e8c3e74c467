"""Text and binary serialization.

Graph text format (one record per line, ascending order)::

    n=<int>
    NONCOMPOUNDING            # only when the flag is set
    D i j                     # direct edge, i < j
    H i j p                   # hidden edge i -> j with weight p
    F j p                     # non-zero fade probability
    Q i j q                   # explicit sensing-failure override, i < j

Floats are written with ``repr`` so a read/write round trip is bit-exact.
Estimation results reuse the format and add ``FLAG j reason`` lines.

Binary trace format (little endian)::

    magic  b"IFTR"      4 bytes
    version u8 = 1      1 byte
    reserved            3 zero bytes
    k       u64         8 bytes
    n       u32         4 bytes
    k rows of activations, each ceil(n/8) bytes, numpy packbits order
    k rows of NACK flags, same layout

Feedback is reconstructed as IDLE where inactive, NACK where flagged, ACK
otherwise.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .geo import PathLossParams, Topology, gen_topology
from .model import EstimationResult, Feedback, InterferenceGraph, SessionTrace

MAGIC = b"IFTR"
VERSION = 1
_HEADER = struct.Struct("<4sB3xQI")
_Y_CHAR = {Feedback.ACK: "A", Feedback.NACK: "N", Feedback.IDLE: "-"}
_CHAR_Y = {v: int(k) for k, v in _Y_CHAR.items()}


# -- graphs ----------------------------------------------------------------------

def _graph_lines(n, direct, hidden, fade=(), sensing=None, non_compounding=False) -> list[str]:
    lines = [f"n={n}"]
    if non_compounding:
        lines.append("NONCOMPOUNDING")
    lines += [f"D {i} {j}" for i, j in sorted(direct)]
    lines += [f"H {i} {j} {float(p)!r}" for (i, j), p in sorted(hidden.items())]
    lines += [f"F {j} {float(p)!r}" for j, p in enumerate(fade) if p]
    lines += [f"Q {i} {j} {float(q)!r}" for (i, j), q in sorted((sensing or {}).items())]
    return lines


def dumps_graph(g: InterferenceGraph) -> str:
    return "\n".join(_graph_lines(g.n, g.direct_edges, dict(g.hidden_edges), g.fade_prob,
                                  dict(g.sensing_fail), g.non_compounding)) + "\n"


def _parse_graph(text: str, allow_flags: bool):
    n = None
    direct, hidden, fade, sensing, flags = set(), {}, {}, {}, []
    nc = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            if line.startswith("n="):
                n = int(line[2:])
                continue
            tok = line.split()
            tag = tok[0]
            if tag == "NONCOMPOUNDING" and len(tok) == 1:
                nc = True
            elif tag == "D" and len(tok) == 3:
                direct.add((int(tok[1]), int(tok[2])))
            elif tag == "H" and len(tok) == 4:
                hidden[(int(tok[1]), int(tok[2]))] = float(tok[3])
            elif tag == "F" and len(tok) == 3:
                fade[int(tok[1])] = float(tok[2])
            elif tag == "Q" and len(tok) == 4:
                sensing[(int(tok[1]), int(tok[2]))] = float(tok[3])
            elif tag == "FLAG" and allow_flags and len(tok) >= 3:
                flags.append((int(tok[1]), " ".join(tok[2:])))
            else:
                raise ValueError(f"unrecognised record {raw!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if n is None:
        raise ValueError("missing 'n=' header")
    return n, direct, hidden, fade, sensing, nc, flags


def loads_graph(text: str) -> InterferenceGraph:
    n, direct, hidden, fade, sensing, nc, _ = _parse_graph(text, allow_flags=False)
    fp = [0.0] * n
    for j, p in fade.items():
        if not 0 <= j < n:
            raise ValueError(f"fade record for node {j} outside 0..{n - 1}")
        fp[j] = p
    return InterferenceGraph(n, frozenset(direct), hidden, tuple(fp), sensing, nc)


def dumps_result(r: EstimationResult) -> str:
    lines = _graph_lines(r.n, r.direct_edges, {k: v for k, v in r.hidden_edges.items()})
    lines += [f"FLAG {j} {reason}" for j, reason in r.flags]
    return "\n".join(lines) + "\n"


def loads_result(text: str) -> EstimationResult:
    n, direct, hidden, _, _, _, flags = _parse_graph(text, allow_flags=True)
    return EstimationResult(n, frozenset(direct), hidden, flags=flags)


# -- traces ----------------------------------------------------------------------

def dumps_trace_csv(trace: SessionTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "node", "x", "y"])
    for t in range(trace.k):
        for i in range(trace.n):
            w.writerow([t, i, int(trace.X[t, i]), _Y_CHAR[Feedback(int(trace.Y[t, i]))]])
    return buf.getvalue()


def loads_trace_csv(text: str) -> SessionTrace:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["t", "node", "x", "y"]:
        raise ValueError(f"bad trace header {header!r}")
    rows = []
    for lineno, rec in enumerate(reader, 2):
        if not rec:
            continue
        try:
            t, i, x = int(rec[0]), int(rec[1]), int(rec[2])
            y = _CHAR_Y[rec[3]]
        except (ValueError, KeyError, IndexError):
            raise ValueError(f"line {lineno}: malformed trace record {rec!r}") from None
        rows.append((t, i, x, y))
    if not rows:
        raise ValueError("trace holds no sessions")
    k = max(r[0] for r in rows) + 1
    n = max(r[1] for r in rows) + 1
    if len(rows) != k * n:
        raise ValueError(f"expected {k * n} records for {k} sessions x {n} nodes, got {len(rows)}")
    X = np.zeros((k, n), dtype=np.uint8)
    Y = np.full((k, n), -2, dtype=np.int8)
    for t, i, x, y in rows:
        X[t, i], Y[t, i] = x, y
    if np.any(Y == -2):
        raise ValueError("duplicate or missing (t, node) records")
    return SessionTrace(X, Y)


def dumps_trace_bin(trace: SessionTrace) -> bytes:
    head = _HEADER.pack(MAGIC, VERSION, trace.k, trace.n)
    xb = np.packbits(trace.X.astype(bool), axis=1)
    nb = np.packbits(trace.nack, axis=1)
    return head + xb.tobytes() + nb.tobytes()


def loads_trace_bin(data: bytes) -> SessionTrace:
    if len(data) < _HEADER.size:
        raise ValueError("truncated trace header")
    magic, version, k, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError("not a binary trace (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported trace version {version}")
    width = (n + 7) // 8
    body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    if body.size != 2 * k * width:
        raise ValueError(f"trace body has {body.size} bytes, expected {2 * k * width}")
    X = np.unpackbits(body[:k * width].reshape(k, width), axis=1, count=n)
    nack = np.unpackbits(body[k * width:].reshape(k, width), axis=1, count=n).astype(bool)
    if np.any(nack & (X == 0)):
        raise ValueError("NACK flag set for an inactive node")
    Y = np.where(X == 0, Feedback.IDLE, np.where(nack, Feedback.NACK, Feedback.ACK)).astype(np.int8)
    return SessionTrace(X, Y)


def write_trace(trace: SessionTrace, path) -> None:
    path = Path(path)
    if path.suffix == ".bin":
        path.write_bytes(dumps_trace_bin(trace))
    else:
        path.write_text(dumps_trace_csv(trace))


def read_trace(path) -> SessionTrace:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == MAGIC:
        return loads_trace_bin(data)
    return loads_trace_csv(data.decode())


# -- topologies --------------------------------------------------------------------

_TOPO_KEYS = ("rows", "cols", "cell_side", "clients_per_cell", "seed", "gamma0",
              "alpha_pathloss", "sigma2", "l0", "cs_threshold", "interference_offset")


def dumps_topology(top: Topology) -> str:
    if top.seed is None:
        raise ValueError("only seeded topologies can be serialized")
    vals = {"rows": top.rows, "cols": top.cols, "cell_side": top.cell_side,
            "clients_per_cell": top.meta.get("clients_per_cell", len(top.assoc) // top.n),
            "seed": top.seed, "gamma0": top.pathloss.gamma0,
            "alpha_pathloss": top.pathloss.alpha_pathloss, "sigma2": top.pathloss.sigma2,
            "l0": top.pathloss.l0, "cs_threshold": top.cs_threshold,
            "interference_offset": top.interference_offset}
    buf = io.StringIO()
    buf.write("# ifgraph topology v1\n")
    for k in _TOPO_KEYS:
        v = vals[k]
        buf.write(f"# {k}={v!r}\n" if isinstance(v, float) else f"# {k}={v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "id", "x", "y", "assoc"])
    for i, (x, y) in enumerate(top.ap_xy):
        w.writerow(["ap", i, repr(float(x)), repr(float(y)), ""])
    for c, (x, y) in enumerate(top.client_xy):
        w.writerow(["client", c, repr(float(x)), repr(float(y)), int(top.assoc[c])])
    return buf.getvalue()


def loads_topology(text: str) -> Topology:
    """Rebuild a topology; shadowing is regenerated from the recorded seed and
    the stored coordinates are checked against the regenerated ones."""
    header, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            if "=" in line:
                k, v = line[1:].strip().split("=", 1)
                header[k.strip()] = v.strip()
        elif line.strip():
            body.append(line)
    missing = [k for k in _TOPO_KEYS if k not in header]
    if missing:
        raise ValueError(f"topology header lacks {', '.join(missing)}")
    pl = PathLossParams(float(header["gamma0"]), float(header["alpha_pathloss"]),
                        float(header["sigma2"]), float(header["l0"]))
    top = gen_topology(int(header["rows"]), int(header["cols"]), float(header["cell_side"]),
                       int(header["clients_per_cell"]), pl, int(header["seed"]),
                       interference_offset=float(header["interference_offset"]))
    from dataclasses import replace
    top = replace(top, cs_threshold=float(header["cs_threshold"]))
    aps, clients = [], []
    for rec in csv.DictReader(io.StringIO("\n".join(body))):
        xy = (float(rec["x"]), float(rec["y"]))
        if rec["kind"] == "ap":
            aps.append(xy)
        elif rec["kind"] == "client":
            clients.append(xy)
        else:
            raise ValueError(f"unknown row kind {rec['kind']!r}")
    if not (np.array_equal(np.asarray(aps).reshape(-1, 2), top.ap_xy)
            and np.array_equal(np.asarray(clients).reshape(-1, 2), top.client_xy)):
        raise ValueError("coordinates do not match the recorded seed")
    return top


__all__ = [
    "dumps_graph", "loads_graph", "dumps_result", "loads_result", "dumps_trace_csv",
    "loads_trace_csv", "dumps_trace_bin", "loads_trace_bin", "write_trace", "read_trace",
    "dumps_topology", "loads_topology",
]
