"""Grid-cell network geometry and log-distance path loss.

Received power follows ``Γ(l) = Γ(l0) - 10 α log10(l / l0) + X_σ`` with a
zero-mean Gaussian shadowing term whose variance is given in dB.  The
logarithm is base 10, the usual convention for dB path-loss models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import InterferenceGraph


@dataclass(frozen=True)
class PathLossParams:
    gamma0: float = 0.0          # dBm at the reference distance
    alpha_pathloss: float = 4.0
    sigma2: float = 3.0          # shadowing variance, dB
    l0: float = 1000.0           # reference distance, m

    def __post_init__(self) -> None:
        if self.sigma2 < 0:
            raise ValueError("shadowing variance must be non-negative")
        if self.l0 <= 0:
            raise ValueError("reference distance must be positive")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def received_power(params: PathLossParams, distance, shadow=0.0):
    """Received power in dBm at ``distance`` metres (scalar or array)."""
    dist = np.asarray(distance, dtype=float)
    if np.any(dist <= 0):
        raise ValueError("distance must be positive")
    out = params.gamma0 - 10.0 * params.alpha_pathloss * np.log10(dist / params.l0) + shadow
    return float(out) if np.ndim(out) == 0 else out


def threshold_for_range(params: PathLossParams, range_m: float) -> float:
    """Power threshold at which the unshadowed signal reaches exactly ``range_m``."""
    return received_power(params, range_m, 0.0)


@dataclass(frozen=True, eq=False)
class Topology:
    """One AP per cell plus clients associated with their nearest AP.

    Shadowing draws are frozen per AP pair (symmetric) and per AP-client pair.
    """

    rows: int
    cols: int
    cell_side: float
    pathloss: PathLossParams
    ap_xy: np.ndarray
    client_xy: np.ndarray
    assoc: np.ndarray
    shadow_ap: np.ndarray
    shadow_client: np.ndarray
    cs_threshold: float
    interference_offset: float = 0.0
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1 or self.cell_side <= 0:
            raise ValueError("grid dimensions must be positive")
        n = self.rows * self.cols
        if self.ap_xy.shape != (n, 2):
            raise ValueError("exactly one AP per cell")
        cells = self.cell_of(self.ap_xy)
        if not np.array_equal(cells, np.arange(n)):
            raise ValueError("AP outside its cell")
        if self.client_xy.size:
            dist = np.linalg.norm(self.client_xy[:, None, :] - self.ap_xy[None, :, :], axis=2)
            if not np.array_equal(np.argmin(dist, axis=1), self.assoc):
                raise ValueError("client not associated with its nearest AP")

    @property
    def n(self) -> int:
        return self.rows * self.cols

    @property
    def int_threshold(self) -> float:
        """Client interference threshold: the carrier-sense threshold plus an offset in dB."""
        return self.cs_threshold + self.interference_offset

    def cell_of(self, xy: np.ndarray) -> np.ndarray:
        c = np.clip(np.floor(xy[:, 0] / self.cell_side), 0, self.cols - 1).astype(int)
        r = np.clip(np.floor(xy[:, 1] / self.cell_side), 0, self.rows - 1).astype(int)
        return r * self.cols + c

    def client_counts(self) -> np.ndarray:
        return np.bincount(self.assoc, minlength=self.n)

    def with_cs_range(self, range_m: float) -> "Topology":
        """Same placement and shadowing, carrier-sense threshold set for ``range_m``."""
        return replace(self, cs_threshold=threshold_for_range(self.pathloss, range_m))


def gen_topology(rows: int, cols: int, cell_side: float = 50.0, clients_per_cell: int = 4,
                 pathloss: PathLossParams | None = None, seed: int = 0, cs_range: float = 70.0,
                 interference_offset: float = 0.0) -> Topology:
    """Random placement: uniform AP and clients per cell, frozen Gaussian shadowing."""
    if rows < 1 or cols < 1 or cell_side <= 0 or clients_per_cell < 0:
        raise ValueError("grid dimensions must be positive")
    pl = pathloss or PathLossParams()
    rng = np.random.default_rng(seed)
    n = rows * cols
    origin = np.array([[c * cell_side, r * cell_side] for r in range(rows) for c in range(cols)], dtype=float)
    ap_xy = origin + rng.random((n, 2)) * cell_side
    client_xy = (np.repeat(origin, clients_per_cell, axis=0)
                 + rng.random((n * clients_per_cell, 2)) * cell_side)
    if client_xy.size:
        dist = np.linalg.norm(client_xy[:, None, :] - ap_xy[None, :, :], axis=2)
        assoc = np.argmin(dist, axis=1)
    else:
        assoc = np.zeros(0, dtype=int)
    upper = np.triu(rng.normal(0.0, pl.sigma, (n, n)), 1)
    shadow_ap = upper + upper.T
    shadow_client = rng.normal(0.0, pl.sigma, (n, client_xy.shape[0]))
    return Topology(rows, cols, float(cell_side), pl, ap_xy, client_xy, assoc.astype(int),
                    shadow_ap, shadow_client, threshold_for_range(pl, cs_range),
                    float(interference_offset), seed, {"cs_range": cs_range,
                                                   "clients_per_cell": clients_per_cell})


def direct_degrees(top: Topology) -> np.ndarray:
    """Static-mode direct degree of every AP (cheap pre-screen for selection loops)."""
    iu, ju = np.triu_indices(top.n, 1)
    dist = np.linalg.norm(top.ap_xy[iu] - top.ap_xy[ju], axis=1)
    edge = received_power(top.pathloss, dist, top.shadow_ap[iu, ju]) >= top.cs_threshold
    return np.bincount(iu[edge], minlength=top.n) + np.bincount(ju[edge], minlength=top.n)


def _phi(z):
    return 0.5 * (1.0 + np.vectorize(math.erf)(np.asarray(z, dtype=float) / math.sqrt(2.0)))


@dataclass
class DerivedNetwork:
    graph: InterferenceGraph
    traffic_p: np.ndarray
    arrival_rates: np.ndarray
    clients: np.ndarray
    flags: list = field(default_factory=list)


def derive_graph(top: Topology, mode: str = "static", p_min: float | None = None,
                 fade_margin: float = 6.0, min_hidden: float = 0.01,
                 load_per_client: float = 0.1, snap: float = 1e-9) -> DerivedNetwork:
    """Ground-truth interference graph and per-AP traffic for a topology.

    Static: APs are direct neighbours when their frozen mutual power reaches
    the carrier-sense threshold; ``p_ij`` is the fraction of j's clients
    receiving i at or above the interference threshold.  Random: the same
    quantities averaged over the shadowing distribution, with sensing-failure
    probabilities ``q_ij`` and a per-AP fade probability from ``fade_margin``.
    """
    if mode not in ("static", "random"):
        raise ValueError(f"unknown channel mode {mode!r}")
    n, pl = top.n, top.pathloss
    counts = top.client_counts()
    flags = [(j, "no-clients") for j in range(n) if counts[j] == 0]
    iu, ju = np.triu_indices(n, 1)
    dist_ap = np.linalg.norm(top.ap_xy[iu] - top.ap_xy[ju], axis=1)
    mean_ap = received_power(pl, dist_ap)
    dist_cl = np.linalg.norm(top.ap_xy[:, None, :] - top.client_xy[None, :, :], axis=2)
    if mode == "static":
        power = mean_ap + top.shadow_ap[iu, ju]
        is_direct = power >= top.cs_threshold
        cover = (received_power(pl, dist_cl, top.shadow_client) >= top.int_threshold).astype(float)
        sensing, fade = {}, (0.0,) * n
    else:
        sig = pl.sigma
        q = _phi((top.cs_threshold - mean_ap) / sig) if sig > 0 else (mean_ap < top.cs_threshold).astype(float)
        q = np.where(q < snap, 0.0, np.where(q > 1 - snap, 1.0, q))
        is_direct = q < 0.5
        mean_cl = received_power(pl, dist_cl)
        cover = 1.0 - _phi((top.int_threshold - mean_cl) / sig) if sig > 0 else (mean_cl >= top.int_threshold).astype(float)
        sensing = {}
        for a, b, qq, dd in zip(iu, ju, q, is_direct):
            if qq != (0.0 if dd else 1.0):
                sensing[(int(a), int(b))] = float(qq)
        f = float(_phi(-fade_margin / sig)) if sig > 0 else 0.0
        fade = tuple(f if counts[j] else 0.0 for j in range(n))
    direct = frozenset((int(a), int(b)) for a, b, dd in zip(iu, ju, is_direct) if dd)
    adj = np.zeros((n, n), dtype=bool)
    adj[iu[is_direct], ju[is_direct]] = True
    adj |= adj.T
    # frac[i, j]: share of j's clients covered by AP i (counted exactly in static mode)
    onehot = np.zeros((top.client_xy.shape[0], n))
    onehot[np.arange(onehot.shape[0]), top.assoc] = 1.0
    frac = (cover @ onehot) / np.maximum(counts, 1)[None, :]
    keep = (frac > 0) & ~adj & (counts > 0)[None, :]
    np.fill_diagonal(keep, False)
    if mode == "random":
        keep &= frac >= min_hidden
    hidden = {}
    for i, j in zip(*np.nonzero(keep)):
        pij = float(frac[i, j])
        hidden[(int(i), int(j))] = pij
        if p_min is not None and pij < p_min:
            flags.append(((int(i), int(j)), "sub-threshold"))
    g = InterferenceGraph(n, direct, hidden, fade_prob=fade, sensing_fail=sensing)
    traffic = 1.0 - np.exp(-load_per_client * counts)
    return DerivedNetwork(g, traffic, load_per_client * counts.astype(float), counts, flags)


__all__ = [
    "PathLossParams", "received_power", "threshold_for_range", "Topology",
    "gen_topology", "DerivedNetwork", "derive_graph", "direct_degrees",
]
