"""Pure-Python/numpy implementations of the hot loops.

These define the reference semantics; the compiled module must match them
bit for bit (see tests/test_kernels.py).
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

NAME = "python"


def _feedback(X, adj, fade_u, fade, h_ptr, h_src, h_p, hid_u, non_compounding, nc_u):
    """Vectorized feedback over a block of sessions; returns the NACK mask."""
    B, n = X.shape
    act = X.astype(bool)
    nack = fade_u < fade[None, :]
    if adj.any():
        nack |= (X.astype(np.int32) @ adj.astype(np.int32)) > 0
    if non_compounding:
        pmax = np.zeros((B, n))
        for j in range(n):
            for e in range(h_ptr[j], h_ptr[j + 1]):
                i = h_src[e]
                pmax[:, j] = np.maximum(pmax[:, j], np.where(act[:, i], h_p[e], 0.0))
        nack |= nc_u < pmax
    else:
        for j in range(n):
            for e in range(h_ptr[j], h_ptr[j + 1]):
                nack[:, j] |= act[:, h_src[e]] & (hid_u[:, e] < h_p[e])
    return nack & act


def _to_y(X, nack):
    Y = np.where(X == 1, np.int8(1), np.int8(-1)).astype(np.int8)
    Y[nack] = 0
    return Y


def _sensed_tensor(sense_base, pair_slot, coins, slot_thr):
    """(B, n, n) boolean tensor: does node a sense node i in session b."""
    B = coins.shape[0]
    S = np.broadcast_to(sense_base.astype(bool), (B,) + sense_base.shape).copy()
    if coins.shape[1]:
        ii, jj = np.nonzero(pair_slot >= 0)
        slots = pair_slot[ii, jj]
        S[:, ii, jj] = coins[:, slots] < slot_thr[slots][None, :]
    return S


def simulate_block(order, Q, sense_base, pair_slot, coins, slot_thr, adj,
                   fade_u, fade, h_ptr, h_src, h_p, hid_u, non_compounding, nc_u):
    """Resolve a block of i.i.d. sessions (Bernoulli traffic).

    ``order[b]`` lists nodes by increasing backoff; ``sense_base[a, i]`` is 1
    when the pair always senses, ``pair_slot[a, i]`` indexes a per-session
    coin column when sensing is random (threshold ``slot_thr``).
    Returns ``(X, Y)`` as uint8 / int8 arrays.
    """
    B, n = Q.shape
    S = _sensed_tensor(sense_base, pair_slot, coins, slot_thr)
    active = np.zeros((B, n), dtype=bool)
    rows = np.arange(B)
    Qb = Q.astype(bool)
    for r in range(n):
        i = order[:, r]
        blocked = (active & S[rows, :, i]).any(axis=1)
        active[rows, i] = Qb[rows, i] & ~blocked
    X = active.astype(np.uint8)
    nack = _feedback(X, adj, fade_u, fade, h_ptr, h_src, h_p, hid_u, non_compounding, nc_u)
    return X, _to_y(X, nack)


def simulate_block_queued(order, arrivals, queue, sense_base, pair_slot, coins, slot_thr, adj,
                          fade_u, fade, h_ptr, h_src, h_p, hid_u, non_compounding, nc_u):
    """Queued-traffic variant; ``queue`` (int64, length n) is updated in place."""
    B, n = arrivals.shape
    X = np.zeros((B, n), dtype=np.uint8)
    Y = np.empty((B, n), dtype=np.int8)
    S = _sensed_tensor(sense_base, pair_slot, coins, slot_thr)
    for b in range(B):
        queue += arrivals[b]
        active = np.zeros(n, dtype=bool)
        for i in order[b]:
            if queue[i] > 0 and not (active & S[b, :, i]).any():
                active[i] = True
        X[b] = active
        nack = _feedback(X[b:b + 1], adj, fade_u[b:b + 1], fade, h_ptr, h_src, h_p,
                         hid_u[b:b + 1], non_compounding, nc_u[b:b + 1])[0]
        Y[b] = _to_y(X[b:b + 1], nack[None, :])[0]
        queue -= (Y[b] == 1)
    return X, Y


def first_hitting_combo(sets, nbits, r):
    """First size-``r`` combination of bit positions (lexicographic) whose mask
    intersects every mask in ``sets``; ``None`` if there is none."""
    masks = [int(x) for x in sets]
    if not masks:
        return ()
    for combo in combinations(range(nbits), r):
        m = 0
        for c in combo:
            m |= 1 << c
        if all(x & m for x in masks):
            return combo
    return None
