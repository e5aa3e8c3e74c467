# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled session resolution and hitting-set search.

Mirrors ifgraph._pykernels exactly; see that module for argument docs.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t, int8_t

cnp.import_array()

NAME = "cython"


cdef inline bint _sensed(Py_ssize_t b, Py_ssize_t a, Py_ssize_t i,
                         const uint8_t[:, ::1] base, const int64_t[:, ::1] slot,
                         const double[:, ::1] coins, const double[::1] thr) noexcept nogil:
    cdef int64_t s = slot[a, i]
    if s >= 0:
        return coins[b, s] < thr[s]
    return base[a, i] != 0


cdef void _feedback_row(Py_ssize_t b, Py_ssize_t n, uint8_t[:, ::1] X, int8_t[:, ::1] Y,
                        const uint8_t[:, ::1] adj, const double[:, ::1] fade_u,
                        const double[::1] fade, const int64_t[::1] h_ptr,
                        const int64_t[::1] h_src, const double[::1] h_p,
                        const double[:, ::1] hid_u, bint nc, const double[:, ::1] nc_u) noexcept nogil:
    cdef Py_ssize_t j, a, e
    cdef bint nack
    cdef double pmax
    for j in range(n):
        if X[b, j] == 0:
            Y[b, j] = -1
            continue
        nack = fade_u[b, j] < fade[j]
        if not nack:
            for a in range(n):
                if X[b, a] and adj[a, j]:
                    nack = True
                    break
        if not nack:
            if nc:
                pmax = 0.0
                for e in range(h_ptr[j], h_ptr[j + 1]):
                    if X[b, h_src[e]] and h_p[e] > pmax:
                        pmax = h_p[e]
                nack = nc_u[b, j] < pmax
            else:
                for e in range(h_ptr[j], h_ptr[j + 1]):
                    if X[b, h_src[e]] and hid_u[b, e] < h_p[e]:
                        nack = True
                        break
        Y[b, j] = 0 if nack else 1


def simulate_block(const int64_t[:, ::1] order, const uint8_t[:, ::1] Q,
                   const uint8_t[:, ::1] sense_base, const int64_t[:, ::1] pair_slot,
                   const double[:, ::1] coins, const double[::1] slot_thr,
                   const uint8_t[:, ::1] adj, const double[:, ::1] fade_u, const double[::1] fade,
                   const int64_t[::1] h_ptr, const int64_t[::1] h_src, const double[::1] h_p,
                   const double[:, ::1] hid_u, bint non_compounding, const double[:, ::1] nc_u):
    cdef Py_ssize_t B = Q.shape[0], n = Q.shape[1]
    X_arr = np.zeros((B, n), dtype=np.uint8)
    Y_arr = np.empty((B, n), dtype=np.int8)
    cdef uint8_t[:, ::1] X = X_arr
    cdef int8_t[:, ::1] Y = Y_arr
    cdef Py_ssize_t b, r, i, t, na
    cdef int64_t[::1] act = np.empty(max(n, 1), dtype=np.int64)
    cdef bint blocked
    with nogil:
        for b in range(B):
            na = 0
            for r in range(n):
                i = order[b, r]
                if Q[b, i] == 0:
                    continue
                blocked = False
                for t in range(na):
                    if _sensed(b, act[t], i, sense_base, pair_slot, coins, slot_thr):
                        blocked = True
                        break
                if not blocked:
                    X[b, i] = 1
                    act[na] = i
                    na += 1
            _feedback_row(b, n, X, Y, adj, fade_u, fade, h_ptr, h_src, h_p, hid_u,
                          non_compounding, nc_u)
    return X_arr, Y_arr


def simulate_block_queued(const int64_t[:, ::1] order, const int64_t[:, ::1] arrivals,
                          int64_t[::1] queue,
                          const uint8_t[:, ::1] sense_base, const int64_t[:, ::1] pair_slot,
                          const double[:, ::1] coins, const double[::1] slot_thr,
                          const uint8_t[:, ::1] adj, const double[:, ::1] fade_u,
                          const double[::1] fade, const int64_t[::1] h_ptr,
                          const int64_t[::1] h_src, const double[::1] h_p,
                          const double[:, ::1] hid_u, bint non_compounding,
                          const double[:, ::1] nc_u):
    cdef Py_ssize_t B = arrivals.shape[0], n = arrivals.shape[1]
    X_arr = np.zeros((B, n), dtype=np.uint8)
    Y_arr = np.empty((B, n), dtype=np.int8)
    cdef uint8_t[:, ::1] X = X_arr
    cdef int8_t[:, ::1] Y = Y_arr
    cdef Py_ssize_t b, r, i, t, na
    cdef int64_t[::1] act = np.empty(max(n, 1), dtype=np.int64)
    cdef bint blocked
    with nogil:
        for b in range(B):
            for i in range(n):
                queue[i] += arrivals[b, i]
            na = 0
            for r in range(n):
                i = order[b, r]
                if queue[i] <= 0:
                    continue
                blocked = False
                for t in range(na):
                    if _sensed(b, act[t], i, sense_base, pair_slot, coins, slot_thr):
                        blocked = True
                        break
                if not blocked:
                    X[b, i] = 1
                    act[na] = i
                    na += 1
            _feedback_row(b, n, X, Y, adj, fade_u, fade, h_ptr, h_src, h_p, hid_u,
                          non_compounding, nc_u)
            for i in range(n):
                if Y[b, i] == 1:
                    queue[i] -= 1
    return X_arr, Y_arr


def first_hitting_combo(const uint64_t[::1] sets, int nbits, int r):
    cdef Py_ssize_t m = sets.shape[0], k, q
    cdef int idx[64]
    cdef uint64_t mask
    cdef bint ok
    if m == 0:
        return ()
    if r > nbits or r < 0 or nbits > 64:
        if nbits > 64:
            raise ValueError("compiled hitting-set search supports at most 64 candidates")
        return None
    if r == 0:
        return None
    for k in range(r):
        idx[k] = k
    with nogil:
        while True:
            mask = 0
            for k in range(r):
                mask |= (<uint64_t>1) << idx[k]
            ok = True
            for q in range(m):
                if (sets[q] & mask) == 0:
                    ok = False
                    break
            if ok:
                break
            # advance to the next combination in lexicographic order
            k = r - 1
            while k >= 0 and idx[k] == nbits - r + k:
                k -= 1
            if k < 0:
                ok = False
                break
            idx[k] += 1
            for q in range(k + 1, r):
                idx[q] = idx[q - 1] + 1
    if ok:
        return tuple(idx[k] for k in range(r))
    return None
