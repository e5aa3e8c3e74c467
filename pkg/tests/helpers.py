"""Small constructors shared by the test modules."""

import itertools

import numpy as np

from ifgraph.model import Feedback, SessionTrace


def make_trace(X, nack=None) -> SessionTrace:
    X = np.asarray(X, dtype=np.uint8)
    nack = np.zeros_like(X, dtype=bool) if nack is None else np.asarray(nack, dtype=bool)
    Y = np.where(X == 0, Feedback.IDLE, np.where(nack, Feedback.NACK, Feedback.ACK))
    return SessionTrace(X, Y.astype(np.int8))


def brute_hitting_set(collection, allowed, max_size):
    """All-subsets search in (size, lexicographic) order; None if nothing hits."""
    sets = [frozenset(s) for s in collection]
    allowed = sorted(set(allowed))
    for r in range(max_size + 1):
        for combo in itertools.combinations(allowed, r):
            c = frozenset(combo)
            if all(c & s for s in sets):
                return c
    return None


# criterion number -> (passed, detail); filled by test_acceptance, printed by conftest
ACCEPTANCE: dict = {}


def report(num: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[num] = (bool(ok), detail)
    print(f"[{'PASS' if ok else 'FAIL'}] acceptance #{num}: {detail}")
    assert ok, detail
