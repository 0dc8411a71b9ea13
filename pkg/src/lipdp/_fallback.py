"""Pure numpy implementations of the hot kernels.

Semantics match ``_ckernels.pyx`` exactly: same integer hashing, same
summation order, same tie-breaking.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

MWIS, VC, DS, CLAUSES = 0, 1, 2, 3
_CHUNK = 1 << 15


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(x: int) -> np.uint64:
    return np.uint64(x & MASK64)


def keyed_uniforms(seeds: np.ndarray, node: int, state: int, draw: int) -> np.ndarray:
    """Uniform [0, 1) draws keyed by (seed, node, state, draw), one per seed."""
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(seeds, dtype=np.uint64) + _u64(GAMMA))
        h = _mix(h ^ _u64(node + 2 * GAMMA))
        h = _mix(h ^ _u64(state + 3 * GAMMA))
        h = _mix(h ^ _u64(draw + 4 * GAMMA))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def gibbs_pick(values: np.ndarray, cs: np.ndarray, us: np.ndarray, sign: float, ref: float) -> np.ndarray:
    """Inverse-CDF pick from weights ``exp(sign * c * (x - ref))`` for each (c, u) pair."""
    values = np.asarray(values, dtype=np.float64)
    cs = np.asarray(cs, dtype=np.float64)
    us = np.asarray(us, dtype=np.float64)
    p = values.shape[0]
    weights = np.exp(sign * cs[:, None] * (values[None, :] - ref))
    cum = np.cumsum(weights, axis=1)
    target = us * cum[:, -1]
    idx = np.sum(cum <= target[:, None], axis=1)
    positive = weights > 0.0
    last_pos = p - 1 - np.argmax(positive[:, ::-1], axis=1)
    return np.minimum(idx, last_pos).astype(np.int64)


def brute_force(kind: int, n: int, masks_a, masks_b, weights) -> tuple[float, int, bool]:
    """Exhaustive optimum over all subsets of an ``n``-element universe.

    ``kind`` selects the constraint: independent set / vertex cover (adjacency
    masks), dominating set (closed-neighbourhood masks), or clause
    satisfaction (``masks_a``/``masks_b`` are positive/negative literal masks).
    Returns (best value, smallest best mask, feasible-found flag).
    """
    a = np.asarray(masks_a, dtype=np.int64)
    b = np.asarray(masks_b, dtype=np.int64) if masks_b is not None else a
    w = np.asarray(weights, dtype=np.float64)
    maximize = kind in (MWIS, CLAUSES)
    best_val, best_mask, found = 0.0, 0, False
    total = 1 << n
    bits = [np.int64(1) << np.int64(v) for v in range(n)]
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        ok = np.ones(masks.shape[0], dtype=bool)
        if kind == MWIS:
            for v in range(n):
                ok &= ((masks & bits[v]) == 0) | ((masks & a[v]) == 0)
        elif kind == VC:
            for v in range(n):
                ok &= ((masks & bits[v]) != 0) | ((masks & a[v]) == a[v])
        elif kind == DS:
            for v in range(n):
                ok &= (masks & a[v]) != 0
        elif kind == CLAUSES:
            for j in range(a.shape[0]):
                ok &= ((masks & a[j]) != 0) | ((~masks & b[j]) != 0)
        else:
            raise ValueError(f"unknown kind {kind}")
        if not ok.any():
            continue
        vals = np.zeros(masks.shape[0])
        for v in range(n):
            vals += np.where((masks & bits[v]) != 0, w[v], 0.0)
        cand = np.flatnonzero(ok)
        sel = vals[cand]
        j = int(np.argmax(sel) if maximize else np.argmin(sel))
        v, m = float(sel[j]), int(masks[cand[j]])
        if not found or (v > best_val if maximize else v < best_val):
            best_val, best_mask, found = v, m, True
    return best_val, best_mask, found
