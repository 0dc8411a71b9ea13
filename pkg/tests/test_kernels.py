import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lipdp import _fallback, kernels

compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled kernels not built")


def test_backend_selection():
    assert kernels.BACKEND in ("compiled", "python")
    assert kernels.backend("python") is _fallback


@compiled
@given(st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=20), st.integers(0, 2**40),
       st.integers(0, 2**62), st.integers(0, 3))
def test_uniforms_equal(seeds, node, state, draw):
    s = np.array(seeds, dtype=np.uint64)
    a = kernels.backend("compiled").keyed_uniforms(s, node, state, draw)
    b = _fallback.keyed_uniforms(s, node, state, draw)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a < 1))


@compiled
@given(st.lists(st.floats(0, 100), min_size=1, max_size=30), st.integers(0, 1000), st.booleans())
def test_gibbs_equal(xs, seed, maximize):
    rng = np.random.default_rng(seed)
    xs = np.array(xs)
    cs = rng.uniform(0, 50, 64)
    us = rng.random(64)
    sign = 1.0 if maximize else -1.0
    ref = xs.max() if maximize else xs.min()
    a = kernels.backend("compiled").gibbs_pick(xs, cs, us, sign, ref)
    b = _fallback.gibbs_pick(xs, cs, us, sign, ref)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a < len(xs)))


@compiled
@given(st.integers(1, 10), st.floats(0.1, 0.8), st.integers(0, 10_000), st.integers(0, 2))
def test_brute_force_equal(n, p, seed, kind):
    rng = np.random.default_rng(seed)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    masks = [a | (1 << v) for v, a in enumerate(adj)] if kind == _fallback.DS else adj
    w = rng.uniform(0, 10, n)
    a = kernels.backend("compiled").brute_force(kind, n, masks, None, w)
    b = _fallback.brute_force(kind, n, masks, None, w)
    assert a == b


@compiled
def test_brute_force_clauses_equal():
    pos, neg = [0b011, 0], [0, 0b101]
    w = [1.0, 2.0, 3.0]
    a = kernels.backend("compiled").brute_force(_fallback.CLAUSES, 3, pos, neg, w)
    assert a == _fallback.brute_force(_fallback.CLAUSES, 3, pos, neg, w)
    # (x1 v x2) and (not-x1 v not-x3), weights (1,2,3): best is x2, x3 true, x1 false
    assert a[:2] == (5.0, 0b110)


def test_brute_force_unknown_kind():
    with pytest.raises(ValueError):
        _fallback.brute_force(9, 2, [0, 0], None, [1, 1])
