import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import dyadic_weights
from lipdp.baker import (layer_opt_gap_check, modulus, plan, plan_with_modulus, solve_layers, solve_mwis,
                         solve_mwis_batch)
from lipdp.dp import compute_opt
from lipdp.graph import Graph, cycle_graph, grid_graph, path_graph, random_tree
from lipdp.lab import mean_se
from lipdp.pipeline import prepare
from lipdp.problems import mwis_spec, validate_solution
from lipdp.soft import SoftConfig, replication_seeds


def test_modulus():
    assert modulus(1.0) == 2
    assert modulus(0.25) == 8
    assert modulus(0.5) == 4
    assert modulus(0.1) == 20
    with pytest.raises(ValueError):
        modulus(0)


def test_plan_p5():
    bp = plan_with_modulus(path_graph(5), 0, 2)
    sub, back = bp.subgraphs[0]
    assert back == [1, 3] and sub.m == 0
    assert plan(path_graph(5), 0, 1.0).m == 2


def test_plan_drops_exact_residue_classes():
    g = grid_graph(5, 5)
    bp = plan(g, 0, 0.5)
    for j, (sub, back) in enumerate(bp.subgraphs):
        dropped = set().union(*[layer for i, layer in enumerate(bp.layers) if i % bp.m == j])
        assert set(back) == set(range(g.n)) - dropped
        assert len(set(back)) == len(back)


def test_single_vertex_and_empty():
    assert solve_mwis(Graph(1), [4], 0, 0.5, SoftConfig(1.0)) == {0}
    assert solve_mwis(Graph(0), [], 0, 0.5, SoftConfig(1.0)) == frozenset()


def test_c4_mean():
    g = cycle_graph(4)
    ls = solve_layers(g, [1] * 4, plan(g, 0, 0.5))
    xs, _ = solve_mwis_batch(ls, replication_seeds(0, 2000))
    mean, se = mean_se(xs.sum(1))
    assert mean >= 0.5 * 2 - 3 * se


def test_batch_matches_scalar(rng):
    g = grid_graph(4, 4)
    w = dyadic_weights(rng, 16)
    ls = solve_layers(g, w, plan(g, 3, 0.5))
    seeds = replication_seeds(9, 30)
    xs, _ = solve_mwis_batch(ls, seeds)
    for i in range(0, 30, 5):
        x = solve_mwis(g, w, 3, 0.5, SoftConfig(1.0, seed=int(seeds[i])), layers=ls)
        assert x == frozenset(np.flatnonzero(xs[i]).tolist())


def test_hard_mode_picks_best_layer(rng):
    g = grid_graph(4, 4)
    w = dyadic_weights(rng, 16)
    ls = solve_layers(g, w, plan(g, 0, 0.5))
    x = solve_mwis(g, w, 0, 0.5, SoftConfig(1.0, hard=True), layers=ls)
    assert sum(w[v] for v in x) == ls.opts.max()


@given(st.integers(2, 30), st.integers(2, 6), st.integers(0, 10_000))
def test_gap_on_trees(n, m, seed):
    rng = np.random.default_rng(seed)
    g = random_tree(n, rng)
    rep = layer_opt_gap_check(g, dyadic_weights(rng, n), 0, m)
    assert rep.holds and rep.ratio >= 1 - 1 / m - 1e-12


def test_gap_p2():
    rep = layer_opt_gap_check(path_graph(2), [1, 1], 0, 2)
    assert rep.opt == 1 and max(rep.layer_opts) == 1 and rep.holds
    with pytest.raises(ValueError):
        layer_opt_gap_check(path_graph(2), [1, 1], 0, 1)


@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 10_000), st.sampled_from([0.25, 0.5, 1.0]))
def test_output_independent(r, c, seed, eps):
    rng = np.random.default_rng(seed)
    g = grid_graph(r, c)
    w = dyadic_weights(rng, g.n)
    root = int(rng.integers(0, g.n))
    ls = solve_layers(g, w, plan(g, root, eps))
    xs, _ = solve_mwis_batch(ls, replication_seeds(seed, 20))
    assert all(validate_solution("mwis", g, np.flatnonzero(row)) for row in xs)


def test_layer_widths_recorded():
    g = grid_graph(6, 6)
    ls = solve_layers(g, np.ones(36), plan(g, 0, 0.5))
    assert len(ls.widths) == 4
    full = compute_opt(prepare(g).pt, mwis_spec(), np.ones(36)).root_opt
    assert full == 18
