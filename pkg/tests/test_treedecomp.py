import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import grid_path_decomposition
from lipdp.graph import Graph, complete_graph, cycle_graph, grid_graph, path_graph, random_graph, random_tree
from lipdp.treedecomp import (HEIGHT_CONSTANT, DecompositionError, TooLargeError, TreeDecomposition, balance,
                              binarize, chain_decomposition, decompose_exact_small, decompose_heuristic,
                              height_bound, validate)


def test_heuristic_examples():
    td = decompose_heuristic(Graph(0))
    assert td.bags == (frozenset(),)
    td = decompose_heuristic(complete_graph(3))
    assert td.width == 2 and frozenset({0, 1, 2}) in td.bags
    assert decompose_heuristic(path_graph(5)).width == 1


def test_exact_small_known_widths(rng):
    assert decompose_exact_small(complete_graph(4)).width == 3
    assert decompose_exact_small(cycle_graph(5)).width == 2
    assert decompose_exact_small(random_tree(7, rng)).width == 1
    for r in range(1, 5):
        td = decompose_exact_small(grid_graph(r, r), max_n=16)
        assert td.width == r if r > 1 else td.width == 0
    for r in range(2, 7):
        assert decompose_exact_small(complete_graph(r)).width == r - 1
    for n in range(3, 10):
        assert decompose_exact_small(cycle_graph(n)).width == 2


def test_exact_small_refuses_large():
    with pytest.raises(TooLargeError):
        decompose_exact_small(path_graph(20))


@given(st.integers(1, 9), st.floats(0.1, 0.7), st.integers(0, 10_000))
def test_exact_never_worse_than_heuristic(n, p, seed):
    g = random_graph(n, p, np.random.default_rng(seed))
    exact = decompose_exact_small(g)
    assert validate(exact, g).ok
    assert exact.width <= decompose_heuristic(g).width


def test_validate_witnesses():
    g = path_graph(4)
    td = chain_decomposition([{0, 1}, {1, 2}])
    rep = validate(td, g)
    assert not rep.vertices_ok and rep.missing_vertex == 3
    td = chain_decomposition([{0, 1}, {1, 2}, {3}])
    rep = validate(td, g)
    assert rep.vertices_ok and not rep.edges_ok and rep.missing_edge == (2, 3)
    # vertex 1 occurs in bags 0 and 2 but not in the middle bag
    td = chain_decomposition([{0, 1}, {0, 2}, {1, 2, 3}])
    rep = validate(td, Graph.from_edges(4, [(0, 1), (0, 2), (1, 2), (2, 3)]))
    assert not rep.connected_ok and rep.disconnected_vertex == 1


def test_text_round_trip(tmp_path):
    td = decompose_heuristic(grid_graph(3, 3))
    assert TreeDecomposition.from_text(td.to_text()) == td
    td.save(tmp_path / "td.txt")
    assert TreeDecomposition.load(tmp_path / "td.txt") == td
    with pytest.raises(DecompositionError):
        TreeDecomposition.from_text("0 -1 1\n1 -1 2\n")


def test_balance_single_bag():
    td = chain_decomposition([{0, 1, 2}])
    out = balance(td)
    assert out.height == 0 and out.width == 2


def test_balance_rejects_invalid_input():
    with pytest.raises(DecompositionError):
        balance(chain_decomposition([{0}, {1}]), path_graph(2))


def test_balance_path_1024():
    g = path_graph(1024)
    td = chain_decomposition([{i, i + 1} for i in range(1023)])
    out = balance(td, g)
    assert validate(out, g).ok and out.is_binary
    assert out.width <= 5
    assert out.height <= HEIGHT_CONSTANT * 10


def _check_balanced(g, td):
    out = balance(td, g)
    assert validate(out, g).ok
    assert out.is_binary
    assert out.width <= 3 * td.width + 2
    assert out.height <= height_bound(g.n)
    return out


@given(st.integers(1, 40), st.floats(0.05, 0.5), st.integers(0, 10_000))
def test_balance_properties_random(n, p, seed):
    g = random_graph(n, p, np.random.default_rng(seed))
    _check_balanced(g, decompose_heuristic(g))


@given(st.integers(2, 3000), st.integers(0, 10_000))
def test_balance_random_trees(n, seed):
    g = random_tree(n, np.random.default_rng(seed))
    _check_balanced(g, decompose_heuristic(g))


@pytest.mark.parametrize("rows,cols", [(3, 50), (5, 200), (8, 8)])
def test_balance_grids(rows, cols):
    _check_balanced(grid_graph(rows, cols), grid_path_decomposition(rows, cols))


def test_height_constant_pinned(rng):
    # regression pin: measured ratios stay below the declared constant
    worst = 0.0
    for g, td in [(path_graph(5000), chain_decomposition([{i, i + 1} for i in range(4999)])),
                  (random_tree(5000, rng), None),
                  (grid_graph(6, 800), grid_path_decomposition(6, 800))]:
        td = td or decompose_heuristic(g)
        out = balance(td)
        worst = max(worst, out.height / math.log2(g.n + 1))
    assert worst <= HEIGHT_CONSTANT
    assert HEIGHT_CONSTANT == 2.0


def test_binarize():
    star = TreeDecomposition(tuple(frozenset({0, i}) for i in range(9)), (-1,) + (0,) * 8)
    g = Graph.from_edges(9, [(0, i) for i in range(1, 9)])
    out = binarize(star)
    assert out.is_binary and validate(out, g).ok and out.width == 1
    assert out.height <= 4
