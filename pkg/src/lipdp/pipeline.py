"""Decompose -> balance -> term -> DP, the end-to-end solver path."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import treedecomp as tdm
from .dp import DPTable, compute_opt, epsilon_schedule, run_batch, run_dp
from .graph import Graph, as_weights, set_weight
from .hr import ParseTree, from_decomposition
from .problems import get_spec
from .soft import SoftConfig


@dataclass
class Prepared:
    graph: Graph
    td: tdm.TreeDecomposition
    pt: ParseTree
    width_before: int
    height_before: int
    balanced: bool

    @property
    def width(self) -> int:
        return self.td.width

    @property
    def td_height(self) -> int:
        return self.td.height

    @property
    def term_height(self) -> int:
        return self.pt.height


def prepare(g: Graph, balance="auto", td: tdm.TreeDecomposition | None = None, exact_max_n: int = 0) -> Prepared:
    """Build a binary decomposition and its parse tree.

    ``balance='auto'`` balances only when the heuristic decomposition is
    taller than the logarithmic target; balancing triples the width, which
    costs far more than it saves on small graphs.
    """
    if td is None:
        if g.n and g.n <= exact_max_n:
            td = tdm.decompose_exact_small(g, max_n=exact_max_n)
        else:
            td = tdm.decompose_heuristic(g)
    width0, height0 = td.width, td.height
    if balance == "auto":
        balance = td.height > tdm.height_bound(g.n)
    if balance:
        td = tdm.balance(td)
    else:
        td = tdm.binarize(td)
    term = from_decomposition(td, g)
    return Prepared(g, td, ParseTree(term, g.n, g.labels), width0, height0, bool(balance))


@dataclass
class SolveResult:
    solution: frozenset
    weight: float
    opt: float | None
    p_max: int
    eps_node: float
    prepared: Prepared
    table: DPTable


def solve(g: Graph, w, problem: str, eps: float = 0.5, seed: int = 0, hard: bool = False,
          prepared: Prepared | None = None) -> SolveResult:
    """One run of the randomized DP with the per-node accuracy set from ``eps``."""
    w = as_weights(w, g.n)
    spec = get_spec(problem)
    prep = prepared if prepared is not None else prepare(g)
    table = compute_opt(prep.pt, spec, w)
    eps_node = epsilon_schedule(eps, prep.pt, spec.direction)
    x = run_dp(prep.pt, spec, w, SoftConfig(eps_node, seed=seed, hard=hard), table=table)
    return SolveResult(x, set_weight(x, w), table.root_opt, table.p_max, eps_node, prep, table)


def solve_many(table: DPTable, eps_total: float, seeds, hard: bool = False) -> np.ndarray:
    """Membership matrix of many runs sharing one exact table."""
    eps_node = epsilon_schedule(eps_total, table.pt, table.spec.direction)
    return run_batch(table, eps_node, seeds, hard=hard)
