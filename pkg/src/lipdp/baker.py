"""Layered (Baker-style) independent set: drop one BFS residue class, solve the rest.

The layer index is chosen by a soft selection over the exact optima of the
``m`` layer-deleted subgraphs, then the randomized DP runs on the chosen one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dp import compute_opt, epsilon_schedule, run_batch, run_dp
from .graph import Graph, as_weights, bfs_layers
from .pipeline import prepare
from .problems import mwis_spec
from .soft import SoftConfig, select_many

# keyed-stream node id reserved for the layer selection (parse-tree ids are far smaller)
LAYER_NODE = 1 << 62


def modulus(eps: float) -> int:
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    return math.ceil(round(2.0 / eps, 9))


@dataclass
class BakerPlan:
    m: int
    root: int
    layers: list
    subgraphs: list  # (Graph, back-map to ids of the input graph)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")


def plan_with_modulus(g: Graph, root: int, m: int) -> BakerPlan:
    layers = bfs_layers(g, root) if g.n else []
    subs = []
    for j in range(m):
        drop = set()
        for i, layer in enumerate(layers):
            if i % m == j:
                drop |= layer
        subs.append(g.induced(v for v in range(g.n) if v not in drop))
    return BakerPlan(m, root, layers, subs)


def plan(g: Graph, root: int, eps: float) -> BakerPlan:
    return plan_with_modulus(g, root, modulus(eps))


@dataclass
class LayerSolution:
    """Exact tables of every layer-deleted subgraph, ready for repeated extraction."""

    plan: BakerPlan
    weights: np.ndarray
    preps: list
    tables: list
    opts: np.ndarray

    @property
    def widths(self) -> list[int]:
        return [p.width for p in self.preps]


def solve_layers(g: Graph, w, bp: BakerPlan) -> LayerSolution:
    w = as_weights(w, g.n)
    spec = mwis_spec()
    preps, tables, opts = [], [], []
    for sub, back in bp.subgraphs:
        prep = prepare(sub)
        table = compute_opt(prep.pt, spec, w[back] if back else np.zeros(0))
        preps.append(prep)
        tables.append(table)
        opts.append(table.root_opt)
    return LayerSolution(bp, w, preps, tables, np.array(opts, dtype=np.float64))


def _pick_layers(opts: np.ndarray, m: int, seeds: np.ndarray, hard: bool) -> np.ndarray:
    if hard or len(opts) == 1:
        return np.full(len(seeds), int(np.argmax(opts)), dtype=np.int64)
    u0 = kernels.keyed_uniforms(seeds, LAYER_NODE, 0, 0)
    u1 = kernels.keyed_uniforms(seeds, LAYER_NODE, 0, 1)
    return select_many(opts, 1.0 / m, u0, u1, True)


def solve_mwis(g: Graph, w, root: int, eps: float, cfg: SoftConfig, layers: LayerSolution | None = None):
    """Independent set of ``g``; soft layer choice at accuracy 1/m, then the soft DP on that layer."""
    if g.n == 0:
        return frozenset()
    ls = layers if layers is not None else solve_layers(g, w, plan(g, root, eps))
    m = ls.plan.m
    seed = np.array([cfg.seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    j = int(_pick_layers(ls.opts, m, seed, cfg.hard)[0])
    prep, table = ls.preps[j], ls.tables[j]
    _, back = ls.plan.subgraphs[j]
    if not back:
        return frozenset()
    inner = SoftConfig(epsilon_schedule(1.0 / m, prep.pt), seed=cfg.seed, hard=cfg.hard)
    x = run_dp(prep.pt, table.spec, table.weights, inner, table=table)
    return frozenset(back[v] for v in x)


def solve_mwis_batch(ls: LayerSolution, seeds, hard: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """(membership matrix over the input graph, chosen layer per run); row i equals ``solve_mwis`` with seeds[i]."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    n = len(ls.weights)
    out = np.zeros((len(seeds), n), dtype=bool)
    if n == 0:
        return out, np.zeros(len(seeds), dtype=np.int64)
    m = ls.plan.m
    picks = _pick_layers(ls.opts, m, seeds, hard)
    for j in np.unique(picks).tolist():
        rows = np.flatnonzero(picks == j)
        _, back = ls.plan.subgraphs[j]
        if not back:
            continue
        prep, table = ls.preps[j], ls.tables[j]
        sub = run_batch(table, epsilon_schedule(1.0 / m, prep.pt), seeds[rows], hard=hard)
        out[np.ix_(rows, back)] = sub
    return out, picks


@dataclass
class GapReport:
    m: int
    opt: float
    layer_opts: list
    ratio: float
    holds: bool


def layer_opt_gap_check(g: Graph, w, root: int, m: int) -> GapReport:
    """Check max_j opt_j >= (1 - 1/m) opt on one instance (exact values on both sides)."""
    if m < 2:
        raise ValueError("m must be at least 2")
    w = as_weights(w, g.n)
    opt = compute_opt(prepare(g).pt, mwis_spec(), w).root_opt
    ls = solve_layers(g, w, plan_with_modulus(g, root, m))
    best = float(ls.opts.max())
    ratio = best / opt if opt > 0 else 1.0
    return GapReport(m, opt, ls.opts.tolist(), ratio, best >= (1 - 1 / m) * opt - 1e-9)
