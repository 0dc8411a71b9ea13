"""Randomized dynamic programming over HR-algebra parse trees.

``compute_opt`` fills the exact value table for every reachable
(node, state) cell.  ``run_dp`` walks the table top-down, choosing one branch
per Forget / ParCom cell with a soft selector fed the exact branch values.
``run_batch`` performs the same extraction for many seeds at once; run ``i``
of a batch is identical to ``run_dp`` with seed ``seeds[i]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import as_weights
from .hr import EDGE, EMPTY, FORGET, PARCOM, VERTEX, ParseTree, Term, height
from .soft import SoftConfig, select_many


class ContractError(ValueError):
    """Problem spec and term disagree (wrong labels, unexpected constant...)."""


class InfeasibleError(Exception):
    def __init__(self, state, message: str = "root cell is infeasible"):
        super().__init__(f"{message} (root state {state})")
        self.state = state


class ProblemSpec:
    """Hand-written transition system over parse-tree states.

    States are non-negative ints.  Subclasses implement ``base``,
    ``parcom_rules`` and ``forget_rules``; rule lists are returned in a fixed
    order, which is the order branch values are presented to the selector.
    """

    name = "abstract"
    direction = "max"
    needs_labels = False

    @property
    def maximize(self) -> bool:
        return self.direction == "max"

    def root_state(self, pt: ParseTree) -> int:
        return 0

    def states(self, pt: ParseTree, nid: int) -> list[int]:
        raise NotImplementedError

    def base(self, pt: ParseTree, nid: int, state: int) -> tuple[bool, tuple]:
        """(feasible, vertices the constant itself commits)."""
        raise NotImplementedError

    def parcom_rules(self, pt: ParseTree, nid: int, state: int) -> list[tuple[int, int]]:
        raise NotImplementedError

    def forget_rules(self, pt: ParseTree, nid: int, state: int) -> list[tuple[int, tuple]]:
        raise NotImplementedError

    def check(self, pt: ParseTree) -> None:
        if self.needs_labels and pt.labels is None:
            raise ContractError(f"{self.name} needs a labelled graph")


class Cell:
    """One (node, state) entry.

    ``branches`` holds (child states, committed vertices, subtotal) for the
    feasible rules of an internal node; constants keep ``committed`` instead.
    """

    __slots__ = ("opt", "branches", "committed", "n_rules", "_values")

    def __init__(self, opt, branches=None, committed=(), n_rules=0):
        self.opt = opt
        self.branches = branches
        self.committed = committed
        self.n_rules = n_rules
        self._values = None

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = np.array([b[2] for b in self.branches], dtype=np.float64)
        return self._values


@dataclass
class DPTable:
    pt: ParseTree
    spec: ProblemSpec
    weights: np.ndarray
    cells: list
    p_max: int

    @property
    def root_state(self) -> int:
        return self.spec.root_state(self.pt)

    @property
    def root_cell(self) -> Cell:
        return self.cells[self.pt.root][self.root_state]

    @property
    def root_opt(self):
        return self.root_cell.opt

    @property
    def n_cells(self) -> int:
        return sum(len(c) for c in self.cells)

    def cell(self, nid: int, state: int) -> Cell:
        return self.cells[nid][state]

    def p_max_by_kind(self) -> dict:
        out = {}
        for nid, row in enumerate(self.cells):
            kind = self.pt.kind[nid]
            for c in row.values():
                out[kind] = max(out.get(kind, 0), c.n_rules)
        return out

    def to_json(self) -> str:
        rows = [
            {"node": nid, "state": s, "opt": c.opt}
            for nid, row in enumerate(self.cells)
            for s, c in sorted(row.items())
        ]
        return json.dumps({"problem": self.spec.name, "p_max": self.p_max, "cells": rows})


def _parse_tree(term, spec: ProblemSpec, w, labels=None) -> ParseTree:
    if isinstance(term, ParseTree):
        pt = term
    else:
        pt = ParseTree(term, len(w), labels)
    spec.check(pt)
    return pt


def compute_opt(term: Term | ParseTree, spec: ProblemSpec, w, labels=None) -> DPTable:
    """Exact value table over all cells reachable from the root state."""
    pt = _parse_tree(term, spec, w, labels)
    w = as_weights(w)
    if len(w) < pt.n:
        raise ContractError(f"weight vector has {len(w)} entries, graph has {pt.n} vertices")
    wl = w.tolist()
    better = (lambda a, b: a > b) if spec.maximize else (lambda a, b: a < b)

    # top-down reachability; preorder visits parents first
    rules: list[dict] = [dict() for _ in range(pt.size)]
    rules[pt.root][spec.root_state(pt)] = None
    for nid in pt.preorder():
        kind = pt.kind[nid]
        row = rules[nid]
        if kind == FORGET:
            (c,) = pt.kids[nid]
            for s in row:
                rl = spec.forget_rules(pt, nid, s)
                row[s] = rl
                for cs, _ in rl:
                    rules[c].setdefault(cs)
        elif kind == PARCOM:
            a, b = pt.kids[nid]
            for s in row:
                rl = spec.parcom_rules(pt, nid, s)
                row[s] = rl
                for ls, rs in rl:
                    rules[a].setdefault(ls)
                    rules[b].setdefault(rs)

    cells: list[dict] = [None] * pt.size
    p_max = 1
    for nid in range(pt.size):
        kind = pt.kind[nid]
        out = {}
        if kind in (VERTEX, EDGE, EMPTY):
            for s in rules[nid]:
                ok, committed = spec.base(pt, nid, s)
                if ok:
                    out[s] = Cell(sum((wl[v] for v in committed), 0.0), committed=tuple(committed))
                else:
                    out[s] = Cell(None)
        else:
            kids = pt.kids[nid]
            for s, rl in rules[nid].items():
                branches = []
                if kind == FORGET:
                    child = cells[kids[0]]
                    for cs, committed in rl:
                        opt = child[cs].opt
                        if opt is not None:
                            branches.append(((cs,), tuple(committed), opt + sum((wl[v] for v in committed), 0.0)))
                else:
                    left, right = cells[kids[0]], cells[kids[1]]
                    for ls, rs in rl:
                        a, b = left[ls].opt, right[rs].opt
                        if a is not None and b is not None:
                            branches.append(((ls, rs), (), a + b))
                best = None
                for br in branches:
                    if best is None or better(br[2], best):
                        best = br[2]
                p_max = max(p_max, len(rl))
                out[s] = Cell(best, branches, n_rules=len(rl))
        cells[nid] = out
    return DPTable(pt, spec, w, cells, p_max)


def epsilon_schedule(eps_total: float, term: Term | ParseTree, direction: str = "max") -> float:
    """Per-node accuracy so that the accumulated loss stays within ``eps_total``."""
    if not (0.0 < eps_total <= 1.0):
        raise ValueError(f"eps_total must lie in (0, 1], got {eps_total}")
    h = term.height if isinstance(term, ParseTree) else height(term)
    if h == 0:
        return eps_total
    return eps_total / h if direction == "max" else eps_total / (2 * h)


def _choose(cell: Cell, nid: int, state: int, cfg: SoftConfig, maximize: bool) -> int:
    if len(cell.branches) == 1:
        return 0
    vals = cell.values
    if cfg.hard:
        return int(np.argmax(vals) if maximize else np.argmin(vals))
    seed = np.array([cfg.seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    u0 = kernels.keyed_uniforms(seed, nid, state, 0)
    u1 = kernels.keyed_uniforms(seed, nid, state, 1)
    return int(select_many(vals, cfg.epsilon, u0, u1, maximize)[0])


def run_dp(term: Term | ParseTree, spec: ProblemSpec, w, cfg: SoftConfig, table: DPTable | None = None):
    """One randomized solution, extracted top-down from the exact table."""
    if table is None:
        table = compute_opt(term, spec, w)
    pt = table.pt
    root_state = table.root_state
    if table.root_opt is None:
        raise InfeasibleError(root_state)
    maximize = spec.maximize
    chosen = []
    stack = [(pt.root, root_state)]
    while stack:
        nid, s = stack.pop()
        cell = table.cells[nid][s]
        if cell.branches is None:
            chosen.extend(cell.committed)
            continue
        states, committed, _ = cell.branches[_choose(cell, nid, s, cfg, maximize)]
        chosen.extend(committed)
        stack.extend(zip(pt.kids[nid], states))
    return frozenset(chosen)


def run_batch(table: DPTable, eps_node: float, seeds, hard: bool = False) -> np.ndarray:
    """Boolean (runs x n) membership matrix; row ``i`` equals ``run_dp`` under ``seeds[i]``."""
    pt = table.pt
    if table.root_opt is None:
        raise InfeasibleError(table.root_state)
    seeds = np.asarray(seeds, dtype=np.uint64)
    r = seeds.shape[0]
    out = np.zeros((r, len(table.weights)), dtype=bool)
    maximize = table.spec.maximize
    pending = {pt.root: np.full(r, table.root_state, dtype=np.int64)}
    for nid in pt.preorder():
        st = pending.pop(nid)
        row = table.cells[nid]
        uniq, inv = np.unique(st, return_inverse=True)
        groups = [np.flatnonzero(inv == i) for i in range(len(uniq))] if len(uniq) > 1 else [np.arange(r)]
        kids = pt.kids[nid]
        child_st = [np.empty(r, dtype=np.int64) for _ in kids]
        for s, rows in zip(uniq.tolist(), groups):
            cell = row[s]
            if cell.branches is None:
                if cell.committed:
                    out[np.ix_(rows, cell.committed)] = True
                continue
            nb = len(cell.branches)
            if nb == 1:
                picks = np.zeros(len(rows), dtype=np.int64)
            elif hard:
                vals = cell.values
                picks = np.full(len(rows), int(np.argmax(vals) if maximize else np.argmin(vals)))
            else:
                sd = seeds[rows]
                u0 = kernels.keyed_uniforms(sd, nid, s, 0)
                u1 = kernels.keyed_uniforms(sd, nid, s, 1)
                picks = select_many(cell.values, eps_node, u0, u1, maximize)
            for b in np.unique(picks).tolist():
                sel = rows[picks == b] if nb > 1 else rows
                states, committed, _ = cell.branches[b]
                for arr, cs in zip(child_st, states):
                    arr[sel] = cs
                if committed:
                    out[np.ix_(sel, committed)] = True
        for c, arr in zip(kids, child_st):
            pending[c] = arr
    return out
