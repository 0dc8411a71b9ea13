"""Transition systems for the supported problems, plus direct solution checkers.

State encodings (bit ``i`` refers to slot ``i`` of the node's source vector):

* independent set / vertex cover: mask of source slots in the solution;
* dominating set: ``in | dom << k``; a slot in neither mask is *pending*
  (not in the set and not yet dominated inside the node's k-graph);
* max-ones: ``t | d << k`` where ``t`` marks literal slots whose literal is
  true and ``d`` marks clause slots not yet satisfied inside the k-graph.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dp import ContractError, ProblemSpec
from .graph import Graph, as_weights
from .hr import EDGE, EMPTY, VERTEX, ParseTree

POS, NEG, CLAUSE = "x", "nx", "c"
PROBLEMS = ("mwis", "vc", "ds", "maxones")


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _submasks(bits: list[int]):
    """All sub-masks of the given slot list, in binary-counter order."""
    for r in range(1 << len(bits)):
        m = 0
        for j, b in enumerate(bits):
            if r >> j & 1:
                m |= 1 << b
        yield m


class MWISSpec(ProblemSpec):
    name = "mwis"
    direction = "max"

    def states(self, pt, nid):
        adj = pt.src_adj[nid]
        return [s for s in _submasks(_bits(pt.occ[nid])) if all(adj[i] & s == 0 for i in _bits(s))]

    def base(self, pt, nid, s):
        kind = pt.kind[nid]
        if kind == EDGE:
            i, j = pt.const[nid]
            return not (s >> i & 1 and s >> j & 1), ()
        if kind == EMPTY:
            return s == 0, ()
        return True, ()

    def parcom_rules(self, pt, nid, s):
        a, b = pt.kids[nid]
        return [(s & pt.occ[a], s & pt.occ[b])]

    def forget_rules(self, pt, nid, s):
        (c,) = pt.kids[nid]
        adj, src = pt.src_adj[c], pt.src[c]
        out = []
        for extra in _submasks(list(pt.forgotten[nid])):
            full = s | extra
            if all(adj[i] & full == 0 for i in _bits(extra)):
                out.append((full, tuple(src[i] for i in _bits(extra))))
        return out


class VCSpec(ProblemSpec):
    name = "vc"
    direction = "min"

    def states(self, pt, nid):
        return list(_submasks(_bits(pt.occ[nid])))

    def base(self, pt, nid, s):
        kind = pt.kind[nid]
        if kind == EDGE:
            i, j = pt.const[nid]
            return bool(s >> i & 1 or s >> j & 1), ()
        if kind == EMPTY:
            return s == 0, ()
        return True, ()

    def parcom_rules(self, pt, nid, s):
        a, b = pt.kids[nid]
        return [(s & pt.occ[a], s & pt.occ[b])]

    def forget_rules(self, pt, nid, s):
        (c,) = pt.kids[nid]
        src = pt.src[c]
        return [(s | extra, tuple(src[i] for i in _bits(extra))) for extra in _submasks(list(pt.forgotten[nid]))]


IN, DOM, PEND = 0, 1, 2
_DS_EDGE_OK = {(IN, IN), (IN, DOM), (DOM, IN), (PEND, PEND)}


class DSSpec(ProblemSpec):
    name = "ds"
    direction = "min"

    @staticmethod
    def status(s: int, i: int, k: int) -> int:
        if s >> i & 1:
            return IN
        return DOM if s >> (i + k) & 1 else PEND

    @staticmethod
    def encode(statuses: dict, k: int) -> int:
        s = 0
        for i, st in statuses.items():
            if st == IN:
                s |= 1 << i
            elif st == DOM:
                s |= 1 << (i + k)
        return s

    def states(self, pt, nid):
        occ = _bits(pt.occ[nid])
        return [self.encode(dict(zip(occ, combo)), pt.k) for combo in itertools.product((IN, DOM, PEND), repeat=len(occ))]

    def base(self, pt, nid, s):
        kind, k = pt.kind[nid], pt.k
        if kind == VERTEX:
            (i,) = pt.const[nid]
            return self.status(s, i, k) != DOM, ()
        if kind == EDGE:
            i, j = pt.const[nid]
            return (self.status(s, i, k), self.status(s, j, k)) in _DS_EDGE_OK, ()
        return s == 0, ()

    def parcom_rules(self, pt, nid, s):
        a, b = pt.kids[nid]
        k = pt.k
        oa, ob = pt.occ[a], pt.occ[b]
        left_base = {}
        right_base = {}
        shared_dom = []
        for i in _bits(pt.occ[nid]):
            st = self.status(s, i, k)
            in_a, in_b = oa >> i & 1, ob >> i & 1
            if st == DOM and in_a and in_b:
                shared_dom.append(i)
                continue
            if in_a:
                left_base[i] = st
            if in_b:
                right_base[i] = st
        la, rb = self.encode(left_base, k), self.encode(right_base, k)
        out = []
        for combo in itertools.product(((DOM, DOM), (DOM, PEND), (PEND, DOM)), repeat=len(shared_dom)):
            ls, rs = la, rb
            for i, (x, y) in zip(shared_dom, combo):
                if x == DOM:
                    ls |= 1 << (i + k)
                if y == DOM:
                    rs |= 1 << (i + k)
            out.append((ls, rs))
        return out

    def forget_rules(self, pt, nid, s):
        (c,) = pt.kids[nid]
        k, src = pt.k, pt.src[c]
        gone = list(pt.forgotten[nid])
        out = []
        for ins in _submasks(gone):
            doms = 0
            for i in gone:
                if not ins >> i & 1:
                    doms |= 1 << (i + k)
            out.append((s | ins | doms, tuple(src[i] for i in _bits(ins))))
        return out


class MaxOnesSpec(ProblemSpec):
    """Works on incidence graphs labelled ``x`` / ``nx`` / ``c``."""

    name = "maxones"
    direction = "max"
    needs_labels = True

    def _kind(self, pt, nid, i):
        return pt.labels[pt.src[nid][i]]

    def states(self, pt, nid):
        k = pt.k
        out = []
        occ = _bits(pt.occ[nid])
        for r in range(1 << len(occ)):
            s = 0
            for j, i in enumerate(occ):
                if r >> j & 1:
                    s |= 1 << (i + k) if self._kind(pt, nid, i) == CLAUSE else 1 << i
            out.append(s)
        return out

    def _bit(self, pt, nid, s, i):
        shift = i + pt.k if self._kind(pt, nid, i) == CLAUSE else i
        return s >> shift & 1

    def base(self, pt, nid, s):
        kind = pt.kind[nid]
        if kind == VERTEX:
            (i,) = pt.const[nid]
            if self._kind(pt, nid, i) == CLAUSE:
                return bool(self._bit(pt, nid, s, i)), ()
            return True, ()
        if kind == EDGE:
            i, j = pt.const[nid]
            if self._kind(pt, nid, i) == CLAUSE and self._kind(pt, nid, j) == CLAUSE:
                raise ContractError("clause vertices must not be adjacent")
            # x -- not-x: exactly one literal true; clause -- literal: unsatisfied iff literal false
            return self._bit(pt, nid, s, i) != self._bit(pt, nid, s, j), ()
        return s == 0, ()

    def parcom_rules(self, pt, nid, s):
        a, b = pt.kids[nid]
        k = pt.k
        oa, ob = pt.occ[a], pt.occ[b]
        t = s & ((1 << k) - 1)
        d = s >> k
        ls, rs = (t & oa) | ((d & oa) << k), (t & ob) | ((d & ob) << k)
        shared_sat = [i for i in _bits(pt.occ[nid] & oa & ob)
                      if self._kind(pt, nid, i) == CLAUSE and not d >> i & 1]
        out = []
        for combo in itertools.product(((0, 0), (0, 1), (1, 0)), repeat=len(shared_sat)):
            l2, r2 = ls, rs
            for i, (x, y) in zip(shared_sat, combo):
                l2 |= x << (i + k)
                r2 |= y << (i + k)
            out.append((l2, r2))
        return out

    def forget_rules(self, pt, nid, s):
        (c,) = pt.kids[nid]
        src = pt.src[c]
        lits = [i for i in pt.forgotten[nid] if pt.labels[src[i]] != CLAUSE]
        out = []
        for extra in _submasks(lits):
            committed = tuple(src[i] for i in _bits(extra) if pt.labels[src[i]] == POS)
            out.append((s | extra, committed))
        return out


def mwis_spec() -> MWISSpec:
    return MWISSpec()


def min_vertex_cover_spec() -> VCSpec:
    return VCSpec()


def min_dominating_set_spec() -> DSSpec:
    return DSSpec()


def max_ones_spec() -> MaxOnesSpec:
    return MaxOnesSpec()


def get_spec(problem: str) -> ProblemSpec:
    table = {"mwis": mwis_spec, "vc": min_vertex_cover_spec, "ds": min_dominating_set_spec, "maxones": max_ones_spec}
    if problem not in table:
        raise ValueError(f"unknown problem {problem!r}; choose from {', '.join(PROBLEMS)}")
    return table[problem]()


@dataclass(frozen=True)
class MaxOnesInstance:
    """CNF over variables ``1..num_vars``; literals are signed ints as in DIMACS."""

    num_vars: int
    clauses: tuple

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("num_vars must be non-negative")
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        for c in clauses:
            if not c:
                raise ValueError("clauses must be nonempty")
            if len(c) > 3:
                raise ValueError(f"clause {c} has more than three literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range")
        object.__setattr__(self, "clauses", clauses)

    def satisfied_by(self, true_vars) -> bool:
        tv = set(true_vars)
        return all(any((l > 0) == (abs(l) - 1 in tv) for l in c) for c in self.clauses)


def build_incidence_graph(inst: MaxOnesInstance, w=None) -> tuple[Graph, np.ndarray]:
    """Vertices: ``x_i`` at ``i``, negation at ``num_vars + i``, clause ``j`` at ``2 num_vars + j``."""
    nv, nc = inst.num_vars, len(inst.clauses)
    w = np.ones(nv) if w is None else as_weights(w, nv)
    edges = [(i, nv + i) for i in range(nv)]
    for j, c in enumerate(inst.clauses):
        cv = 2 * nv + j
        for lit in c:
            v = abs(lit) - 1
            edges.append((cv, v if lit > 0 else nv + v))
    labels = (POS,) * nv + (NEG,) * nv + (CLAUSE,) * nc
    ext = np.zeros(2 * nv + nc)
    ext[:nv] = w
    return Graph.from_edges(2 * nv + nc, edges, labels=labels), as_weights(ext)


def incidence_instance(g: Graph) -> MaxOnesInstance:
    """Recover the CNF from a labelled incidence graph."""
    if g.labels is None:
        raise ContractError("max-ones needs a labelled incidence graph")
    nv = sum(1 for lab in g.labels if lab == POS)
    clauses = []
    for v in range(2 * nv, g.n):
        lits = sorted((u + 1) if u < nv else -(u - nv + 1) for u in g.adj[v])
        clauses.append(tuple(lits))
    return MaxOnesInstance(nv, tuple(clauses))


def read_dimacs(source: str | Path) -> MaxOnesInstance:
    """Parse DIMACS CNF from a path or from the text itself."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        text = Path(source).read_text()
    nv = None
    expected = None
    clauses, cur = [], []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("c") or ln.startswith("%"):
            continue
        if ln.startswith("p"):
            parts = ln.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {ln!r}")
            nv, expected = int(parts[2]), int(parts[3])
            continue
        if nv is None:
            raise ValueError("clause before 'p cnf' header")
        for tok in ln.split():
            lit = int(tok)
            if lit == 0:
                if cur:
                    clauses.append(tuple(cur))
                cur = []
            else:
                cur.append(lit)
    if nv is None:
        raise ValueError("missing 'p cnf' header")
    if cur:
        clauses.append(tuple(cur))
    if expected is not None and len(clauses) != expected:
        raise ValueError(f"header announces {expected} clauses, found {len(clauses)}")
    return MaxOnesInstance(nv, tuple(clauses))


def validate_solution(problem: str, g: Graph, x) -> bool:
    """Check the defining property directly on ``g``."""
    xs = set(x)
    if any(not 0 <= v < g.n for v in xs):
        return False
    if problem == "mwis":
        return all(not (u in xs and v in xs) for u, v in g.edges)
    if problem == "vc":
        return all(u in xs or v in xs for u, v in g.edges)
    if problem == "ds":
        return all(v in xs or any(u in xs for u in g.adj[v]) for v in range(g.n))
    if problem == "maxones":
        if g.labels is None:
            return False
        nv = sum(1 for lab in g.labels if lab == POS)
        if any(v >= nv for v in xs):
            return False
        return incidence_instance(g).satisfied_by(xs)
    raise ValueError(f"unknown problem {problem!r}")
