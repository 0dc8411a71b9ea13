"""HR-algebra terms over k-graphs and their construction from tree decompositions.

Constants carry the id of the input-graph vertex they stand for, so a term
evaluates to a subgraph of the original graph and DP solutions can be
reported as original vertex sets.  Slots are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .graph import Graph
from .treedecomp import TreeDecomposition, DecompositionError, require_valid


# Pinned by tests: height(from_decomposition(td, g)) <= C' (log2(k + 2) + height(td)).
TERM_HEIGHT_CONSTANT = 3.0


def term_height_bound(k: int, td_height: int, constant: float = TERM_HEIGHT_CONSTANT) -> float:
    return constant * (math.log2(k + 2) + td_height)


class TermError(ValueError):
    """Raised when a term is ill-formed or glues inconsistent vertices."""


@dataclass(frozen=True)
class Vertex:
    slot: int
    vertex: int


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    u: int
    v: int

    def __post_init__(self):
        if self.i == self.j or self.u == self.v:
            raise TermError("edge constant needs two distinct slots and vertices")


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class ParCom:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Forget:
    slots: frozenset
    child: "Term"

    def __post_init__(self):
        object.__setattr__(self, "slots", frozenset(self.slots))
        if not self.slots:
            raise TermError("forget needs a non-empty slot set")


Term = Union[Vertex, Edge, Empty, ParCom, Forget]
CONSTANTS = (Vertex, Edge, Empty)


@dataclass(frozen=True)
class KGraph:
    """A graph with ``k`` source slots; vertices are input-graph ids."""

    vertices: frozenset
    edges: frozenset
    src: tuple

    @property
    def k(self) -> int:
        return len(self.src)

    def sources(self) -> frozenset:
        return frozenset(v for v in self.src if v is not None)


def _children(t) -> tuple:
    if isinstance(t, ParCom):
        return (t.left, t.right)
    if isinstance(t, Forget):
        return (t.child,)
    return ()


def postorder(t: Term) -> list:
    out, stack = [], [(t, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            out.append(node)
            continue
        stack.append((node, True))
        for c in reversed(_children(node)):
            stack.append((c, False))
    return out


def height(t: Term) -> int:
    """Longest root-to-leaf distance in the parse tree."""
    h: dict[int, int] = {}
    for node in postorder(t):
        kids = _children(node)
        h[id(node)] = 1 + max(h[id(c)] for c in kids) if kids else 0
    return h[id(t)]


def slots_used(t: Term) -> int:
    top = -1
    for node in postorder(t):
        if isinstance(node, Vertex):
            top = max(top, node.slot)
        elif isinstance(node, Edge):
            top = max(top, node.i, node.j)
        elif isinstance(node, Forget):
            top = max(top, max(node.slots))
    return top + 1


def _par(a: KGraph, b: KGraph) -> KGraph:
    src = []
    glued = set()
    for i, (x, y) in enumerate(zip(a.src, b.src)):
        if x is not None and y is not None:
            if x != y:
                raise TermError(f"slot {i} glues different vertices {x} and {y}")
            glued.add(x)
        src.append(x if x is not None else y)
    clash = (a.vertices & b.vertices) - glued
    if clash:
        raise TermError(f"vertices {sorted(clash)} appear on both sides without being glued")
    return KGraph(a.vertices | b.vertices, a.edges | b.edges, tuple(src))


def evaluate(t: Term, k: int | None = None) -> KGraph:
    """The k-graph denoted by ``t``.

    Parallel composition glues equal-indexed sources and merges duplicate
    edges; forgetting sets the listed slots to ``None``.
    """
    if k is None:
        k = max(slots_used(t), 1)
    val: dict[int, KGraph] = {}
    for node in postorder(t):
        if isinstance(node, Vertex):
            _check_slot(node.slot, k)
            src = [None] * k
            src[node.slot] = node.vertex
            g = KGraph(frozenset([node.vertex]), frozenset(), tuple(src))
        elif isinstance(node, Edge):
            _check_slot(node.i, k)
            _check_slot(node.j, k)
            src = [None] * k
            src[node.i], src[node.j] = node.u, node.v
            e = (min(node.u, node.v), max(node.u, node.v))
            g = KGraph(frozenset([node.u, node.v]), frozenset([e]), tuple(src))
        elif isinstance(node, Empty):
            g = KGraph(frozenset(), frozenset(), (None,) * k)
        elif isinstance(node, ParCom):
            g = _par(val[id(node.left)], val[id(node.right)])
        elif isinstance(node, Forget):
            for s in node.slots:
                _check_slot(s, k)
            c = val[id(node.child)]
            g = KGraph(c.vertices, c.edges,
                       tuple(None if i in node.slots else v for i, v in enumerate(c.src)))
        else:
            raise TermError(f"not a term node: {node!r}")
        val[id(node)] = g
    return val[id(t)]


def _check_slot(s: int, k: int) -> None:
    if not 0 <= s < k:
        raise TermError(f"slot {s} outside [0, {k})")


def to_graph(kg: KGraph, n: int) -> Graph:
    if kg.vertices != frozenset(range(n)):
        raise TermError("term does not denote a graph on 0..n-1")
    return Graph(n, kg.edges)


def pretty(t: Term) -> str:
    """S-expression rendering: ``(par A B)``, ``(fg (0 1) A)``, ``(v 0 @3)``, ``(e 0 1 @3 @4)``."""
    text: dict[int, str] = {}
    for node in postorder(t):
        if isinstance(node, Vertex):
            s = f"(v {node.slot} @{node.vertex})"
        elif isinstance(node, Edge):
            s = f"(e {node.i} {node.j} @{node.u} @{node.v})"
        elif isinstance(node, Empty):
            s = "empty"
        elif isinstance(node, ParCom):
            s = f"(par {text[id(node.left)]} {text[id(node.right)]})"
        else:
            slots = " ".join(str(x) for x in sorted(node.slots))
            s = f"(fg ({slots}) {text[id(node.child)]})"
        text[id(node)] = s
    return text[id(t)]


def balanced_par(parts: Sequence[Term]) -> Term:
    """Parallel composition of ``parts`` as a balanced binary tree."""
    if not parts:
        return Empty()
    if len(parts) == 1:
        return parts[0]
    mid = (len(parts) + 1) // 2
    return ParCom(balanced_par(parts[:mid]), balanced_par(parts[mid:]))


def chain_par(parts: Sequence[Term]) -> Term:
    """Left-associated parallel composition."""
    acc = parts[0]
    for p in parts[1:]:
        acc = ParCom(acc, p)
    return acc


def graph_term(vertices: Iterable[int], edges: Iterable[tuple[int, int]], slot: dict) -> Term:
    consts: list[Term] = [Vertex(slot[a], a) for a in sorted(vertices)]
    consts += [Edge(slot[a], slot[b], a, b) for a, b in sorted(edges)]
    return balanced_par(consts)


def from_decomposition(td: TreeDecomposition, g: Graph) -> Term:
    """Parse tree of height O(log k + height(td)) denoting ``g`` with no sources.

    Bag vertices take slots by sorted id at the root; going down, vertices
    shared with the parent keep their slot and fresh ones take the lowest
    free slots.  Each node contributes the vertices and edges of its bag not
    already present in a child bag, composed with the children after the
    vertices leaving the bag are forgotten.
    """
    if not td.is_binary:
        raise DecompositionError("from_decomposition needs a binary decomposition")
    require_valid(td, g)
    if g.n == 0:
        return Empty()
    k = max(td.width + 1, 1)
    slot_of: list[dict] = [dict() for _ in td.bags]
    for node in td.preorder():
        p = td.parent[node]
        assign: dict = {}
        if p >= 0:
            for a in td.bags[node]:
                if a in slot_of[p]:
                    assign[a] = slot_of[p][a]
        free = (s for s in range(k) if s not in set(assign.values()))
        for a in sorted(td.bags[node] - assign.keys()):
            assign[a] = next(free)
        slot_of[node] = assign

    edges_in = {}
    for u, v in g.edges:
        edges_in.setdefault(u, []).append((u, v))
        edges_in.setdefault(v, []).append((u, v))

    built: dict[int, Term] = {}
    for node in reversed(td.preorder()):
        bag = td.bags[node]
        kids = td.children[node]
        kid_bags = [td.bags[c] for c in kids]
        fresh = [a for a in bag if not any(a in kb for kb in kid_bags)]
        local_edges = set()
        for a in bag:
            for u, v in edges_in.get(a, ()):
                if u in bag and v in bag and not any(u in kb and v in kb for kb in kid_bags):
                    local_edges.add((u, v))
        parts: list[Term] = []
        if fresh or local_edges:
            parts.append(graph_term(fresh, local_edges, slot_of[node]))
        for c in kids:
            gone = frozenset(slot_of[c][a] for a in td.bags[c] - bag)
            parts.append(Forget(gone, built[c]) if gone else built[c])
        built[node] = chain_par(parts) if parts else Empty()
        for c in kids:
            del built[c]
    root = td.root
    top = built[root]
    occupied = frozenset(slot_of[root].values())
    return Forget(occupied, top) if occupied else top


# --- flattened parse tree ----------------------------------------------------

VERTEX, EDGE, EMPTY, PARCOM, FORGET = range(5)


class ParseTree:
    """Post-order flattening of a term; a node's id is its post-order index.

    Per node it records the source vector and, for each occupied slot, the
    mask of slots whose vertices are adjacent inside that node's k-graph.
    """

    def __init__(self, term: Term, n: int, labels: Sequence | None = None, k: int | None = None):
        self.term = term
        self.n = n
        self.labels = tuple(labels) if labels is not None else None
        self.k = k if k is not None else max(slots_used(term), 1)
        nodes = postorder(term)
        index = {id(node): i for i, node in enumerate(nodes)}
        self.size = len(nodes)
        self.kind: list[int] = []
        self.kids: list[tuple[int, ...]] = []
        self.src: list[tuple] = []
        self.src_adj: list[tuple[int, ...]] = []
        self.forgotten: list[tuple[int, ...]] = []
        self.const: list[tuple] = []
        self.occ: list[int] = []
        depth_below = []
        for node in nodes:
            kids = tuple(index[id(c)] for c in _children(node))
            self.kids.append(kids)
            adj = [0] * self.k
            forgotten: tuple[int, ...] = ()
            const: tuple = ()
            if isinstance(node, Vertex):
                kind = VERTEX
                _check_slot(node.slot, self.k)
                src = [None] * self.k
                src[node.slot] = node.vertex
                const = (node.slot,)
            elif isinstance(node, Edge):
                kind = EDGE
                _check_slot(node.i, self.k)
                _check_slot(node.j, self.k)
                src = [None] * self.k
                src[node.i], src[node.j] = node.u, node.v
                adj[node.i] |= 1 << node.j
                adj[node.j] |= 1 << node.i
                const = (node.i, node.j)
            elif isinstance(node, Empty):
                kind = EMPTY
                src = [None] * self.k
            elif isinstance(node, ParCom):
                kind = PARCOM
                a, b = kids
                src = []
                for i, (x, y) in enumerate(zip(self.src[a], self.src[b])):
                    if x is not None and y is not None and x != y:
                        raise TermError(f"slot {i} glues different vertices {x} and {y}")
                    src.append(x if x is not None else y)
                adj = [p | q for p, q in zip(self.src_adj[a], self.src_adj[b])]
            else:
                kind = FORGET
                (c,) = kids
                src = list(self.src[c])
                forgotten = tuple(sorted(s for s in node.slots if src[s] is not None))
                drop = 0
                for s in node.slots:
                    src[s] = None
                    drop |= 1 << s
                adj = [0 if drop >> i & 1 else m & ~drop for i, m in enumerate(self.src_adj[c])]
            self.kind.append(kind)
            self.src.append(tuple(src))
            self.occ.append(sum(1 << i for i, v in enumerate(src) if v is not None))
            self.src_adj.append(tuple(adj))
            self.forgotten.append(forgotten)
            self.const.append(const)
            depth_below.append(1 + max(depth_below[c] for c in kids) if kids else 0)
        self.root = self.size - 1
        self.height = depth_below[self.root]

    def occupied(self, nid: int) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.src[nid]) if v is not None)

    def occupied_mask(self, nid: int) -> int:
        return self.occ[nid]

    def label(self, vertex: int):
        return None if self.labels is None else self.labels[vertex]

    def preorder(self) -> list[int]:
        order, stack = [], [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.kids[v]))
        return order
