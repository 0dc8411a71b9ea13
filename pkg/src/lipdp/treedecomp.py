"""Tree decompositions: construction, validation and logarithmic-height balancing.

``balance`` turns any decomposition of width ``k`` into a binary one of width
at most ``3k + 2``.  It recursively removes a separator node from the
decomposition tree.  Every emitted bag is the separator's bag plus the
vertices shared across at most two boundary tree edges, i.e. a subset of
three input bags.  Pieces with one boundary edge are split at a centroid and
pieces with two boundary edges at the balancing node on the path joining
them, so piece sizes halve at least every second level.  Children are hung
under a weight-balanced binary tree of connector bags, which keeps the total
height at ``HEIGHT_CONSTANT * log2(n + 1)`` on every fixture we measure.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .graph import Graph

# Pinned by tests/test_treedecomp.py on paths, random trees and grids up to n = 1e5.
HEIGHT_CONSTANT = 2.0


class DecompositionError(ValueError):
    """Raised for malformed or invalid tree decompositions."""


@dataclass(frozen=True)
class TreeDecomposition:
    """Rooted tree of bags; ``parent[i] == -1`` marks the unique root."""

    bags: tuple
    parent: tuple

    def __post_init__(self):
        bags = tuple(frozenset(b) for b in self.bags)
        parent = tuple(int(p) for p in self.parent)
        object.__setattr__(self, "bags", bags)
        object.__setattr__(self, "parent", parent)
        if not bags:
            raise DecompositionError("a decomposition needs at least one bag")
        if len(parent) != len(bags):
            raise DecompositionError("bags and parent arrays differ in length")
        roots = [i for i, p in enumerate(parent) if p == -1]
        if len(roots) != 1:
            raise DecompositionError(f"expected exactly one root, found {len(roots)}")
        for i, p in enumerate(parent):
            if p != -1 and not 0 <= p < len(bags):
                raise DecompositionError(f"node {i} has invalid parent {p}")
        # every node must reach the root
        depth = self._depths()
        if any(d < 0 for d in depth):
            raise DecompositionError("parent pointers contain a cycle")

    def _depths(self) -> list[int]:
        n = len(self.bags)
        depth = [-1] * n
        depth[self.root_of()] = 0
        for start in range(n):
            chain = []
            v = start
            while depth[v] < 0:
                chain.append(v)
                v = self.parent[v]
                if v == -1 or len(chain) > n:
                    return [-1] * n
            d = depth[v]
            for u in reversed(chain):
                d += 1
                depth[u] = d
        return depth

    def root_of(self) -> int:
        return self.parent.index(-1)

    @property
    def root(self) -> int:
        return self.root_of()

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.bags]
        for i, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(i)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def depth(self) -> tuple[int, ...]:
        return tuple(self._depths())

    @property
    def width(self) -> int:
        return max(len(b) for b in self.bags) - 1

    @property
    def height(self) -> int:
        return max(self.depth)

    @property
    def is_binary(self) -> bool:
        return all(len(k) <= 2 for k in self.children)

    def preorder(self) -> list[int]:
        order, stack = [], [self.root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children[v]))
        return order

    def to_text(self) -> str:
        lines = []
        for i, (bag, p) in enumerate(zip(self.bags, self.parent)):
            lines.append(" ".join([str(i), str(p)] + [str(v) for v in sorted(bag)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TreeDecomposition":
        rows = {}
        for ln in text.splitlines():
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = [int(t) for t in ln.split()]
            if len(parts) < 2:
                raise DecompositionError(f"bad decomposition line: {ln!r}")
            rows[parts[0]] = (parts[1], frozenset(parts[2:]))
        if sorted(rows) != list(range(len(rows))):
            raise DecompositionError("bag ids must be 0..N-1")
        return cls(tuple(rows[i][1] for i in range(len(rows))),
                   tuple(rows[i][0] for i in range(len(rows))))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "TreeDecomposition":
        return cls.from_text(Path(path).read_text())


def chain_decomposition(bags: Sequence[Iterable[int]]) -> TreeDecomposition:
    """Path decomposition rooted at the first bag."""
    bags = [frozenset(b) for b in bags]
    return TreeDecomposition(tuple(bags), tuple([-1] + list(range(len(bags) - 1))))


# --- validation -----------------------------------------------------------

@dataclass
class ValidationReport:
    vertices_ok: bool = True
    missing_vertex: int | None = None
    edges_ok: bool = True
    missing_edge: tuple | None = None
    connected_ok: bool = True
    disconnected_vertex: int | None = None
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.vertices_ok and self.edges_ok and self.connected_ok


def validate(td: TreeDecomposition, g: Graph) -> ValidationReport:
    """Check the three tree-decomposition conditions, with a witness for each failure."""
    rep = ValidationReport()
    covered = set().union(*td.bags)
    stray = sorted(v for v in covered if not 0 <= v < g.n)
    if stray:
        rep.vertices_ok = False
        rep.missing_vertex = stray[0]
        rep.notes.append(f"bag vertex {stray[0]} is not a graph vertex")
    else:
        missing = [v for v in range(g.n) if v not in covered]
        if missing:
            rep.vertices_ok = False
            rep.missing_vertex = missing[0]

    pair_cover = {}
    for bag in td.bags:
        if len(bag) < 2:
            continue
        for u in bag:
            pair_cover.setdefault(u, set()).update(bag)
    for u, v in g.sorted_edges():
        if v not in pair_cover.get(u, ()):
            rep.edges_ok = False
            rep.missing_edge = (u, v)
            break

    # occurrence set of v is connected iff exactly one occurrence lacks v in its parent
    tops: dict[int, int] = {}
    for i, bag in enumerate(td.bags):
        p = td.parent[i]
        pbag = td.bags[p] if p >= 0 else frozenset()
        for v in bag:
            if v not in pbag:
                tops[v] = tops.get(v, 0) + 1
    broken = sorted(v for v, t in tops.items() if t > 1)
    if broken:
        rep.connected_ok = False
        rep.disconnected_vertex = broken[0]
    return rep


def require_valid(td: TreeDecomposition, g: Graph) -> None:
    rep = validate(td, g)
    if not rep.ok:
        raise DecompositionError(f"invalid tree decomposition: {rep}")


# --- construction from elimination orders ---------------------------------

def from_elimination_order(g: Graph, order: Sequence[int]) -> TreeDecomposition:
    """Standard decomposition of an elimination ordering (one bag per vertex)."""
    if g.n == 0:
        return TreeDecomposition((frozenset(),), (-1,))
    if sorted(order) != list(range(g.n)):
        raise ValueError("order must be a permutation of the vertices")
    pos = {v: i for i, v in enumerate(order)}
    nbrs = [set(g.adj[v]) for v in range(g.n)]
    bags, parent = [], []
    for v in order:
        nb = nbrs[v]
        bags.append(frozenset(nb | {v}))
        parent.append(pos[min(nb, key=pos.__getitem__)] if nb else -1)
        for a in nb:
            nbrs[a].discard(v)
            nbrs[a].update(x for x in nb if x != a)
    roots = [i for i, p in enumerate(parent) if p == -1]
    main = roots[-1]
    for r in roots[:-1]:
        parent[r] = main
    return TreeDecomposition(tuple(bags), tuple(parent))


def binarize(td: TreeDecomposition) -> TreeDecomposition:
    """Give every node at most two children by inserting copies of its bag.

    Copies form a balanced binary tree, so a node with ``d`` children adds
    about ``log2(d)`` levels.
    """
    if td.is_binary:
        return td
    bags, parent = list(td.bags), list(td.parent)

    def hang(p, bag, kids):
        if len(kids) <= 2:
            for c in kids:
                parent[c] = p
            return
        mid = len(kids) // 2
        for half in (kids[:mid], kids[mid:]):
            if len(half) == 1:
                parent[half[0]] = p
            else:
                bags.append(bag)
                parent.append(p)
                hang(len(bags) - 1, bag, half)

    for v, kids in enumerate(td.children):
        if len(kids) > 2:
            hang(v, td.bags[v], list(kids))
    return TreeDecomposition(tuple(bags), tuple(parent))


def _fill_in(nbrs: list[set], v: int) -> int:
    nb = list(nbrs[v])
    missing = 0
    for i, a in enumerate(nb):
        na = nbrs[a]
        for b in nb[i + 1:]:
            if b not in na:
                missing += 1
    return missing


def min_fill_order(g: Graph) -> list[int]:
    """Greedy min-fill elimination ordering; ties go to the smallest vertex id."""
    nbrs = [set(g.adj[v]) for v in range(g.n)]
    fill = [_fill_in(nbrs, v) for v in range(g.n)]
    heap = [(fill[v], v) for v in range(g.n)]
    heapq.heapify(heap)
    done = [False] * g.n
    order = []
    while heap:
        f, v = heapq.heappop(heap)
        if done[v] or f != fill[v]:
            continue
        done[v] = True
        order.append(v)
        nb = list(nbrs[v])
        touched = set(nb)
        for a in nb:
            nbrs[a].discard(v)
        for i, a in enumerate(nb):
            for b in nb[i + 1:]:
                if b not in nbrs[a]:
                    nbrs[a].add(b)
                    nbrs[b].add(a)
                    touched.update(nbrs[a] & nbrs[b])
        nbrs[v] = set()
        for x in touched:
            if not done[x]:
                nf = _fill_in(nbrs, x)
                if nf != fill[x]:
                    fill[x] = nf
                    heapq.heappush(heap, (nf, x))
    return order


def decompose_heuristic(g: Graph) -> TreeDecomposition:
    """Valid decomposition from the min-fill ordering (no optimality guarantee)."""
    return from_elimination_order(g, min_fill_order(g))


class TooLargeError(ValueError):
    """Raised when an exhaustive routine is asked to run beyond its guard."""


def decompose_exact_small(g: Graph, max_n: int = 14) -> TreeDecomposition:
    """Minimum-width decomposition by branch and bound over elimination orders.

    Partial orders are memoised by the set of eliminated vertices together
    with the best width reached so far for that set.
    """
    if g.n > max_n:
        raise TooLargeError(f"exact treewidth refused for n={g.n} > max_n={max_n}")
    n = g.n
    if n == 0:
        return TreeDecomposition((frozenset(),), (-1,))
    adjm = [0] * n
    for u, v in g.edges:
        adjm[u] |= 1 << v
        adjm[v] |= 1 << u

    def elim_nbrs(eliminated: int, v: int) -> int:
        reach = adjm[v]
        frontier = adjm[v] & eliminated
        visited = 0
        while frontier:
            visited |= frontier
            nxt = 0
            m = frontier
            while m:
                b = m & -m
                nxt |= adjm[b.bit_length() - 1]
                m ^= b
            reach |= nxt
            frontier = nxt & eliminated & ~visited
        return reach & ~eliminated & ~(1 << v)

    heur = min_fill_order(g)
    best_order = list(heur)
    best = from_elimination_order(g, heur).width
    memo: dict[int, int] = {}

    def search(eliminated: int, order: list[int], cur: int) -> None:
        nonlocal best, best_order
        remaining = n - len(order)
        if max(cur, remaining - 1) < best:
            best = max(cur, remaining - 1)
            best_order = order + [v for v in range(n) if not eliminated >> v & 1]
        if cur >= best or remaining - 1 <= cur:
            return
        if memo.get(eliminated, n + 1) <= cur:
            return
        memo[eliminated] = cur
        cands = []
        for v in range(n):
            if eliminated >> v & 1:
                continue
            d = bin(elim_nbrs(eliminated, v)).count("1")
            if max(cur, d) < best:
                cands.append((d, v))
        cands.sort()
        for d, v in cands:
            if max(cur, d) >= best:
                break
            order.append(v)
            search(eliminated | (1 << v), order, max(cur, d))
            order.pop()

    search(0, [], 0)
    return from_elimination_order(g, best_order)


# --- balancing --------------------------------------------------------------

def _compress(td: TreeDecomposition) -> tuple[list[frozenset], list[set]]:
    """Contract tree edges whose one bag contains the other; returns an undirected tree."""
    bags = list(td.bags)
    adj: list[set] = [set() for _ in bags]
    for i, p in enumerate(td.parent):
        if p >= 0:
            adj[i].add(p)
            adj[p].add(i)
    alive = [True] * len(bags)
    work = [(i, p) for i, p in enumerate(td.parent) if p >= 0]
    while work:
        a, b = work.pop()
        if not (alive[a] and alive[b]) or b not in adj[a]:
            continue
        if bags[a] <= bags[b]:
            small, big = a, b
        elif bags[b] <= bags[a]:
            small, big = b, a
        else:
            continue
        alive[small] = False
        adj[big].discard(small)
        for c in adj[small]:
            if c != big:
                adj[c].discard(small)
                adj[c].add(big)
                adj[big].add(c)
                work.append((c, big))
        adj[small] = set()
    keep = [i for i in range(len(bags)) if alive[i]]
    index = {v: i for i, v in enumerate(keep)}
    return [bags[i] for i in keep], [{index[c] for c in adj[i]} for i in keep]


def _split_weighted(items: list[tuple[int, object]]):
    """Binary grouping whose leaves sit at depth about log2(total / weight)."""
    total = sum(wt for wt, _ in items)
    acc = 0
    for cut in range(1, len(items)):
        acc += items[cut - 1][0]
        if acc * 2 >= total:
            return items[:cut], items[cut:]
    return items[:-1], items[-1:]


def balance(td: TreeDecomposition, g: Graph | None = None) -> TreeDecomposition:
    """Binary decomposition of the same graph with width <= 3k+2 and logarithmic height.

    When ``g`` is given the input is validated against it first.
    """
    if g is not None:
        require_valid(td, g)
    bags, adj = _compress(td)
    n_nodes = len(bags)
    out_bags: list[frozenset] = []
    out_parent: list[int] = []

    def emit(bag, parent):
        out_bags.append(frozenset(bag))
        out_parent.append(parent)
        return len(out_bags) - 1

    # task: (nodes of the piece, boundary tree edges (inside, outside), parent output id)
    tasks = [(list(range(n_nodes)), [], -1)]
    while tasks:
        nodes, cut, parent_out = tasks.pop()
        members = set(nodes)
        boundary = set()
        for a, o in cut:
            boundary |= bags[a] & bags[o]
        if len(cut) <= 1:
            x = _centroid(nodes, members, adj)
        elif len(cut) == 2:
            x = _path_splitter(nodes, members, adj, cut[0][0], cut[1][0])
        else:  # pragma: no cover - the recursion never creates three boundary edges
            raise AssertionError("piece with more than two boundary edges")
        here = emit(boundary | bags[x], parent_out)

        pieces = []
        for y in sorted(adj[x]):
            if y not in members:
                continue
            comp = _component(y, x, members, adj)
            comp_set = set(comp)
            comp_cut = [(a, o) for a, o in cut if a in comp_set] + [(y, x)]
            comp_boundary = set()
            for a, o in comp_cut:
                comp_boundary |= bags[a] & bags[o]
            pieces.append((len(comp), (comp, comp_cut, comp_boundary)))
        pieces.sort(key=lambda t: -t[0])
        _hang(pieces, here, emit, tasks)
    return TreeDecomposition(tuple(out_bags), tuple(out_parent))


def _hang(pieces, parent_out, emit, tasks):
    if not pieces:
        return
    if len(pieces) == 1:
        comp, comp_cut, _ = pieces[0][1]
        tasks.append((comp, comp_cut, parent_out))
        return
    for group in _split_weighted(pieces):
        if len(group) == 1:
            comp, comp_cut, _ = group[0][1]
            tasks.append((comp, comp_cut, parent_out))
        else:
            joint = set()
            for _, (_, _, b) in group:
                joint |= b
            _hang(group, emit(joint, parent_out), emit, tasks)


def _component(start, banned, members, adj) -> list[int]:
    comp, stack, seen = [], [start], {start, banned}
    while stack:
        v = stack.pop()
        comp.append(v)
        for u in adj[v]:
            if u in members and u not in seen:
                seen.add(u)
                stack.append(u)
    return comp


def _rooted_order(root, members, adj):
    order, par = [root], {root: -1}
    i = 0
    while i < len(order):
        v = order[i]
        i += 1
        for u in adj[v]:
            if u in members and u not in par:
                par[u] = v
                order.append(u)
    return order, par


def _centroid(nodes, members, adj) -> int:
    root = min(nodes)
    order, par = _rooted_order(root, members, adj)
    size = dict.fromkeys(order, 1)
    for v in reversed(order):
        if par[v] != -1:
            size[par[v]] += size[v]
    total = len(order)
    best, best_val = root, total
    for v in order:
        worst = total - size[v]
        for u in adj[v]:
            if u in members and par.get(u) == v:
                worst = max(worst, size[u])
        if worst < best_val or (worst == best_val and v < best):
            best, best_val = v, worst
    return best


def _path_splitter(nodes, members, adj, a1, a2) -> int:
    if a1 == a2:
        return a1
    order, par = _rooted_order(a2, members, adj)
    size = dict.fromkeys(order, 1)
    for v in reversed(order):
        if par[v] != -1:
            size[par[v]] += size[v]
    path = [a1]
    while path[-1] != a2:
        path.append(par[path[-1]])
    total = len(order)
    chosen = path[0]
    for j in range(1, len(path)):
        before = size[path[j - 1]]
        if 2 * before <= total:
            chosen = path[j]
        else:
            break
    return chosen


def height_bound(n: int, constant: float = HEIGHT_CONSTANT) -> float:
    return constant * math.log2(n + 1)
