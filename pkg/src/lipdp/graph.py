"""Vertex-weighted undirected graphs and the weighted Hamming distance."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

VertexSet = frozenset  # solution sets are plain frozensets of vertex ids


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    ``labels`` is an optional per-vertex tag; incidence graphs built for
    max-ones use ``"x"``, ``"nx"`` and ``"c"``.
    """

    n: int
    edges: frozenset = field(default_factory=frozenset)
    labels: tuple | None = None

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        norm = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge {e} references a vertex outside 0..{self.n - 1}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.labels is not None:
            if len(self.labels) != self.n:
                raise ValueError("labels must have one entry per vertex")
            object.__setattr__(self, "labels", tuple(self.labels))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], labels=None) -> "Graph":
        return cls(n, frozenset(tuple(e) for e in edges), labels)

    @cached_property
    def adj(self) -> tuple[frozenset, ...]:
        nbrs: list[set] = [set() for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        return tuple(frozenset(s) for s in nbrs)

    @property
    def m(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def induced(self, keep: Iterable[int]) -> tuple["Graph", list[int]]:
        """Induced subgraph on ``keep``, relabelled to ``0..len(keep)-1``.

        Returns the subgraph and the map from new ids back to ids of ``self``.
        """
        back = sorted(set(keep))
        index = {v: i for i, v in enumerate(back)}
        edges = [(index[u], index[v]) for u, v in self.edges if u in index and v in index]
        labels = None if self.labels is None else [self.labels[v] for v in back]
        return Graph.from_edges(len(back), edges, labels), back


def as_weights(w, n: int | None = None) -> np.ndarray:
    """Validate and copy a weight vector into a read-only float64 array."""
    arr = np.array(w, dtype=np.float64).reshape(-1)
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} weights, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("weights must be finite")
    if np.any(arr < 0):
        raise ValueError("weights must be non-negative")
    arr.setflags(write=False)
    return arr


def set_weight(x: Iterable[int], w) -> float:
    return float(sum(w[v] for v in sorted(x)))


def weighted_hamming(x1: Iterable[int], w1, x2: Iterable[int], w2) -> float:
    """Distance between the weighted indicator vectors of ``(x1, w1)`` and ``(x2, w2)``."""
    if len(w1) != len(w2):
        raise ValueError("weight vectors differ in length")
    a, b = set(x1), set(x2)
    total = 0.0
    for v in sorted(a & b):
        total += abs(float(w1[v]) - float(w2[v]))
    for v in sorted(a - b):
        total += float(w1[v])
    for v in sorted(b - a):
        total += float(w2[v])
    return total


def weighted_hamming_rows(a: np.ndarray, w1, b: np.ndarray, w2) -> np.ndarray:
    """Row-wise weighted Hamming distance between boolean membership matrices."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if w1.shape != w2.shape:
        raise ValueError("weight vectors differ in length")
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    both = (a & b) @ np.abs(w1 - w2)
    only_a = (a & ~b) @ w1
    only_b = (~a & b) @ w2
    return both + only_a + only_b


def perturb(w, u: int, delta: float) -> np.ndarray:
    """Return ``w + delta * 1_u`` as a new array."""
    arr = np.array(w, dtype=np.float64)
    if not 0 <= u < arr.shape[0]:
        raise ValueError(f"vertex {u} out of range")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    arr[u] += delta
    return as_weights(arr)


def bfs_layers(g: Graph, root: int) -> list[frozenset]:
    """BFS distance layers from ``root``.

    Vertices unreachable from ``root`` are gathered into one extra final
    layer, so the layers always partition ``V``.
    """
    if not 0 <= root < g.n:
        raise ValueError(f"root {root} out of range")
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for x in sorted(g.adj[v]):
            if x not in dist:
                dist[x] = dist[v] + 1
                queue.append(x)
    depth = max(dist.values())
    layers: list[set] = [set() for _ in range(depth + 1)]
    for v, d in dist.items():
        layers[d].add(v)
    out = [frozenset(s) for s in layers]
    rest = frozenset(set(range(g.n)) - dist.keys())
    if rest:
        out.append(rest)
    return out


# --- fixtures -------------------------------------------------------------

def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def grid_graph(rows: int, cols: int) -> Graph:
    def vid(r, c):
        return r * cols + c

    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((vid(r, c), vid(r, c + 1)))
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
    return Graph.from_edges(rows * cols, edges)


def random_tree(n: int, rng: np.random.Generator) -> Graph:
    """Uniform random recursive tree: vertex i attaches to a uniform earlier vertex."""
    if n <= 1:
        return Graph(max(n, 0))
    parents = [int(rng.integers(0, i)) for i in range(1, n)]
    return Graph.from_edges(n, [(p, i) for i, p in enumerate(parents, start=1)])


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph.from_edges(n, edges)


# --- text formats ---------------------------------------------------------

def read_graph(path: str | Path) -> tuple[Graph, np.ndarray | None]:
    """Read ``n m`` / ``u v`` edge lines / optional ``v weight`` lines."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"{path}: empty graph file")
    try:
        n, m = (int(t) for t in lines[0].split())
        edges = [tuple(int(t) for t in lines[1 + i].split()) for i in range(m)]
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed header or edge line") from exc
    if any(len(e) != 2 for e in edges):
        raise ValueError(f"{path}: edge lines must have two vertex ids")
    g = Graph.from_edges(n, edges)
    rest = lines[1 + m:]
    if not rest:
        return g, None
    if len(rest) != n:
        raise ValueError(f"{path}: expected {n} weight lines, found {len(rest)}")
    w = np.zeros(n)
    seen = set()
    for ln in rest:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: weight lines must read 'v weight'")
        v = int(parts[0])
        if not 0 <= v < n or v in seen:
            raise ValueError(f"{path}: bad or repeated weight vertex {v}")
        seen.add(v)
        w[v] = float(parts[1])
    return g, as_weights(w, n)


def read_weights(path: str | Path, n: int) -> np.ndarray:
    tokens = Path(path).read_text().split()
    return as_weights([float(t) for t in tokens], n)


def write_graph(path: str | Path, g: Graph, w=None) -> None:
    out = [f"{g.n} {g.m}"]
    out += [f"{u} {v}" for u, v in g.sorted_edges()]
    if w is not None:
        out += [f"{v} {float(w[v])!r}" for v in range(g.n)]
    Path(path).write_text("\n".join(out) + "\n")
