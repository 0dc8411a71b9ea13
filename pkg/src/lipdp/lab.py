"""Oracles and the stability laboratory.

EM between two output distributions is estimated two ways: the shared-seed
coupling (an upper bound, since it is one particular coupling) and exact
optimal transport between the empirical distributions.  Both are estimates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .dp import DPTable, compute_opt, epsilon_schedule, run_batch
from .graph import Graph, as_weights, path_graph, perturb, weighted_hamming_rows
from .pipeline import Prepared, prepare
from .problems import get_spec, incidence_instance, validate_solution
from .soft import replication_seeds

ORACLE_LIMIT = 25
OT_MAX_VARIABLES = 400_000


class OracleRefusal(ValueError):
    """The exhaustive oracle would enumerate too many subsets."""


def brute_force_opt(g: Graph, w, problem: str, direction: str | None = None):
    """Exhaustive optimum: (value, witness) or (None, None) when nothing is feasible.

    For max-ones only the variable vertices are enumerated (the other vertices
    carry zero weight and never appear in reported solutions).
    """
    w = as_weights(w, g.n)
    if direction is not None and direction != get_spec(problem).direction:
        raise ValueError(f"{problem} is a {get_spec(problem).direction}imization problem")
    adj = [sum(1 << u for u in g.adj[v]) for v in range(g.n)]
    if problem == "maxones":
        inst = incidence_instance(g)
        nv = inst.num_vars
        if nv > ORACLE_LIMIT:
            raise OracleRefusal(f"{nv} variables exceed the oracle limit of {ORACLE_LIMIT}")
        pos = [sum(1 << (l - 1) for l in c if l > 0) for c in inst.clauses]
        neg = [sum(1 << (-l - 1) for l in c if l < 0) for c in inst.clauses]
        val, mask, found = kernels.brute_force(kernels.CLAUSES, nv, pos, neg, w[:nv])
    else:
        if g.n > ORACLE_LIMIT:
            raise OracleRefusal(f"{g.n} vertices exceed the oracle limit of {ORACLE_LIMIT}")
        kind = {"mwis": kernels.MWIS, "vc": kernels.VC, "ds": kernels.DS}[problem]
        masks = [a | (1 << v) for v, a in enumerate(adj)] if problem == "ds" else adj
        val, mask, found = kernels.brute_force(kind, g.n, masks, None, w)
    if not found:
        return None, None
    x = frozenset(v for v in range(g.n) if mask >> v & 1)
    assert validate_solution(problem, g, x)
    return val, x


def mean_se(d: np.ndarray) -> tuple[float, float]:
    d = np.asarray(d, dtype=np.float64)
    if d.size < 2:
        return float(d.mean()) if d.size else 0.0, 0.0
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(d.size))


def coupled_em(a: np.ndarray, w_a, b: np.ndarray, w_b) -> tuple[float, float]:
    """Mean and standard error of the row-paired weighted Hamming distance."""
    return mean_se(weighted_hamming_rows(a, w_a, b, w_b))


def ot_em(a: np.ndarray, w_a, b: np.ndarray, w_b) -> float:
    """Exact transport cost between the empirical distributions of the rows of ``a`` and ``b``."""
    sa, ca = np.unique(np.asarray(a, dtype=bool), axis=0, return_counts=True)
    sb, cb = np.unique(np.asarray(b, dtype=bool), axis=0, return_counts=True)
    pa, pb = ca / ca.sum(), cb / cb.sum()
    cost = np.array([weighted_hamming_rows(np.repeat(r[None, :], len(sb), 0), w_a, sb, w_b) for r in sa])
    na, nb = cost.shape
    if na == 1 or nb == 1:
        return float((cost * (pa[:, None] * pb[None, :])).sum())
    if na * nb > OT_MAX_VARIABLES:
        raise ValueError(f"transport problem with {na}x{nb} supports is too large")
    # equality constraints: row sums = pa, column sums = pb (one redundant row dropped)
    rows = np.kron(np.eye(na), np.ones(nb))
    cols = np.kron(np.ones(na), np.eye(nb))
    a_eq = np.vstack([rows, cols[:-1]])
    b_eq = np.concatenate([pa, pb[:-1]])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun)


def estimate_em(run_a, run_b, w_a, w_b, n_runs: int, mode: str = "coupled", seed: int = 0) -> float:
    """EM estimate between two samplers (callables seed -> vertex set)."""
    n = len(w_a)
    seeds = replication_seeds(seed, n_runs)
    a = np.zeros((n_runs, n), dtype=bool)
    b = np.zeros((n_runs, n), dtype=bool)
    for i, s in enumerate(seeds.tolist()):
        a[i, list(run_a(s))] = True
        b[i, list(run_b(s))] = True
    if mode == "coupled":
        return coupled_em(a, w_a, b, w_b)[0]
    if mode == "ot":
        return ot_em(a, w_a, b, w_b)
    raise ValueError(f"unknown mode {mode!r}")


def min_positive_opt(table: DPTable) -> float:
    best = math.inf
    for row in table.cells:
        for c in row.values():
            if c.opt is not None and 0 < c.opt < best:
                best = c.opt
    return best


def theory_line(h: int, eps_node: float, p_max: int) -> float:
    """31 h / eps * log(2 p_max / eps), the Lipschitz constant of the soft DP."""
    return 31.0 * h / eps_node * math.log(2.0 * p_max / eps_node)


@dataclass
class CouplingReport:
    u: int
    delta: float
    em_coupled: float
    se_coupled: float
    em_ot: float | None
    n_runs: int
    flagged: bool = False

    @property
    def em_per_delta(self) -> float:
        return self.em_coupled / self.delta if self.delta > 0 else 0.0


@dataclass
class SweepResult:
    problem: str
    eps_total: float
    eps_node: float
    height: int
    p_max: int
    deltas: list
    rows: list = field(default_factory=list)

    @property
    def theory_bound(self) -> float:
        return theory_line(self.height, self.eps_node, self.p_max)

    @property
    def max_em_per_delta(self) -> float:
        return max((r.em_per_delta for r in self.rows if not r.flagged), default=0.0)


def lipschitz_sweep(g: Graph, w, problem: str, eps: float, delta_grid=None, n_runs: int = 1000,
                    seed: int = 0, ot: bool = False, hard: bool = False, threads: int = 1,
                    prepared: Prepared | None = None, vertices=None) -> SweepResult:
    """EM(DP_w, DP_{w + delta 1_u}) / delta over vertices u and the delta grid.

    Deltas are expressed as multiples of (and clamped to) the smallest
    positive cell value of the unperturbed table.
    """
    w = as_weights(w, g.n)
    spec = get_spec(problem)
    prep = prepared if prepared is not None else prepare(g)
    base = compute_opt(prep.pt, spec, w)
    eps_node = epsilon_schedule(eps, prep.pt, spec.direction)
    scale = min_positive_opt(base)
    if not math.isfinite(scale):
        scale = 1.0
    if delta_grid is None:
        deltas = [f * scale for f in (1e-3, 1e-2, 1e-1)]
    else:
        deltas = [min(float(d), scale) for d in delta_grid]
    seeds = replication_seeds(seed, n_runs)
    result = SweepResult(problem, eps, eps_node, prep.pt.height, base.p_max, deltas)
    if base.root_opt is None:
        result.rows = [CouplingReport(u, d, math.nan, math.nan, None, n_runs, True)
                       for u in range(g.n) for d in deltas]
        return result
    xa = run_batch(base, eps_node, seeds, hard=hard)
    us = list(range(g.n)) if vertices is None else list(vertices)

    def one(u):
        out = []
        for d in deltas:
            w2 = perturb(w, u, d)
            t2 = compute_opt(prep.pt, spec, w2)
            if t2.root_opt is None:
                out.append(CouplingReport(u, d, math.nan, math.nan, None, n_runs, True))
                continue
            xb = xa if d == 0 else run_batch(t2, eps_node, seeds, hard=hard)
            em, se = coupled_em(xa, w, xb, w2)
            em_ot = ot_em(xa, w, xb, w2) if ot else None
            out.append(CouplingReport(u, d, em, se, em_ot, n_runs))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(one, us))
    else:
        chunks = [one(u) for u in us]
    result.rows = [r for chunk in chunks for r in chunk]
    return result


@dataclass
class ApproxReport:
    problem: str
    eps: float
    opt: float
    mean: float
    se: float
    n_runs: int
    direction: str

    @property
    def bound(self) -> float:
        return (1 - self.eps) * self.opt if self.direction == "max" else (1 + self.eps) * self.opt

    @property
    def holds(self) -> bool:
        if self.direction == "max":
            return self.mean >= self.bound - 3 * self.se
        return self.mean <= self.bound + 3 * self.se

    @property
    def ci(self) -> tuple[float, float]:
        return self.mean - 1.96 * self.se, self.mean + 1.96 * self.se

    @property
    def ratio(self) -> float:
        return self.mean / self.opt if self.opt > 0 else 1.0


def approx_sweep(g: Graph, w, problem: str, eps: float, n_runs: int = 2000, seed: int = 0,
                 hard: bool = False, prepared: Prepared | None = None, opt: float | None = None) -> ApproxReport:
    """Mean output weight over seeded runs against the (1 -/+ eps) opt line."""
    w = as_weights(w, g.n)
    spec = get_spec(problem)
    prep = prepared if prepared is not None else prepare(g)
    table = compute_opt(prep.pt, spec, w)
    if table.root_opt is None:
        raise ValueError("instance is infeasible")
    if opt is None:
        try:
            opt = brute_force_opt(g, w, problem)[0]
        except OracleRefusal:
            opt = table.root_opt
    eps_node = epsilon_schedule(eps, prep.pt, spec.direction)
    x = run_batch(table, eps_node, replication_seeds(seed, n_runs), hard=hard)
    mean, se = mean_se(x.astype(np.float64) @ w)
    return ApproxReport(problem, eps, float(opt), mean, se, n_runs, spec.direction)


def tie_instance(k: int) -> tuple[Graph, np.ndarray]:
    """P_{2k+1} whose even and odd classes both weigh k+1: exactly two optimal sets."""
    if k < 1:
        raise ValueError("k must be positive")
    n = 2 * k + 1
    w = np.array([1.0 if v % 2 == 0 else (k + 1) / k for v in range(n)])
    return path_graph(n), as_weights(w)


def tie_flip_vertex(g: Graph, w, prepared: Prepared | None = None) -> int:
    """Middle-most vertex of the class the exact (hard) DP did not choose."""
    prep = prepared if prepared is not None else prepare(g)
    table = compute_opt(prep.pt, get_spec("mwis"), w)
    x = run_batch(table, 1.0, np.zeros(1, dtype=np.uint64), hard=True)[0]
    chosen_even = bool(x[0])
    other = [v for v in range(g.n) if (v % 2 == 0) != chosen_even]
    mid = (g.n - 1) / 2
    return min(other, key=lambda v: (abs(v - mid), v))
