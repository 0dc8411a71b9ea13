from lipdp.treedecomp import chain_decomposition


def grid_path_decomposition(rows, cols):
    """Width-``rows`` path decomposition of grid_graph(rows, cols), sweeping column by column."""
    order = [r * cols + c for c in range(cols) for r in range(rows)]
    n = len(order)
    if n <= rows + 1:
        return chain_decomposition([order])
    return chain_decomposition([order[t:t + rows + 1] for t in range(n - rows)])


def dyadic_weights(rng, n, top=10.0):
    """Weights in [0, top] on a 2^-10 grid, so every subset sum is exact in floating point."""
    return rng.integers(0, int(top * 1024) + 1, n) / 1024.0


def random_small_graph(rng, n_max=14, width_max=4):
    """Random G(n, p) with n <= n_max whose heuristic decomposition has width <= width_max."""
    from lipdp.graph import random_graph
    from lipdp.treedecomp import decompose_heuristic

    while True:
        g = random_graph(int(rng.integers(1, n_max + 1)), float(rng.uniform(0.1, 0.5)), rng)
        if decompose_heuristic(g).width <= width_max:
            return g


def random_cnf(rng, max_vars=12, max_clauses=20):
    from lipdp.problems import MaxOnesInstance

    nv = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_clauses + 1))
    clauses = []
    for _ in range(m):
        size = int(rng.integers(1, 4))
        vs = rng.choice(nv, size=min(size, nv), replace=False)
        clauses.append(tuple(int(v + 1) * int(rng.choice([-1, 1])) for v in vs))
    return MaxOnesInstance(nv, tuple(clauses))
