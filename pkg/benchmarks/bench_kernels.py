"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from lipdp import kernels
from lipdp.graph import as_weights
from lipdp.lab import tie_instance


def cases(rng):
    seeds = rng.integers(0, 2**63, 200_000, dtype=np.uint64)
    vals = rng.uniform(0, 10, 8)
    cs = rng.uniform(1, 50, 200_000)
    us = rng.random(200_000)
    g, w = tie_instance(9)  # path on 19 vertices
    adj = [sum(1 << u for u in g.adj[v]) for v in range(g.n)]
    w = as_weights(w)
    return {
        "keyed_uniforms (2e5 seeds)": lambda k: k.keyed_uniforms(seeds, 17, 3, 1),
        "gibbs_pick (p=8, 2e5 draws)": lambda k: k.gibbs_pick(vals, cs, us, 1.0, 10.0),
        "brute_force mwis n=19": lambda k: k.brute_force(kernels.MWIS, g.n, adj, None, w),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = ["python"] + (["compiled"] if kernels.compiled_available() else [])
    if len(names) == 1:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'kernel':30s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for label, fn in cases(np.random.default_rng(0)).items():
        best = [min(timeit.repeat(lambda: fn(kernels.backend(n)), number=1, repeat=args.repeat)) for n in names]
        line = f"{label:30s}" + "".join(f"{t * 1e3:10.2f}ms" for t in best)
        if len(best) == 2:
            line += f"{best[0] / best[1]:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
