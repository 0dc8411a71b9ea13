"""Command line front end: ``lipdp {solve,measure,baker,decompose}``.

Exit codes: 0 success, 1 usage or parse error, 2 infeasible instance,
3 oracle refusal.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import treedecomp as tdm
from .baker import plan, solve_layers, solve_mwis, solve_mwis_batch
from .dp import InfeasibleError, compute_opt, epsilon_schedule, run_batch
from .graph import as_weights, read_graph, read_weights, set_weight
from .lab import OracleRefusal, approx_sweep, brute_force_opt, lipschitz_sweep
from .pipeline import prepare
from .problems import PROBLEMS, build_incidence_graph, get_spec, read_dimacs, validate_solution
from .soft import SoftConfig, replication_seeds
from .svg import line_chart

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_ORACLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    inputs: list
    problem: str
    eps: list
    seed: int
    n_runs: int
    out: str | None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for e in self.eps:
            if not (0.0 < e <= 1.0):
                raise UsageError(f"eps must lie in (0, 1], got {e}")
        if self.n_runs < 1:
            raise UsageError("--runs must be at least 1")

    def config_hash(self) -> str:
        d = asdict(self)
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _eps_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}")


def _seed(args) -> int:
    env = os.environ.get("LIPDP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"LIPDP_SEED must be an integer, got {env!r}")
    return args.seed


def _load(args):
    """(graph, weights) for the requested problem."""
    if args.problem == "maxones":
        if not args.cnf:
            raise UsageError("--problem maxones needs --cnf")
        inst = read_dimacs(Path(args.cnf))
        wv = read_weights(args.weights, inst.num_vars) if args.weights else None
        return build_incidence_graph(inst, wv)
    if not args.graph:
        raise UsageError("--graph is required")
    g, w = read_graph(args.graph)
    if args.weights:
        w = read_weights(args.weights, g.n)
    if w is None:
        w = as_weights(np.ones(g.n))
    return g, w


def _write_csv(path: Path, header: list, rows: list, cfg: RunConfig) -> None:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([f"{v!r}" if isinstance(v, float) else v for v in r])
    buf.write(f"# version={__version__}, seed={cfg.seed}, config_hash={cfg.config_hash()}\n")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def _fmt_set(x) -> str:
    return "{" + ", ".join(str(v) for v in sorted(x)) + "}"


def cmd_solve(args) -> int:
    g, w = _load(args)
    cfg = RunConfig("solve", [args.graph or args.cnf], args.problem, args.eps[:1], _seed(args), args.runs, args.out,
                    {"deterministic": args.deterministic})
    spec = get_spec(args.problem)
    prep = prepare(g)
    table = compute_opt(prep.pt, spec, w)
    if table.root_opt is None:
        print("infeasible")
        return EXIT_INFEASIBLE
    eps_node = epsilon_schedule(cfg.eps[0], prep.pt, spec.direction)
    seeds = replication_seeds(cfg.seed, cfg.n_runs)
    xs = run_batch(table, eps_node, seeds, hard=args.deterministic)
    x = frozenset(np.flatnonzero(xs[0]).tolist())
    if not validate_solution(args.problem, g, x):
        print("internal error: solution failed validation", file=sys.stderr)
        return EXIT_INFEASIBLE
    weights = xs.astype(np.float64) @ w
    print(f"problem={args.problem} n={g.n} m={g.m}")
    print(f"width={prep.width} td_height={prep.td_height} term_height={prep.term_height} p_max={table.p_max}")
    print(f"opt={table.root_opt!r} eps={cfg.eps[0]} eps_node={eps_node!r}")
    print(f"solution={_fmt_set(x)}")
    print(f"weight={set_weight(x, w)!r}")
    if cfg.n_runs > 1:
        print(f"mean_weight={float(weights.mean())!r} runs={cfg.n_runs}")
    if args.out:
        rows = [[i, float(weights[i]), " ".join(str(v) for v in np.flatnonzero(xs[i]))] for i in range(cfg.n_runs)]
        _write_csv(Path(args.out), ["run", "weight", "solution"], rows, cfg)
    return EXIT_OK


def cmd_measure(args) -> int:
    g, w = _load(args)
    deltas = [float(t) for t in args.deltas.split(",")] if args.deltas else None
    cfg = RunConfig("measure", [args.graph or args.cnf], args.problem, args.eps, _seed(args), args.runs, args.out,
                    {"sweep": args.sweep, "deltas": deltas, "ot": args.ot, "deterministic": args.deterministic})
    out = Path(args.out or ".")
    prep = prepare(g)
    if compute_opt(prep.pt, get_spec(args.problem), w).root_opt is None:
        print("infeasible")
        return EXIT_INFEASIBLE
    if args.sweep == "lipschitz":
        header = ["eps", "u", "delta", "mode", "em", "em_per_delta", "n_runs", "theory_bound"]
        rows, chart = [], {"max em/delta": [], "theory line": []}
        for eps in cfg.eps:
            res = lipschitz_sweep(g, w, args.problem, eps, deltas, cfg.n_runs, cfg.seed, ot=args.ot,
                                  hard=args.deterministic, threads=args.threads, prepared=prep)
            for r in res.rows:
                rows.append([eps, r.u, r.delta, "coupled", r.em_coupled, r.em_per_delta, r.n_runs, res.theory_bound])
                if args.ot:
                    ot_pd = r.em_ot / r.delta if r.em_ot is not None and r.delta > 0 else 0.0
                    rows.append([eps, r.u, r.delta, "ot", r.em_ot, ot_pd, r.n_runs, res.theory_bound])
            chart["max em/delta"].append((eps, res.max_em_per_delta))
            chart["theory line"].append((eps, res.theory_bound))
            print(f"eps={eps} max_em_per_delta={res.max_em_per_delta:.6g} theory_bound={res.theory_bound:.6g} "
                  f"height={res.height} p_max={res.p_max}")
        csv_path = out / "lipschitz.csv"
        _write_csv(csv_path, header, rows, cfg)
        if args.svg:
            line_chart(chart, out / "lipschitz.svg", "Lipschitz estimate", "eps", "em / delta", log_y=True)
    else:
        header = ["problem", "eps", "opt", "mean", "se", "ci_low", "ci_high", "bound", "n_runs", "holds"]
        rows, chart = [], {"mean weight": [], "bound": [], "opt": []}
        opt = None
        try:
            opt = brute_force_opt(g, w, args.problem)[0]
        except OracleRefusal as exc:
            if args.require_oracle:
                print(f"oracle refused: {exc}", file=sys.stderr)
                return EXIT_ORACLE
            print(f"oracle refused ({exc}); using the exact DP value", file=sys.stderr)
        for eps in cfg.eps:
            rep = approx_sweep(g, w, args.problem, eps, cfg.n_runs, cfg.seed, hard=args.deterministic,
                               prepared=prep, opt=opt)
            lo, hi = rep.ci
            rows.append([args.problem, eps, rep.opt, rep.mean, rep.se, lo, hi, rep.bound, rep.n_runs, int(rep.holds)])
            chart["mean weight"].append((eps, rep.mean))
            chart["bound"].append((eps, rep.bound))
            chart["opt"].append((eps, rep.opt))
            print(f"eps={eps} opt={rep.opt:.6g} mean={rep.mean:.6g} se={rep.se:.3g} bound={rep.bound:.6g} holds={rep.holds}")
        csv_path = out / "approx.csv"
        _write_csv(csv_path, header, rows, cfg)
        if args.svg:
            line_chart(chart, out / "approx.svg", "Approximation", "eps", "weight")
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_baker(args) -> int:
    if args.problem != "mwis":
        raise UsageError("baker supports --problem mwis only")
    g, w = _load(args)
    cfg = RunConfig("baker", [args.graph], "mwis", args.eps[:1], _seed(args), args.runs, args.out,
                    {"root": args.root, "deterministic": args.deterministic})
    if g.n and not 0 <= args.root < g.n:
        raise UsageError(f"--root {args.root} is not a vertex")
    eps = cfg.eps[0]
    bp = plan(g, args.root, eps)
    ls = solve_layers(g, w, bp)
    seeds = replication_seeds(cfg.seed, cfg.n_runs)
    x = solve_mwis(g, w, args.root, eps, SoftConfig(1.0, seed=int(seeds[0]), hard=args.deterministic), layers=ls)
    xs, picks = solve_mwis_batch(ls, seeds, hard=args.deterministic)
    ok = validate_solution("mwis", g, x) and all(validate_solution("mwis", g, np.flatnonzero(r)) for r in xs)
    print(f"m={bp.m} root={args.root} layers={len(bp.layers)}")
    print("layer_opts=" + " ".join(f"{v!r}" for v in ls.opts.tolist()))
    print("layer_widths=" + " ".join(str(v) for v in ls.widths) + f" (reference bound 3m-2={3 * bp.m - 2})")
    print(f"chosen_layer={int(picks[0])}")
    print(f"solution={_fmt_set(x)}")
    print(f"weight={set_weight(x, w)!r} independent={ok}")
    if cfg.n_runs > 1:
        print(f"mean_weight={float((xs.astype(np.float64) @ w).mean())!r} runs={cfg.n_runs}")
    if args.out:
        weights = xs.astype(np.float64) @ w
        rows = [[i, int(picks[i]), float(weights[i])] for i in range(cfg.n_runs)]
        _write_csv(Path(args.out), ["run", "layer", "weight"], rows, cfg)
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_decompose(args) -> int:
    g, _ = read_graph(args.graph)
    td0 = tdm.decompose_heuristic(g)
    mode = args.balance
    if mode == "auto":
        do_balance = td0.height > tdm.height_bound(g.n)
    else:
        do_balance = mode == "always"
    td = tdm.balance(td0) if do_balance else tdm.binarize(td0)
    tdm.require_valid(td, g)
    print(f"n={g.n} m={g.m}")
    print(f"width_before={td0.width} height_before={td0.height}")
    print(f"width_after={td.width} height_after={td.height} balanced={do_balance}")
    print(f"height_bound={tdm.height_bound(g.n):.4g} width_bound={3 * td0.width + 2}")
    if args.out:
        td.save(args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lipdp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, eps_default="0.5"):
        sp.add_argument("--graph", help="edge-list graph file")
        sp.add_argument("--cnf", help="DIMACS CNF file (max-ones)")
        sp.add_argument("--weights", help="whitespace-separated weights (variables for max-ones)")
        sp.add_argument("--problem", choices=PROBLEMS, default="mwis")
        sp.add_argument("--eps", type=_eps_list, default=_eps_list(eps_default))
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--runs", type=int, default=1)
        sp.add_argument("--deterministic", action="store_true", help="exact (hard) selectors")
        sp.add_argument("--out")

    s = sub.add_parser("solve", help="run the randomized DP")
    common(s)
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("measure", help="Lipschitz or approximation sweep")
    common(m)
    m.add_argument("--sweep", choices=("lipschitz", "approx"), default="lipschitz")
    m.add_argument("--deltas", help="comma-separated perturbation sizes (default: scaled grid)")
    m.add_argument("--ot", action="store_true", help="also report optimal-transport EM")
    m.add_argument("--svg", action="store_true")
    m.add_argument("--threads", type=int, default=1)
    m.add_argument("--require-oracle", action="store_true", help="exit 3 instead of falling back to the DP value")
    m.set_defaults(func=cmd_measure, runs=1000)

    b = sub.add_parser("baker", help="layered independent set")
    common(b)
    b.add_argument("--root", type=int, default=0)
    b.set_defaults(func=cmd_baker)

    d = sub.add_parser("decompose", help="tree decomposition with balancing")
    d.add_argument("--graph", required=True)
    d.add_argument("--balance", choices=("auto", "always", "never"), default="always")
    d.add_argument("--out")
    d.set_defaults(func=cmd_decompose)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OracleRefusal as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
