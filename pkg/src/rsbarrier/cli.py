"""Command-line surface: price, mc, factors, invert-demo, convergence.

Exit codes: 0 success, 2 configuration error, 3 numerical error.  All
numeric output is CSV.  The price pipeline evaluates the transform at the
inversion nodes (concurrently across nodes, results reduced in fixed node
order) and inverts per history; per-node evaluations are shared by all
histories through one cache.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import DEFAULTS, ProblemConfig, config_to_dict, load_config
from .engine import QPricer
from .errors import ConfigError, RsBarrierError
from .grids import build_grid
from .histories import encode
from .inversion import gwr_invert, gwr_nodes, sinh_invert, sinh_nodes
from .models import sinh_inversion_admissible
from .montecarlo import simulate_price
from .wiener_hopf import factorize


def _make_pricer(cfg: ProblemConfig) -> QPricer:
    models = [r.model for r in cfg.problem.regimes]
    grid = build_grid(cfg.problem.lower, cfg.problem.upper,
                      m_power=cfg.grid.m_power, domain_factor=cfg.grid.domain_factor,
                      models=models, damping_scale=cfg.grid.damping_scale,
                      damping_cap=cfg.grid.damping_cap, decay_tol=cfg.grid.decay_tol)
    return QPricer(cfg.problem, grid=grid,
                   tol_inner=cfg.tolerances.inner, tol_outer=cfg.tolerances.outer,
                   max_outer=cfg.tolerances.max_outer,
                   max_sweeps=cfg.tolerances.max_sweeps)


def _evaluate_nodes(pricer: QPricer, nodes, threads: int):
    """Transform vectors at every node, plus aggregated iteration stats."""
    results = [None] * len(nodes)

    def work(i):
        field = pricer.price_field(nodes[i])
        return field.at(pricer.problem.spot), field.stats

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, out in enumerate(pool.map(work, range(len(nodes)))):
                results[i] = out
    else:
        for i in range(len(nodes)):
            results[i] = work(i)
    values = {complex(nodes[i]): results[i][0] for i in range(len(nodes))}
    outer = max(len(r[1].outer_terms) for r in results)
    sweeps = max(r[1].max_inner_sweeps for r in results)
    return values, outer, sweeps


def run_price(cfg: ProblemConfig, all_histories: bool = False):
    """Price rows for the configured history (or all of them)."""
    problem = cfg.problem
    tau = problem.maturity
    start = time.perf_counter()
    if not problem.lower < problem.spot < problem.upper:
        codes = range(problem.chain.size) if all_histories else \
            [encode(problem.chain.m, problem.initial_history)]
        rows = [dict(history=c, price=0.0) for c in codes]
        return rows, {"outer": 0, "sweeps": 0,
                      "wall": time.perf_counter() - start, "warning": "spot outside band"}

    pricer = _make_pricer(cfg)
    threads = cfg.resolve_threads()
    plan = cfg.inversion
    if plan.backend == "sinh":
        for spec in problem.regimes:
            if not sinh_inversion_admissible(spec.model):
                print(f"warning: sinh back end not established for {spec.model}",
                      file=sys.stderr)
        splan = plan.materialize(tau)
        qs, _ = sinh_nodes(splan)
        half = (splan.n_nodes + 1) // 2
        eval_nodes = list(qs[half:])  # conjugate symmetry halves the work
        values, outer, sweeps = _evaluate_nodes(pricer, eval_nodes, threads)

        def invert_history(idx):
            def evaluator(q):
                qq = complex(q)
                if qq in values:
                    return complex(values[qq][idx])
                return complex(np.conj(values[np.conj(qq)][idx]))
            return sinh_invert(evaluator, tau, splan).value
        depth = splan.n_nodes
    else:
        qs = gwr_nodes(tau, plan.n_gaver)
        values, outer, sweeps = _evaluate_nodes(pricer, list(qs), threads)

        def invert_history(idx):
            samples = [values[complex(q)][idx].real for q in qs]
            return gwr_invert(samples, tau, plan.n_gaver,
                              plan.extended_precision).value
        depth = plan.n_gaver

    codes = range(problem.chain.size) if all_histories else \
        [encode(problem.chain.m, problem.initial_history)]
    rows = [dict(history=int(c), price=invert_history(int(c))) for c in codes]
    meta = {"backend": plan.backend, "depth": depth, "outer": outer,
            "sweeps": sweeps, "wall": time.perf_counter() - start}
    return rows, meta


def _write_csv(path, header, rows):
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path:
            out.close()


def _cmd_price(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    rows, meta = run_price(cfg, all_histories=args.all_histories)
    header = ["history", "price", "backend", "depth", "outer_terms",
              "max_inner_sweeps", "wall_time"]
    csv_rows = [[r["history"], repr(r["price"]), meta.get("backend", cfg.inversion.backend),
                 meta.get("depth", ""), meta.get("outer", ""), meta.get("sweeps", ""),
                 f"{meta['wall']:.3f}"] for r in rows]
    _write_csv(args.out, header, csv_rows)
    return 0


def _cmd_mc(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    res = simulate_price(cfg.problem, cfg.mc)
    _write_csv(args.out, ["estimate", "stderr", "paths", "dt", "seed", "wall_time"],
               [[repr(res.estimate), repr(res.stderr), res.paths, res.dt,
                 res.seed, f"{res.wall_time:.3f}"]])
    return 0


def _cmd_factors(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    model = cfg.problem.regimes[args.regime - 1].model
    grid = build_grid(cfg.problem.lower, cfg.problem.upper,
                      m_power=cfg.grid.m_power,
                      domain_factor=cfg.grid.domain_factor,
                      models=[r.model for r in cfg.problem.regimes])
    q_value = complex(args.q_value)
    fact = factorize(model, q_value, grid)
    cs = fact.contour_symbols(0.0)
    sym = cs.e_symbol
    resid = np.abs(cs.phi_plus * cs.phi_minus / sym - 1.0)
    order = np.argsort(grid.xi)
    rows = [[grid.xi[i], cs.phi_plus[i].real, cs.phi_plus[i].imag,
             cs.phi_minus[i].real, cs.phi_minus[i].imag, resid[i]]
            for i in order]
    _write_csv(args.out, ["xi", "re_phi_plus", "im_phi_plus",
                          "re_phi_minus", "im_phi_minus", "residual"], rows)
    return 0


def _cmd_invert_demo(args) -> int:
    pairs = [
        ("1/(q+1)@tau=1", lambda q: 1.0 / (q + 1.0), 1.0, math.exp(-1.0)),
        ("1/q@tau=1.5", lambda q: 1.0 / q, 1.5, 1.0),
        ("1/q^2@tau=2", lambda q: 1.0 / q**2, 2.0, 2.0),
    ]
    rows = []
    for name, fn, tau, truth in pairs:
        samples = fn(gwr_nodes(tau, 8))
        gwr = gwr_invert(list(np.atleast_1d(samples)), tau, 8).value
        from .inversion import sinh_plan
        plan = sinh_plan(tau, n_nodes=64)
        snh = sinh_invert(fn, tau, plan).value
        rows.append([name, repr(abs(gwr - truth)), repr(abs(snh - truth))])
    _write_csv(args.out, ["pair", "gwr_error", "sinh_error"], rows)
    return 0


def _cmd_convergence(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    rows = []
    prev = None
    for v in values:
        doc = json.loads(json.dumps(config_to_dict(cfg)))
        if args.param == "mPower":
            doc.setdefault("grid", {})["mPower"] = int(v)
        elif args.param == "nGaver":
            doc.setdefault("inversion", {})["nGaver"] = int(v)
        elif args.param == "tolOuter":
            doc.setdefault("tolerances", {})["outer"] = float(v)
        elif args.param == "memoryN":
            doc["chain"]["N"] = int(v)
            rates = cfg.raw.get("chain", {}).get("rates")
            rule_form = isinstance(rates, dict) and "rules" in rates
            if not rule_form and not isinstance(rates, (int, float)):
                raise ConfigError(
                    "memoryN ladders need rule-form (history-prefix) rates")
            if rule_form and any(len(r.get("history", [])) > 1
                                 for r in rates["rules"]):
                raise ConfigError(
                    "memoryN ladders need history-independent rates "
                    "(rule histories of length <= 1)")
            doc["chain"]["rates"] = rates
            init = doc["initialHistory"]
            head = init[0]
            labels = [head]
            for _ in range(int(v)):
                labels.append(1 if labels[-1] != 1 else 2)
            doc["initialHistory"] = labels
        else:
            raise ConfigError(f"unknown ladder parameter {args.param!r}")
        from .config import parse_config

        sub = parse_config(doc)
        out_rows, _ = run_price(sub)
        price = out_rows[0]["price"]
        diff = "" if prev is None else repr(abs(price - prev))
        rows.append([args.param, v, repr(price), diff])
        prev = price
    _write_csv(args.out, ["parameter", "value", "price", "successive_diff"], rows)
    return 0


def _apply_overrides(cfg: ProblemConfig, args) -> ProblemConfig:
    doc = config_to_dict(cfg)
    if getattr(args, "threads", None) is not None:
        doc["threads"] = args.threads
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    if getattr(args, "backend", None) is not None:
        doc.setdefault("inversion", {})["backend"] = args.backend
    from .config import parse_config

    out = parse_config(doc)
    out.raw = cfg.raw  # keep the user's document (preserves the rates form)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsbarrier",
        description="Double-barrier knock-out pricing under regime-switching "
                    "Levy models with memory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON problem file")
        p.add_argument("--out", default=None, help="CSV output path (default stdout)")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--backend", choices=["gwr", "sinh"], default=None)

    p = sub.add_parser("price", help="price via transform inversion")
    common(p)
    p.add_argument("--all-histories", action="store_true")
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("mc", help="Monte Carlo oracle estimate")
    common(p)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("factors", help="dump Wiener-Hopf factors on the grid")
    common(p)
    p.add_argument("--regime", type=int, default=1)
    p.add_argument("--q-value", default="1.0", help="spectral value, e.g. 2.0 or 3+4j")
    p.set_defaults(func=_cmd_factors)

    p = sub.add_parser("invert-demo", help="known-pair inversion error table")
    common(p, needs_config=False)
    p.set_defaults(func=_cmd_invert_demo)

    p = sub.add_parser("convergence", help="price ladder in one parameter")
    common(p)
    p.add_argument("--param", required=True,
                   choices=["mPower", "nGaver", "tolOuter", "memoryN"])
    p.add_argument("--values", required=True, help="comma-separated ladder")
    p.set_defaults(func=_cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RsBarrierError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
