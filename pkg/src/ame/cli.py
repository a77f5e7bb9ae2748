"""Command-line front end: scenario ingestion, subcommand dispatch, reports and figures.

Exit codes: 0 success, 1 scenario validation failure, 2 solver failure,
3 property or acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import plots, repro, suite
from .distributions import OrderStatistics
from .equilibrium import one_sided_limits, solve_bidding
from .errors import AmeError, NotRegular, ParseError, SchemaError, ValidationError
from .game import best_response, iterated_best_response
from .market import Kind, normalize
from .revenue import myerson_benchmark, revenue_report
from .scenario import parse_scenario, scenario_hash
from .simulation import SimConfig, estimate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_PROPERTY = 3


def _load(args, tol_is_solver=True):
    sc = parse_scenario(args.scenario)
    solver = sc.solver
    if tol_is_solver and getattr(args, "tol", None) is not None:
        solver = type(solver)(grid_size=solver.grid_size, root_tol=args.tol,
                              regularity_grid=solver.regularity_grid)
    return sc, solver


def _record(subcommand, sc, result):
    return {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "subcommand": subcommand,
        "scenario_hash": scenario_hash(sc),
        "result": result,
    }


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _sidecar(out, suffix):
    p = Path(out)
    return p.with_suffix(suffix)


def _beta_summary(beta):
    return {
        "breakpoints": [None if not math.isfinite(b) else b for b in beta.breakpoints],
        "segments": [
            {"lo": s.lo, "hi": None if not math.isfinite(s.hi) else s.hi,
             "form": s.form.value, "start_bid": s.start_bid,
             "active_fp_share": s.active_fp_share, "active_sp_share": s.active_sp_share}
            for s in beta.segments
        ],
        "one_sided_limits": [
            list(one_sided_limits(beta, ell)) for ell in range(1, len(beta.breakpoints) + 1)
        ],
        "never_sells": list(beta.never_sells),
        "flags": list(beta.flags),
    }


def _cmd_solve(args):
    sc, solver = _load(args)
    beta = solve_bidding(sc.market, solver)
    summary = _beta_summary(beta)
    print(f"solved {len(beta.segments)} segment(s); "
          f"breakpoints: {[round(b, 6) if math.isfinite(b) else 'never' for b in beta.breakpoints]}")
    for w in sc.warnings + beta.flags:
        print(f"  warning: {w}")
    if args.out:
        _write_json(args.out, _record("solve", sc, summary))
    return EXIT_OK


def _cmd_emit_bidding(args):
    sc, solver = _load(args)
    beta = solve_bidding(sc.market, solver)
    lo = sc.market.dist.support[0]
    hi = sc.market.dist.trunc_hi
    vs = np.linspace(lo, hi, args.grid or 512)
    bids = np.asarray(beta.eval(vs))
    rows = list(zip(vs.tolist(), bids.tolist()))
    if args.out:
        out = Path(args.out)
        with out.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["v", "beta"])
            writer.writerows(rows)
        _write_json(_sidecar(out, ".json"), _record("emit-bidding", sc, _beta_summary(beta)))
        plots.bidding_figure(beta, _sidecar(out, ".png"))
        print(f"wrote {out}, {_sidecar(out, '.json')}, {_sidecar(out, '.png')}")
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(["v", "beta"])
        writer.writerows(rows)
    return EXIT_OK


def _cmd_revenue(args):
    sc, solver = _load(args)
    report = revenue_report(sc.market, solver)
    os_ = OrderStatistics(sc.market.n_bidders, sc.market.dist)
    try:
        bench = myerson_benchmark(os_, solver)
    except NotRegular:
        bench = None
    print(f"{'exchange':>9} {'kind':>5} {'reserve':>8} {'revenue':>10} {'welfare':>10}")
    for (i, rev), (_, wel) in zip(report.per_exchange, report.per_exchange_welfare):
        ex = sc.market.exchanges[i]
        print(f"{i:>9} {ex.kind.value:>5} {ex.reserve:>8.4f} {rev:>10.6f} {wel:>10.6f}")
    print(f"weighted total {report.weighted_total:.6f} | welfare {report.welfare:.6f} "
          f"| sale probability {report.sale_probability:.6f}"
          + (f" | optimal benchmark {bench:.6f}" if bench is not None else ""))
    payload = {
        "per_exchange": [[i, r] for i, r in report.per_exchange],
        "weighted_total": report.weighted_total,
        "welfare": report.welfare,
        "sale_probability": report.sale_probability,
        "per_exchange_welfare": [[i, w] for i, w in report.per_exchange_welfare],
        "myerson": bench,
    }
    if args.out:
        out = Path(args.out)
        _write_json(out, _record("revenue", sc, payload))
        with _sidecar(out, ".csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["exchange", "kind", "reserve", "revenue", "welfare"])
            for (i, rev), (_, wel) in zip(report.per_exchange, report.per_exchange_welfare):
                ex = sc.market.exchanges[i]
                writer.writerow([i, ex.kind.value, ex.reserve, rev, wel])
        plots.revenue_figure(report, bench, _sidecar(out, ".png"))
    return EXIT_OK


def _cmd_simulate(args):
    sc, solver = _load(args)
    sim = sc.sim
    samples = args.samples or (sim.samples if sim else 1_000_000)
    seed = args.seed if args.seed is not None else (sim.seed if sim else 1)
    ncfg, _ = normalize(sc.market)
    beta = solve_bidding(ncfg, solver)
    rep = estimate(SimConfig(samples, seed, ncfg, beta))
    print(f"{'exchange':>9} {'mean':>10} {'stderr':>10}")
    for j, (m, se) in enumerate(zip(rep.per_exchange_mean, rep.per_exchange_stderr)):
        print(f"{j:>9} {m:>10.6f} {se:>10.2e}")
    print(f"welfare {rep.welfare_mean:.6f} | sale rate {rep.sale_rate:.6f} "
          f"| samples {rep.samples} | seed {seed}")
    payload = {
        "per_exchange_mean": list(rep.per_exchange_mean),
        "per_exchange_stderr": list(rep.per_exchange_stderr),
        "welfare_mean": rep.welfare_mean,
        "sale_rate": rep.sale_rate,
        "samples": rep.samples,
        "seed": seed,
    }
    if args.out:
        _write_json(args.out, _record("simulate", sc, payload))
    return EXIT_OK


def _parse_kinds(text):
    kinds = []
    for token in text.split(","):
        token = token.strip().lower()
        if token == "fp":
            kinds.append(Kind.FIRST_PRICE)
        elif token == "sp":
            kinds.append(Kind.SECOND_PRICE)
        elif token:
            raise ValidationError(f"--kinds: expected fp or sp, got {token!r}")
    return tuple(kinds) or (Kind.FIRST_PRICE, Kind.SECOND_PRICE)


def _cmd_best_response(args):
    sc, solver = _load(args)
    br = best_response(sc.market, args.exchange, kinds=_parse_kinds(args.kinds),
                       coarse=args.grid or 64, options=solver)
    print(f"exchange {br.exchange}: best {br.best_kind.value} reserve {br.best_reserve:.6f} "
          f"revenue {br.best_revenue:.6f}")
    payload = {
        "exchange": br.exchange,
        "best_kind": br.best_kind.value,
        "best_reserve": br.best_reserve,
        "best_revenue": br.best_revenue,
    }
    if args.out:
        out = Path(args.out)
        _write_json(out, _record("best-response", sc, payload))
        with _sidecar(out, ".csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "reserve", "revenue"])
            for kind, curve in br.revenue_curve.items():
                for r, rev in curve:
                    writer.writerow([kind, r, rev])
        plots.best_response_figure(br, _sidecar(out, ".png"))
    return EXIT_OK


def _cmd_equilibrium(args):
    # here --tol is the equilibrium acceptance tolerance, not a solver override
    sc, solver = _load(args, tol_is_solver=False)
    res = iterated_best_response(
        sc.market, max_iters=args.max_iters, tol=args.tol or 1e-5,
        kinds=_parse_kinds(args.kinds), coarse=args.grid or 64, options=solver)
    status = "converged" if res.converged else "did not converge"
    print(f"{status} after {res.iterations} round(s); max unilateral gain {res.max_gain:.2e}")
    for r, k, rev in zip(res.reserves, res.kinds, res.revenues):
        print(f"  {k.value} reserve {r:.6f} revenue {rev:.6f}")
    payload = {
        "reserves": list(res.reserves),
        "kinds": [k.value for k in res.kinds],
        "revenues": list(res.revenues),
        "iterations": res.iterations,
        "converged": res.converged,
        "max_gain": res.max_gain,
        "history": [list(h) for h in res.history],
    }
    if args.out:
        out = Path(args.out)
        _write_json(out, _record("equilibrium", sc, payload))
        plots.equilibrium_figure(res, _sidecar(out, ".png"))
    return EXIT_OK


def _cmd_verify(args):
    sections = [
        ("fp dominance (every reserve)", suite.run_fp_dominance()),
        ("zero reserve unstable", suite.run_zero_reserve_gain()),
        ("common reserve unstable", suite.run_common_reserve_instability()),
        ("equilibrium vs optimal auction", [suite.run_equilibrium_vs_optimal()]),
        ("best-response grid stability", [suite.run_best_response_stability()]),
        ("analytic no-regret", suite.run_regret_suite()),
        ("oracle agreement", suite.run_oracle_suite(samples=args.samples or 200_000, sigmas=4.0)),
    ]
    lines = ["| section | case | metric | pass |", "|---|---|---|---|"]
    all_ok = True
    payload = {}
    for title, records in sections:
        payload[title] = records
        for rec in records:
            ok = rec.get("passed", False)
            all_ok = all_ok and ok
            name = rec.get("name", "-")
            metric = rec.get("margin", rec.get("gain", rec.get(
                "derivative", rec.get("regret", rec.get("worst_z", rec.get("delta"))))))
            metric = "-" if metric is None else f"{metric:.3g}"
            lines.append(f"| {title} | {name} | {metric} | {'yes' if ok else 'NO'} |")
    summary = "\n".join(lines)
    print(summary)
    print(f"\nverify: {'all properties hold' if all_ok else 'PROPERTY FAILURES'}")
    if args.out:
        out = Path(args.out)
        _write_json(out, {"sections": payload, "all_passed": all_ok})
        _sidecar(out, ".md").write_text(summary + "\n", encoding="utf-8")
    return EXIT_OK if all_ok else EXIT_PROPERTY


def _cmd_repro(args):
    solver = None
    if args.tol is not None or args.grid is not None:
        from .equilibrium import SolverOptions
        solver = SolverOptions(
            grid_size=args.grid or SolverOptions().grid_size,
            root_tol=args.tol or SolverOptions().root_tol)
    ok, results = repro.run_repro_suite(only=args.only, options=solver)
    if args.only and not results:
        print(f"unknown criterion id {args.only!r}; known: "
              + ", ".join(cid for cid, *_ in repro.CRITERIA), file=sys.stderr)
        return EXIT_VALIDATION
    if args.out:
        _write_json(args.out, repro.report_dict(results))
    print(f"repro: {'all criteria pass' if ok else 'CRITERIA FAILED'}")
    return EXIT_OK if ok else EXIT_PROPERTY


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ame",
        description="Equilibrium bidding and exchange competition for mixed auction markets")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, scenario=True, **flag_spec):
        p = sub.add_parser(name)
        if scenario:
            p.add_argument("--scenario", required=True,
                           help="scenario JSON file (or inline JSON text)")
        p.add_argument("--out", default=None, help="output file basename (JSON report)")
        p.add_argument("--tol", type=float, default=None, help="solver tolerance override")
        p.set_defaults(fn=fn)
        for flag, spec in flag_spec.items():
            p.add_argument(flag, **spec)
        return p

    add("solve", _cmd_solve)
    add("emit-bidding", _cmd_emit_bidding,
        **{"--grid": dict(type=int, default=None, help="number of CSV grid points")})
    add("revenue", _cmd_revenue)
    add("simulate", _cmd_simulate,
        **{"--samples": dict(type=int, default=None),
           "--seed": dict(type=int, default=None)})
    add("best-response", _cmd_best_response,
        **{"--exchange": dict(type=int, default=0),
           "--kinds": dict(type=str, default="fp,sp"),
           "--grid": dict(type=int, default=None, help="coarse reserve grid size")})
    add("equilibrium", _cmd_equilibrium,
        **{"--kinds": dict(type=str, default="fp,sp"),
           "--max-iters": dict(type=int, default=40),
           "--grid": dict(type=int, default=None, help="coarse reserve grid size")})
    add("verify", _cmd_verify, scenario=False,
        **{"--samples": dict(type=int, default=None, help="oracle sample count")})
    add("repro", _cmd_repro, scenario=False,
        **{"--only": dict(type=str, default=None, help="run a single criterion id"),
           "--grid": dict(type=int, default=None, help="solver grid override")})
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, SchemaError, ValidationError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except AmeError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
