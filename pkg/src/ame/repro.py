"""Reproduction harness: every golden number and property gate, with budgets.

Each criterion prints one PASS/FAIL line plus expected-vs-computed detail and
feeds a machine-readable report. Exit is nonzero when anything fails.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import suite
from .distributions import OrderStatistics, ValueDistribution
from .equilibrium import solve_bidding
from .game import exchange_revenue, iterated_best_response, symmetric_instability
from .market import Kind, MarketConfig, fp, sp
from .revenue import myerson_benchmark, revenue_report, welfare_above

_U = ValueDistribution.uniform(0.0, 1.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    expected: float
    computed: float
    tol: float

    @property
    def passed(self):
        if math.isnan(self.computed):
            return False
        return abs(self.computed - self.expected) <= self.tol

    @property
    def delta(self):
        return self.computed - self.expected


@dataclass(frozen=True)
class BoolCheck:
    name: str
    computed: float
    passed: bool
    expected: float = math.nan
    tol: float = math.nan

    @property
    def delta(self):
        return math.nan


@dataclass
class CriterionResult:
    cid: str
    title: str
    budget: float
    seconds: float = 0.0
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


_IBR_CACHE: dict = {}


def _uniform_equilibrium(options):
    key = options
    if key not in _IBR_CACHE:
        cfg0 = MarketConfig(2, _U, (fp(0.5, 0.0), fp(0.5, 0.0)))
        _IBR_CACHE[key] = iterated_best_response(
            cfg0, max_iters=40, tol=1e-5, kinds=(Kind.FIRST_PRICE,), options=options)
    return _IBR_CACHE[key]


def _run_cor3(options):
    deviated = MarketConfig(2, _U, (fp(0.5, 0.1), fp(0.5, 0.0)))
    base = MarketConfig(2, _U, (fp(0.5, 0.0), fp(0.5, 0.0)))
    return [
        CheckResult("revenue with reserve 0.1 against zero", 0.3402,
                    exchange_revenue(deviated, 0, options), 5e-4),
        CheckResult("baseline zero-reserve revenue", 1.0 / 3.0,
                    exchange_revenue(base, 0, options), 1e-6),
    ]


def _run_cor4(options):
    checks = []
    for r in (0.1, 0.3, 0.5, 0.7, 0.9):
        cfg = MarketConfig(2, _U, (fp(0.5, r), fp(0.5, r)))
        der = symmetric_instability(cfg, options=options)
        checks.append(CheckResult(f"own-reserve derivative at r={r}", -2.0 * r * r, der, 1e-3))
    return checks


def _run_cor5(options):
    res = _uniform_equilibrium(options)
    bench = myerson_benchmark(OrderStatistics(2, _U), options)
    weighted = 0.5 * sum(res.revenues)
    checks = [
        CheckResult("lower equilibrium reserve", 0.2402, res.reserves[0], 5e-3),
        CheckResult("upper equilibrium reserve", 0.3157, res.reserves[1], 5e-3),
        CheckResult("lower-reserve exchange revenue", 0.397, res.revenues[0], 2e-3),
        CheckResult("upper-reserve exchange revenue", 0.378, res.revenues[1], 2e-3),
        CheckResult("weighted total revenue", 0.3875, weighted, 2e-3),
        CheckResult("optimal single-auction benchmark", 5.0 / 12.0, bench, 1e-6),
        BoolCheck("equilibrium total below optimal", bench - weighted,
                  bool(weighted < bench)),
        BoolCheck("iterated best response converged", res.max_gain, res.converged),
    ]
    return checks


def _run_welfare(options):
    res = _uniform_equilibrium(options)
    eq_cfg = MarketConfig(2, _U, tuple(fp(0.5, r) for r in res.reserves))
    beta = solve_bidding(eq_cfg, options)
    a_top = max(beta.breakpoints)
    report = revenue_report(eq_cfg, options)
    os_ = OrderStatistics(2, _U)
    w_opt = welfare_above(os_, 0.5)
    return [
        CheckResult("upper breakpoint at equilibrium", 0.369, a_top, 5e-3),
        BoolCheck("market welfare above optimal-auction welfare",
                  report.welfare - w_opt, bool(report.welfare > w_opt)),
    ]


def _run_proposition(options):
    rng = np.random.default_rng(20240817)
    worst = 0.0
    worst_pair = None
    for _ in range(20):
        r1 = rng.uniform(0.02, 0.68)
        r2 = rng.uniform(r1 + 0.01, min(0.74, (3.0 + r1 * r1) / 4.0 - 0.02))
        a = (2.0 * r2 + math.sqrt(4.0 * r2 * r2 - 3.0 * r1 * r1)) / 3.0
        c = 2.0 * a * r2 - a * a
        cfg = MarketConfig(2, _U, (fp(0.5, r1), fp(0.5, r2)))
        beta = solve_bidding(cfg, options)
        vs = np.linspace(r1, 1.0, 801)
        vs = vs[np.abs(vs - a) > 1e-9]
        ref = np.where(vs < a, (vs * vs + r1 * r1) / (2 * vs), (vs * vs + c) / (2 * vs))
        err = float(np.max(np.abs(beta.eval(vs) - ref)))
        if err > worst:
            worst, worst_pair = err, (r1, r2)
    return [CheckResult(
        f"sup-norm against two-segment formulas (worst pair {worst_pair})",
        0.0, worst, 1e-7)]


def _run_thm1(options):
    checks = []
    for theta in (0.25, 0.5, 0.75):
        cfg = MarketConfig(2, _U, (fp(theta, 0.0), sp(1.0 - theta, 0.0)))
        report = revenue_report(cfg, options)
        revs = dict(report.per_exchange)
        checks.append(CheckResult(
            f"constant pie at fp share {theta}", 1.0 / 3.0, report.weighted_total, 1e-5))
        checks.append(BoolCheck(
            f"fp >= total >= sp at fp share {theta}",
            revs[0] - revs[1],
            bool(revs[0] >= report.weighted_total - 1e-12
                 and report.weighted_total >= revs[1] - 1e-12)))
    return checks


def _run_thm2(options):
    records = suite.run_fp_dominance(options)
    return [BoolCheck(f"fp dominance margin {r['name']}", r["margin"], r["passed"])
            for r in records]


def _run_thm3(options):
    records = suite.run_zero_reserve_gain(options)
    return [BoolCheck(f"positive gain {r['name']} (eps={r['epsilon']:.3f})",
                      r["gain"], r["passed"])
            for r in records]


def _run_oracle(options):
    records = suite.run_oracle_suite(options)
    return [BoolCheck(f"oracle agreement {r['name']} (worst z)", r["worst_z"], r["passed"])
            for r in records]


def _run_noregret(options):
    checks = [BoolCheck(f"analytic regret {r['name']}", r["regret"], r["passed"])
              for r in suite.run_regret_suite(options)]
    checks += [BoolCheck(f"empirical regret {r['name']}", r["regret"], r["passed"])
               for r in suite.run_empirical_regret_suite(options)]
    return checks


CRITERIA = (
    ("cor3", "a small reserve beats zero against a zero-reserve rival", 1.0, _run_cor3),
    ("cor4", "own-reserve derivative at a common reserve is -2r^2", 5.0, _run_cor4),
    ("cor5", "two-exchange equilibrium profile, revenues, and optimal benchmark", 60.0, _run_cor5),
    ("welfare", "equilibrium sells below the optimal reserve and gains welfare", 60.0, _run_welfare),
    ("proposition", "solver matches the two-segment closed form", 10.0, _run_proposition),
    ("thm1", "zero-reserve markets: constant pie, first-price share dominance", 5.0, _run_thm1),
    ("thm2", "first-price dominates second-price at any reserve", 60.0, _run_thm2),
    ("thm3", "all-zero reserves are not stable", 30.0, _run_thm3),
    ("oracle", "Monte Carlo matches analytic revenue within 3 sigma", 120.0, _run_oracle),
    ("noregret", "no profitable bid deviation, analytic and empirical", 120.0, _run_noregret),
)


def run_repro_suite(only=None, options=None, echo=print):
    """Run the criteria (optionally a single id) and report pass/fail per criterion."""
    results = []
    for cid, title, budget, runner in CRITERIA:
        if only and cid != only:
            continue
        t0 = time.perf_counter()
        result = CriterionResult(cid=cid, title=title, budget=budget)
        result.checks = runner(options)
        result.seconds = time.perf_counter() - t0
        results.append(result)
        status = "PASS" if result.passed else "FAIL"
        echo(f"{status} {cid}: {title} ({result.seconds:.1f}s, budget {budget:.0f}s)")
        for c in result.checks:
            if isinstance(c, CheckResult):
                mark = "ok" if c.passed else "FAIL"
                echo(f"    [{mark}] {c.name}: expected {c.expected:.6g} "
                     f"computed {c.computed:.6g} tol {c.tol:.1e} delta {c.delta:+.2e}")
            else:
                mark = "ok" if c.passed else "FAIL"
                echo(f"    [{mark}] {c.name}: {c.computed:.6g}")
    all_passed = all(r.passed for r in results)
    return all_passed, results


def report_dict(results):
    out = []
    for r in results:
        out.append({
            "id": r.cid, "title": r.title, "passed": r.passed,
            "seconds": r.seconds, "budget_seconds": r.budget,
            "checks": [
                {"name": c.name, "expected": c.expected, "computed": c.computed,
                 "tol": c.tol, "passed": c.passed}
                for c in r.checks
            ],
        })
    return {"criteria": out, "all_passed": all(r.passed for r in results)}
