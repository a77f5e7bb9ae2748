"""The canonical market suite and the executable property checks run over it.

These records back both the `verify` CLI subcommand and the test suite: the
first-price dominance margin, the profitability of a small reserve over zero,
the instability of a common reserve, the revenue/welfare comparison against
the optimal single auction, and the no-regret audits of every solved market.
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import OrderStatistics, ValueDistribution
from .equilibrium import regret_audit, solve_bidding
from .game import (
    deviation_gain_zero_reserve,
    iterated_best_response,
    symmetric_instability,
    verify_fp_dominates_sp,
)
from .market import Kind, MarketConfig, fp, normalize, sp
from .revenue import (
    exchange_revenues,
    myerson_benchmark,
    myerson_welfare,
    revenue_report,
)
from .simulation import SimConfig, empirical_regret, estimate

_U = ValueDistribution.uniform(0.0, 1.0)
_E = ValueDistribution.exponential(1.0)
_P = ValueDistribution.bounded_power(2.0)


def suite_markets():
    """Named desk-scale markets covering families, kinds, and 2-3 exchanges."""
    return [
        ("uni2_fp30_fp50", MarketConfig(2, _U, (fp(0.5, 0.3), fp(0.5, 0.5)))),
        ("uni2_fp10_fp0", MarketConfig(2, _U, (fp(0.5, 0.1), fp(0.5, 0.0)))),
        ("uni2_eq_profile", MarketConfig(2, _U, (fp(0.5, 0.2402), fp(0.5, 0.3157)))),
        ("uni2_fp0_sp0", MarketConfig(2, _U, (fp(0.5, 0.0), sp(0.5, 0.0)))),
        ("uni2_sp20_sp40", MarketConfig(2, _U, (sp(0.25, 0.2), sp(0.75, 0.4)))),
        ("uni3_fp_fp_sp", MarketConfig(3, _U, (fp(1 / 3, 0.1), fp(1 / 3, 0.2), sp(1 / 3, 0.3)))),
        ("uni2_fp20_sp40", MarketConfig(2, _U, (fp(0.3, 0.2), sp(0.7, 0.4)))),
        ("uni3_three_fp", MarketConfig(3, _U, (fp(0.2, 0.15), fp(0.3, 0.25), fp(0.5, 0.45)))),
        ("exp2_fp50_sp100", MarketConfig(2, _E, (fp(0.5, 0.5), sp(0.5, 1.0)))),
        ("exp3_fp30_fp80", MarketConfig(3, _E, (fp(0.6, 0.3), fp(0.4, 0.8)))),
        ("exp2_fp0_sp70", MarketConfig(2, _E, (fp(0.4, 0.0), sp(0.6, 0.7)))),
        ("pow2_fp20_sp50", MarketConfig(2, _P, (fp(0.5, 0.2), sp(0.5, 0.5)))),
    ]


def fp_dominance_cases():
    """(name, market, exchange) cases satisfying the dominance hypothesis."""
    markets = dict(suite_markets())
    cases = [
        ("uni2_fp30_fp50", 1), ("uni2_fp30_fp50", 0),
        ("uni2_fp10_fp0", 0), ("uni2_eq_profile", 1),
        ("uni2_sp20_sp40", 0), ("uni3_fp_fp_sp", 2),
        ("uni2_fp20_sp40", 1), ("uni3_three_fp", 2),
        ("exp2_fp50_sp100", 1), ("exp3_fp30_fp80", 1),
        ("exp2_fp0_sp70", 1), ("pow2_fp20_sp50", 1),
    ]
    return [(f"{name}[j={j}]", markets[name], j) for name, j in cases]


def run_fp_dominance(options=None, min_margin=1e-6):
    records = []
    for name, cfg, j in fp_dominance_cases():
        rev_fp, rev_sp, margin = verify_fp_dominates_sp(cfg, j, options)
        records.append({
            "name": name, "rev_fp": rev_fp, "rev_sp": rev_sp, "margin": margin,
            "passed": bool(margin > min_margin)})
    return records


def run_zero_reserve_gain(options=None, min_gain=1e-6, eps_grid=None):
    """A small reserve beats zero for some epsilon, across shares and bidder counts."""
    eps_grid = np.linspace(0.01, 0.2, 20) if eps_grid is None else eps_grid
    records = []
    for n in (2, 3):
        for lam1 in (0.3, 0.5, 0.7):
            cfg = MarketConfig(n, _U, (fp(lam1, 0.0), fp(1.0 - lam1, 0.0)))
            best = None
            bound_holds = False  # h is a small-epsilon lower bound on the gain
            for eps in eps_grid:
                res = deviation_gain_zero_reserve(cfg, float(eps), options=options)
                if best is None or res.gain > best.gain:
                    best = res
                if res.gain > min_gain and res.h_value > 0.0:
                    bound_holds = True
            records.append({
                "name": f"uniform n={n} lambda1={lam1}",
                "gain": best.gain, "epsilon": best.epsilon,
                "breakpoint": best.breakpoint, "h": best.h_value,
                "passed": bool(best.gain > min_gain and bound_holds)})
    return records


def run_common_reserve_instability(options=None, noise=1e-5):
    """Own-reserve derivative at a common reserve r is -2 r^2 on the uniform market."""
    records = []
    for r in (0.1, 0.3, 0.5, 0.7, 0.9):
        cfg = MarketConfig(2, _U, (fp(0.5, r), fp(0.5, r)))
        der = symmetric_instability(cfg, options=options)
        records.append({
            "name": f"uniform r={r}", "derivative": der, "reference": -2.0 * r * r,
            "passed": bool(abs(der - (-2.0 * r * r)) <= 1e-3 and abs(der) > noise)})
    return records


def run_equilibrium_vs_optimal(options=None, tol=1e-5):
    """Converged uniform FP equilibrium: lower revenue, higher welfare than optimal."""
    cfg0 = MarketConfig(2, _U, (fp(0.5, 0.0), fp(0.5, 0.0)))
    res = iterated_best_response(cfg0, max_iters=40, tol=tol,
                                 kinds=(Kind.FIRST_PRICE,), options=options)
    os_ = OrderStatistics(2, _U)
    bench = myerson_benchmark(os_, options)
    weighted = 0.5 * sum(res.revenues)
    eq_cfg = MarketConfig(2, _U, tuple(fp(0.5, r) for r in res.reserves))
    report = revenue_report(eq_cfg, options)
    w_opt = myerson_welfare(os_, options)
    return {
        "reserves": res.reserves, "revenues": res.revenues, "converged": res.converged,
        "weighted_total": weighted, "optimal_revenue": bench,
        "welfare": report.welfare, "optimal_welfare": w_opt,
        "revenue_gap": bench - weighted, "welfare_gap": report.welfare - w_opt,
        "passed": bool(res.converged and weighted < bench - 1e-4
                       and report.welfare > w_opt)}


def run_best_response_stability(options=None, tol=1e-4):
    """Doubling the coarse grid moves the refined best reserve by less than tol."""
    from .game import best_response

    cfg = MarketConfig(2, _U, (fp(0.5, 0.0), fp(0.5, 0.3157)))
    r64 = best_response(cfg, 0, kinds=(Kind.FIRST_PRICE,), coarse=64, options=options)
    r128 = best_response(cfg, 0, kinds=(Kind.FIRST_PRICE,), coarse=128, options=options)
    delta = abs(r64.best_reserve - r128.best_reserve)
    return {"best_64": r64.best_reserve, "best_128": r128.best_reserve,
            "delta": delta, "passed": bool(delta < tol)}


def run_regret_suite(options=None, tol=1e-4, values=None, bid_grid_size=2000):
    records = []
    for name, cfg in suite_markets():
        beta = solve_bidding(cfg, options)
        reg = regret_audit(beta, cfg, values=values, bid_grid_size=bid_grid_size)
        records.append({"name": name, "regret": reg, "passed": bool(reg <= tol)})
    return records


def run_empirical_regret_suite(options=None, samples=20_000, seed=20240817):
    records = []
    for name, cfg in suite_markets():
        beta = solve_bidding(cfg, options)
        ncfg, _ = normalize(cfg)
        lo = ncfg.dist.support[0]
        hi = ncfg.dist.trunc_hi
        values = np.asarray(ncfg.dist.quantile(np.linspace(0.05, 0.95, 12)))
        top_bid = float(beta.eval(hi))
        deviations = np.linspace(lo, max(top_bid * 1.05, lo + 1e-3), 48)
        rep = empirical_regret(SimConfig(samples, seed, ncfg, beta), values, deviations)
        records.append({
            "name": name, "regret": rep.max_regret, "noise_bound": rep.noise_bound,
            "passed": bool(rep.max_regret <= rep.noise_bound)})
    return records


def run_oracle_suite(options=None, samples=1_000_000, seed=20240817, sigmas=3.0):
    """Monte Carlo means match analytic revenues within sigmas standard errors."""
    records = []
    for name, cfg in suite_markets():
        ncfg, _ = normalize(cfg)
        beta = solve_bidding(ncfg, options)
        analytic = exchange_revenues(beta)
        rep = estimate(SimConfig(samples, seed, ncfg, beta))
        worst = 0.0
        for mean, se, ref in zip(rep.per_exchange_mean, rep.per_exchange_stderr, analytic):
            z = abs(mean - ref) / max(se, 1e-12)
            worst = max(worst, z)
        sale_ref = 1.0 - float(ncfg.dist.cdf(min(
            b for b in beta.breakpoints if math.isfinite(b)))) ** ncfg.n_bidders \
            if any(math.isfinite(b) for b in beta.breakpoints) else 0.0
        se_sale = math.sqrt(max(sale_ref * (1 - sale_ref), 1e-12) / samples)
        z_sale = abs(rep.sale_rate - sale_ref) / max(se_sale, 1e-12)
        records.append({
            "name": name, "worst_z": worst, "sale_z": z_sale,
            "passed": bool(worst <= sigmas and z_sale <= sigmas)})
    return records
