"""Analytic expected revenue per exchange, market welfare, and the optimal-auction benchmark.

All quantities are per auction run (conditional on the query landing at that
exchange); traffic-weighted totals are reported separately. Revenue integrals
reuse the solved bidding function's segment grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .distributions import monopoly_reserve
from .equilibrium import SolverOptions, solve_bidding
from .market import Kind, MarketConfig, normalize, sp


@dataclass(frozen=True)
class RevenueReport:
    """Per-exchange revenue (original indices), totals, welfare, and sale probability."""

    per_exchange: tuple[tuple[int, float], ...]
    weighted_total: float
    welfare: float
    sale_probability: float
    per_exchange_welfare: tuple[tuple[int, float], ...]


def _segment_spans(beta, start):
    trunc = beta.trunc_hi
    for seg in beta.segments:
        lo = max(seg.lo, start)
        hi = min(seg.hi if math.isfinite(seg.hi) else trunc, trunc)
        if hi > lo:
            yield seg, lo, hi


def revenue_fp(beta, j):
    """Expected revenue of first-price exchange j (0-based solver index)."""
    os_ = beta.os
    a_j = beta.breakpoints[j]
    if not math.isfinite(a_j) or a_j >= beta.trunc_hi:
        return 0.0
    total = 0.0
    for seg, lo, hi in _segment_spans(beta, a_j):
        total += numerics.integrate(
            lambda v, s=seg: np.asarray(s.eval(v)) * np.asarray(os_.winner_density(v)),
            lo, hi, panels=48)
    return total


def revenue_sp(beta, j):
    """Expected revenue of second-price exchange j: E[max(runner-up bid, reserve)]."""
    os_ = beta.os
    a_j = beta.breakpoints[j]
    if not math.isfinite(a_j) or a_j >= beta.trunc_hi:
        return 0.0
    r_j = beta.market.exchanges[j].reserve
    base = float(os_.G(a_j)) * r_j - beta.pay_integral(a_j)
    n = os_.n
    total = 0.0
    for seg, lo, hi in _segment_spans(beta, a_j):
        total += numerics.integrate(
            lambda v, s=seg: (base + np.asarray(s.pay_at(v))) * n * np.asarray(os_.dist.pdf(v)),
            lo, hi, panels=48)
    return total


def exchange_revenues(beta):
    """Revenue of every solved exchange, by its mechanism kind."""
    out = []
    for j, ex in enumerate(beta.market.exchanges):
        fn = revenue_fp if ex.kind is Kind.FIRST_PRICE else revenue_sp
        out.append(fn(beta, j))
    return np.array(out)


def welfare_above(os_, a):
    """Expected winner value restricted to winner values above a."""
    trunc = os_.dist.trunc_hi
    if a >= trunc:
        return 0.0
    a = max(a, os_.dist.support[0])
    n = os_.n
    k = n / (n - 1)
    top = trunc * float(os_.dist.cdf(trunc)) ** n
    return top - a * float(os_.dist.cdf(a)) ** n - float(os_.int_G_pow(a, trunc, k))


def solve_and_revenues(cfg, options=None):
    """Solve the bidding equilibrium and return (beta, per-solved-exchange revenues)."""
    ncfg, _ = normalize(cfg)
    beta = solve_bidding(ncfg, options)
    return beta, exchange_revenues(beta)


def revenue_report(cfg, options=None):
    """Full analytic report for a market, mapped back to original exchange indices."""
    ncfg, index_map = normalize(cfg)
    beta, revs = solve_and_revenues(ncfg, options)
    os_ = beta.os

    per_exchange = tuple((i, float(revs[index_map[i]])) for i in range(cfg.m))
    weighted = float(sum(ex.share * r for ex, r in zip(ncfg.exchanges, revs)))

    finite_bps = [b for b in beta.breakpoints if math.isfinite(b) and b < beta.trunc_hi]
    if finite_bps:
        a1 = min(finite_bps)
        welfare = welfare_above(os_, a1)
        sale_p = 1.0 - float(os_.dist.cdf(a1)) ** os_.n
    else:
        welfare, sale_p = 0.0, 0.0
    per_welfare = tuple(
        (i, welfare_above(os_, beta.breakpoints[index_map[i]])
         if math.isfinite(beta.breakpoints[index_map[i]]) else 0.0)
        for i in range(cfg.m))

    return RevenueReport(
        per_exchange=per_exchange, weighted_total=weighted, welfare=welfare,
        sale_probability=sale_p, per_exchange_welfare=per_welfare)


def myerson_benchmark(os_, options=None):
    """Revenue of a single second-price auction at the monopoly reserve."""
    opts = options or SolverOptions()
    r_star = monopoly_reserve(os_.dist, grid=opts.regularity_grid)
    cfg = MarketConfig(os_.n, os_.dist, (sp(1.0, r_star),))
    beta, revs = solve_and_revenues(cfg, options)
    return float(revs[0])


def myerson_welfare(os_, options=None):
    """Welfare of the revenue-optimal single auction (sells only above the monopoly reserve)."""
    opts = options or SolverOptions()
    r_star = monopoly_reserve(os_.dist, grid=opts.regularity_grid)
    return welfare_above(os_, r_star)
