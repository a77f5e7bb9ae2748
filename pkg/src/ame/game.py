"""The game between exchanges: best responses over (auction kind, reserve) and verifiers.

Best responses scan a coarse reserve grid and refine with golden-section
search; iterated best response cycles exchanges round-robin until no
unilateral deviation gains more than the tolerance. The remaining functions
are executable checks of the structural results: first-price dominates
second-price at any reserve, zero reserves are not stable, and neither is a
common reserve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .distributions import OrderStatistics
from .equilibrium import solve_bidding
from .errors import AmeError, HypothesisViolated, SolverDiverged
from .market import ExchangeSpec, Kind, MechanismSpec, normalize
from .revenue import exchange_revenues

log = logging.getLogger(__name__)

_KINDS = (Kind.FIRST_PRICE, Kind.SECOND_PRICE)


@dataclass(frozen=True)
class BestResponse:
    exchange: int
    best_kind: Kind
    best_reserve: float
    best_revenue: float
    # sampled (reserve, revenue) pairs per kind, nan where a probe failed
    revenue_curve: dict


@dataclass(frozen=True)
class EquilibriumResult:
    reserves: tuple[float, ...]      # sorted ascending
    kinds: tuple[Kind, ...]          # aligned with reserves
    revenues: tuple[float, ...]      # aligned with reserves
    iterations: int
    converged: bool
    max_gain: float
    history: tuple[tuple[float, ...], ...] = ()


@dataclass(frozen=True)
class DeviationGain:
    epsilon: float
    gain: float
    breakpoint: float
    h_value: float


def _with_mechanism(cfg, j, kind, reserve):
    exchanges = list(cfg.exchanges)
    exchanges[j] = ExchangeSpec(exchanges[j].share, MechanismSpec(kind, reserve))
    return replace(cfg, exchanges=tuple(exchanges), index_map=None)


def exchange_revenue(cfg, j, options=None):
    """Per-auction-run revenue of original exchange j under the solved equilibrium."""
    ncfg, index_map = normalize(cfg)
    beta = solve_bidding(ncfg, options)
    return float(exchange_revenues(beta)[index_map[j]])


def best_response(cfg, j, kinds=_KINDS, coarse=64, refine_tol=1e-5, options=None):
    """Best (kind, reserve) for exchange j holding all other exchanges fixed."""
    hi = float(cfg.dist.quantile(0.999))
    grid = np.linspace(0.0, hi, coarse)

    def probe(kind, r):
        try:
            return exchange_revenue(_with_mechanism(cfg, j, kind, r), j, options)
        except (SolverDiverged, AmeError) as exc:
            log.warning("probe %s reserve=%.6f failed: %s", kind.value, r, exc)
            return math.nan

    best = (-math.inf, None, None)
    curves = {}
    for kind in kinds:
        revs = np.array([probe(kind, r) for r in grid])
        curves[kind.value] = np.column_stack((grid, revs))
        if np.all(np.isnan(revs)):
            continue
        i = int(np.nanargmax(revs))
        lo_b = grid[max(i - 1, 0)]
        hi_b = grid[min(i + 1, len(grid) - 1)]
        r_ref, rev_ref = numerics.golden_max(lambda r: probe(kind, r), lo_b, hi_b, tol=refine_tol)
        if revs[i] > rev_ref:  # keep the coarse point if refinement landed on a kink
            r_ref, rev_ref = grid[i], revs[i]
        if rev_ref > best[0]:
            best = (rev_ref, kind, r_ref)
    if best[1] is None:
        raise SolverDiverged(f"no best-response probe succeeded for exchange {j}")
    return BestResponse(
        exchange=j, best_kind=best[1], best_reserve=float(best[2]),
        best_revenue=float(best[0]), revenue_curve=curves)


def iterated_best_response(cfg0, max_iters=40, tol=1e-5, kinds=_KINDS,
                           coarse=64, options=None):
    """Round-robin best responses until no exchange gains more than tol.

    Non-convergence is a valid outcome and is reported via the converged flag.
    """
    cfg = cfg0
    history = []
    iterations = 0
    converged = False
    max_gain = math.inf
    for _ in range(max_iters):
        iterations += 1
        order = sorted(range(cfg.m), key=lambda i: (cfg.exchanges[i].reserve, i))
        max_gain = 0.0
        for j in order:
            current = exchange_revenue(cfg, j, options)
            br = best_response(cfg, j, kinds=kinds, coarse=coarse,
                               refine_tol=min(tol, 1e-5), options=options)
            gain = br.best_revenue - current
            max_gain = max(max_gain, gain)
            if gain > tol:
                cfg = _with_mechanism(cfg, j, br.best_kind, br.best_reserve)
        history.append(tuple(ex.reserve for ex in cfg.exchanges))
        if max_gain <= tol:
            converged = True
            break

    order = sorted(range(cfg.m), key=lambda i: (cfg.exchanges[i].reserve, i))
    reserves = tuple(cfg.exchanges[i].reserve for i in order)
    kinds_out = tuple(cfg.exchanges[i].kind for i in order)
    revenues = tuple(exchange_revenue(cfg, i, options) for i in order)
    return EquilibriumResult(
        reserves=reserves, kinds=kinds_out, revenues=revenues,
        iterations=iterations, converged=converged, max_gain=float(max_gain),
        history=tuple(history))


def verify_fp_dominates_sp(cfg, j, options=None):
    """Revenue of exchange j under FP vs SP at its reserve, everything else fixed.

    Requires every other exchange with a strictly smaller reserve to be
    first-price. Returns (rev_fp, rev_sp, margin).
    """
    r_j = cfg.exchanges[j].reserve
    for i, ex in enumerate(cfg.exchanges):
        if i != j and ex.reserve < r_j and ex.kind is not Kind.FIRST_PRICE:
            raise HypothesisViolated(
                f"exchange {i} has reserve {ex.reserve} < {r_j} but is not first-price")
    rev_fp = exchange_revenue(_with_mechanism(cfg, j, Kind.FIRST_PRICE, r_j), j, options)
    rev_sp = exchange_revenue(_with_mechanism(cfg, j, Kind.SECOND_PRICE, r_j), j, options)
    return rev_fp, rev_sp, rev_fp - rev_sp


def deviation_gain_zero_reserve(cfg, epsilon, deviator=0, options=None):
    """Gain for one exchange of moving its reserve from zero to epsilon.

    All exchanges must be first-price with zero reserve. Also reports the
    induced breakpoint and the lower-bound function h at that breakpoint
    (deviator share times the withheld mass, minus the low-value loss).
    """
    for i, ex in enumerate(cfg.exchanges):
        if ex.kind is not Kind.FIRST_PRICE or ex.reserve != 0.0:
            raise HypothesisViolated(f"exchange {i} is not first-price with zero reserve")
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")

    base = exchange_revenue(cfg, deviator, options)
    if epsilon == 0.0:
        return DeviationGain(0.0, 0.0, cfg.dist.support[0], 0.0)

    dev_cfg = _with_mechanism(cfg, deviator, Kind.FIRST_PRICE, epsilon)
    ncfg, index_map = normalize(dev_cfg)
    beta = solve_bidding(ncfg, options)
    gain = float(exchange_revenues(beta)[index_map[deviator]]) - base

    a = beta.breakpoints[index_map[deviator]]
    os_ = OrderStatistics(cfg.n_bidders, cfg.dist)
    lo = cfg.dist.support[0]
    lam_dev = cfg.exchanges[deviator].share / sum(ex.share for ex in cfg.exchanges)
    n = cfg.n_bidders
    if math.isfinite(a) and a < beta.trunc_hi:
        h = lam_dev * (a * float(os_.G(a)) - float(os_.int_tg(lo, a))) - numerics.integrate(
            lambda t: n * np.asarray(cfg.dist.pdf(t)) * np.asarray(os_.int_tg(lo, t)),
            lo, a, panels=48)
    else:
        h = math.nan
    return DeviationGain(float(epsilon), gain, float(a), float(h))


def symmetric_instability(cfg, step=1e-3, options=None):
    """Own-reserve revenue derivative at a common reserve, approaching from below.

    The revenue curve is kinked at the symmetric point, and the structural
    claim concerns undercutting, so a second-order one-sided stencil on the
    lower branch is used: (3 f(r) - 4 f(r-h) + f(r-2h)) / (2h).
    """
    reserves = {ex.reserve for ex in cfg.exchanges}
    kinds = {ex.kind for ex in cfg.exchanges}
    if len(reserves) != 1 or kinds != {Kind.FIRST_PRICE}:
        raise HypothesisViolated("market must be all first-price with one common reserve")
    r = reserves.pop()
    if r <= cfg.dist.support[0]:
        raise HypothesisViolated("use deviation_gain_zero_reserve at the zero boundary")
    h = min(step, (r - cfg.dist.support[0]) / 4.0)

    def rev(x):
        return exchange_revenue(_with_mechanism(cfg, 0, Kind.FIRST_PRICE, x), 0, options)

    return (3.0 * rev(r) - 4.0 * rev(r - h) + rev(r - 2.0 * h)) / (2.0 * h)
