"""Monte Carlo oracle: runs the aggregate auction mechanically, no analytic formulas.

Sampling uses counter-based Philox streams keyed by (seed, chunk index), so
results are bit-identical for a given seed regardless of how many workers
process the chunks. The oracle touches the bidding function only through its
eval method and shares no quadrature code with the revenue module.
"""

from __future__ import annotations

import os as _os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .market import Kind, normalize

_CHUNK = 1 << 16


def _worker_count():
    raw = _os.environ.get("AME_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    if n == 0:  # auto
        n = min(4, _os.cpu_count() or 1)
    return max(1, n)


@dataclass(frozen=True)
class SimConfig:
    samples: int
    rng_seed: int
    cfg: object          # MarketConfig
    beta: object         # anything with a vectorized .eval

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass(frozen=True)
class SimReport:
    per_exchange_mean: tuple[float, ...]
    per_exchange_stderr: tuple[float, ...]
    welfare_mean: float
    sale_rate: float
    samples: int


def run_auction_once(values, beta, cfg, draw):
    """Run one auction draw mechanically for every exchange of cfg.

    Returns (winners, payments): per exchange, the winning bidder index (None
    when the top bid misses that reserve) and the payment collected. Ties on
    the top bid are broken uniformly via draw in [0, 1).
    """
    bids = [float(beta.eval(v)) for v in values]
    mx = max(bids)
    tied = [i for i, b in enumerate(bids) if b == mx]
    winner = tied[min(int(draw * len(tied)), len(tied) - 1)]
    second = sorted(bids)[-2]
    winners, payments = [], []
    for ex in cfg.exchanges:
        if mx >= ex.reserve:
            winners.append(winner)
            payments.append(mx if ex.kind is Kind.FIRST_PRICE else max(second, ex.reserve))
        else:
            winners.append(None)
            payments.append(0.0)
    return tuple(winners), tuple(payments)


def _chunk_stats(seed, chunk_idx, count, cfg, beta):
    """Aggregate payment sums for one Philox chunk; pure function of its arguments."""
    rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, chunk_idx]))
    n = cfg.n_bidders
    u = rng.random((count, n + 1))
    values = np.asarray(cfg.dist.quantile(u[:, :n]))
    draws = u[:, n]
    bids = np.asarray(beta.eval(values))

    mx = bids.max(axis=1)
    second = np.partition(bids, n - 2, axis=1)[:, n - 2]
    is_max = bids == mx[:, None]
    cnt = is_max.sum(axis=1)
    pick = np.minimum((draws * cnt).astype(int), cnt - 1)
    cum = np.cumsum(is_max, axis=1)
    winner = np.argmax(is_max & (cum == pick[:, None] + 1), axis=1)
    winner_value = values[np.arange(count), winner]

    m = cfg.m
    pay_sum = np.zeros(m)
    pay_sumsq = np.zeros(m)
    for j, ex in enumerate(cfg.exchanges):
        sale = mx >= ex.reserve
        pay = np.where(
            sale, mx if ex.kind is Kind.FIRST_PRICE else np.maximum(second, ex.reserve), 0.0)
        pay_sum[j] = pay.sum()
        pay_sumsq[j] = (pay * pay).sum()

    min_reserve = min(ex.reserve for ex in cfg.exchanges)
    sale_any = mx >= min_reserve
    return pay_sum, pay_sumsq, float((winner_value * sale_any).sum()), int(sale_any.sum())


def estimate(simcfg):
    """Mean payment per exchange with standard errors, from `samples` mechanical runs."""
    cfg = simcfg.cfg
    total = simcfg.samples
    chunks = [(i, min(_CHUNK, total - i * _CHUNK)) for i in range((total + _CHUNK - 1) // _CHUNK)]
    workers = _worker_count()
    if workers == 1:
        partials = [_chunk_stats(simcfg.rng_seed, i, c, cfg, simcfg.beta) for i, c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_chunk_stats, simcfg.rng_seed, i, c, cfg, simcfg.beta)
                    for i, c in chunks]
            partials = [f.result() for f in futs]  # chunk order, not completion order

    pay_sum = sum(p[0] for p in partials)
    pay_sumsq = sum(p[1] for p in partials)
    welfare_sum = sum(p[2] for p in partials)
    sale_cnt = sum(p[3] for p in partials)

    mean = pay_sum / total
    var = np.maximum(pay_sumsq / total - mean ** 2, 0.0)
    stderr = np.sqrt(var / total)
    return SimReport(
        per_exchange_mean=tuple(float(x) for x in mean),
        per_exchange_stderr=tuple(float(x) for x in stderr),
        welfare_mean=welfare_sum / total,
        sale_rate=sale_cnt / total,
        samples=total)


@dataclass(frozen=True)
class EmpiricalRegretReport:
    max_regret: float
    noise_bound: float     # z * stderr of the gain estimate at the argmax cell
    at_value: float
    at_bid: float


def empirical_regret(simcfg, value_grid, deviation_grid, z=6.0):
    """Largest estimated gain from a deviation bid over bidding beta(v).

    Common random numbers: every (value, deviation) cell is evaluated against
    the same simulated opponents, and the per-sample utility difference feeds
    both the mean gain and its standard error. Gains below `noise_bound`
    (z standard errors at the argmax) are consistent with equilibrium.
    """
    ncfg, _ = normalize(simcfg.cfg)
    n = ncfg.n_bidders
    dev = np.asarray(deviation_grid, dtype=float)
    vals = np.asarray(value_grid, dtype=float)

    total = simcfg.samples
    chunks = [(i, min(_CHUNK, total - i * _CHUNK)) for i in range((total + _CHUNK - 1) // _CHUNK)]

    d_sum = np.zeros((len(vals), len(dev)))
    d_sumsq = np.zeros_like(d_sum)
    for ci, count in chunks:
        rng = np.random.Generator(np.random.Philox(key=[simcfg.rng_seed & 0xFFFFFFFFFFFFFFFF, ci]))
        opp_vals = np.asarray(ncfg.dist.quantile(rng.random((count, n - 1))))
        opp_bids = np.asarray(simcfg.beta.eval(opp_vals))
        M = opp_bids.max(axis=1) if n > 2 else opp_bids[:, 0]

        for vi, v in enumerate(vals):
            b0 = float(simcfg.beta.eval(v))
            bids = np.concatenate((dev, [b0]))
            win = bids[:, None] > M[None, :]
            u = np.zeros((len(bids), count))
            for ex in ncfg.exchanges:
                served = win & (bids[:, None] >= ex.reserve)
                if ex.kind is Kind.FIRST_PRICE:
                    pay = np.broadcast_to(bids[:, None], served.shape)
                else:
                    pay = np.broadcast_to(np.maximum(M, ex.reserve)[None, :], served.shape)
                u += ex.share * served * (v - pay)
            d = u[:-1] - u[-1]
            d_sum[vi] += d.sum(axis=1)
            d_sumsq[vi] += (d * d).sum(axis=1)

    mean = d_sum / total
    var = np.maximum(d_sumsq / total - mean ** 2, 0.0)
    stderr = np.sqrt(var / total)
    flat = np.argmax(mean)
    vi, bi = np.unravel_index(flat, mean.shape)
    return EmpiricalRegretReport(
        max_regret=float(mean[vi, bi]),
        noise_bound=float(z * stderr[vi, bi] + 1e-12),
        at_value=float(vals[vi]),
        at_bid=float(dev[bi]))
