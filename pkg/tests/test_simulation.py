import math

import numpy as np
import pytest

from ame import (
    MarketConfig,
    SimConfig,
    ValueDistribution,
    empirical_regret,
    estimate,
    fp,
    normalize,
    run_auction_once,
    solve_bidding,
    sp,
)
from ame.revenue import exchange_revenues

U = ValueDistribution.uniform(0.0, 1.0)


@pytest.fixture(scope="module")
def fig1():
    cfg, _ = normalize(MarketConfig(2, U, (fp(0.5, 0.3), fp(0.5, 0.5))))
    return cfg, solve_bidding(cfg)


def test_run_auction_once_sells_both(fig1):
    cfg, beta = fig1
    winners, payments = run_auction_once([0.8, 0.4], beta, cfg, draw=0.0)
    b_high = float(beta.eval(0.8))
    assert winners == (0, 0)
    assert payments[0] == pytest.approx(b_high, abs=1e-12)
    assert payments[1] == pytest.approx(b_high, abs=1e-12)
    assert float(beta.eval(0.4)) == pytest.approx(0.3125, abs=1e-10)


def test_run_auction_once_no_sale_below_reserve(fig1):
    cfg, beta = fig1
    winners, payments = run_auction_once([0.2, 0.1], beta, cfg, draw=0.5)
    assert winners == (None, None)
    assert payments == (0.0, 0.0)


def test_run_auction_once_second_price_truthful():
    # identical zero-reserve SP exchanges merge into one; both charge the runner-up
    cfg, _ = normalize(MarketConfig(2, U, (sp(0.5, 0.0), sp(0.5, 0.0))))
    beta = solve_bidding(cfg)
    winners, payments = run_auction_once([0.9, 0.7], beta, cfg, draw=0.0)
    assert winners[0] == 0
    assert all(p == pytest.approx(0.7, abs=1e-12) for p in payments)


def test_tie_break_uses_draw():
    cfg, _ = normalize(MarketConfig(2, U, (fp(1.0, 0.0),)))
    beta = solve_bidding(cfg)
    winners_lo, _ = run_auction_once([0.5, 0.5], beta, cfg, draw=0.0)
    winners_hi, _ = run_auction_once([0.5, 0.5], beta, cfg, draw=0.999)
    assert winners_lo[0] == 0
    assert winners_hi[0] == 1


def test_estimate_deterministic(fig1):
    cfg, beta = fig1
    a = estimate(SimConfig(30_000, 123, cfg, beta))
    b = estimate(SimConfig(30_000, 123, cfg, beta))
    assert a == b


def test_estimate_thread_count_invariant(fig1, monkeypatch):
    cfg, beta = fig1
    monkeypatch.setenv("AME_THREADS", "1")
    a = estimate(SimConfig(150_000, 9, cfg, beta))
    monkeypatch.setenv("AME_THREADS", "4")
    b = estimate(SimConfig(150_000, 9, cfg, beta))
    assert a == b


def test_estimate_single_sample_replay(fig1):
    cfg, beta = fig1
    a = estimate(SimConfig(1, 77, cfg, beta))
    b = estimate(SimConfig(1, 77, cfg, beta))
    assert a == b
    assert a.samples == 1


def test_estimate_matches_scalar_reference(fig1):
    cfg, beta = fig1
    samples, seed = 400, 5
    rep = estimate(SimConfig(samples, seed, cfg, beta))
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    u = rng.random((samples, cfg.n_bidders + 1))
    values = np.asarray(cfg.dist.quantile(u[:, :cfg.n_bidders]))
    totals = np.zeros(cfg.m)
    for row, draw in zip(values, u[:, cfg.n_bidders]):
        _, payments = run_auction_once(list(row), beta, cfg, draw)
        totals += payments
    assert np.allclose(totals / samples, rep.per_exchange_mean, atol=1e-12)


def test_estimate_matches_analytic(fig1):
    cfg, beta = fig1
    rep = estimate(SimConfig(200_000, 20240817, cfg, beta))
    analytic = exchange_revenues(beta)
    for mean, se, ref in zip(rep.per_exchange_mean, rep.per_exchange_stderr, analytic):
        assert abs(mean - ref) <= 4.0 * se


def test_estimate_zero_reserve_third():
    cfg, _ = normalize(MarketConfig(2, U, (fp(0.5, 0.0), fp(0.5, 0.0))))
    beta = solve_bidding(cfg)
    rep = estimate(SimConfig(200_000, 11, cfg, beta))
    for mean, se in zip(rep.per_exchange_mean, rep.per_exchange_stderr):
        assert abs(mean - 1.0 / 3.0) <= 4.0 * se


def test_sale_rate_matches_analytic(fig1):
    cfg, beta = fig1
    rep = estimate(SimConfig(100_000, 3, cfg, beta))
    p = 1.0 - 0.09
    se = math.sqrt(p * (1 - p) / rep.samples)
    assert abs(rep.sale_rate - p) <= 4.0 * se


def test_empirical_regret_all_sp():
    cfg, _ = normalize(MarketConfig(2, U, (sp(0.5, 0.2), sp(0.5, 0.4))))
    beta = solve_bidding(cfg)
    values = np.linspace(0.05, 0.95, 10)
    deviations = np.linspace(0.0, 1.0, 33)
    rep = empirical_regret(SimConfig(20_000, 1, cfg, beta), values, deviations)
    assert rep.max_regret <= rep.noise_bound


def test_empirical_regret_equilibrium(fig1):
    cfg, beta = fig1
    values = np.linspace(0.05, 0.95, 10)
    deviations = np.linspace(0.0, 0.8, 33)
    rep = empirical_regret(SimConfig(20_000, 2, cfg, beta), values, deviations)
    assert rep.max_regret <= rep.noise_bound


class _Truthful:
    def eval(self, v):
        return np.asarray(v, dtype=float) if np.ndim(v) else float(v)


def test_empirical_regret_detects_truthful_fp():
    # truthful bidding in a first-price market leaves first-order shading gains
    cfg, _ = normalize(MarketConfig(2, U, (fp(1.0, 0.0),)))
    values = np.array([0.6, 0.8, 1.0])
    deviations = np.linspace(0.0, 1.0, 41)
    rep = empirical_regret(SimConfig(20_000, 3, cfg, _Truthful()), values, deviations)
    assert rep.max_regret > rep.noise_bound
    assert rep.max_regret > 0.01
