import math

import pytest

from ame import (
    MarketConfig,
    OrderStatistics,
    ValueDistribution,
    fp,
    myerson_benchmark,
    myerson_welfare,
    revenue_fp,
    revenue_report,
    revenue_sp,
    solve_bidding,
    sp,
)
from ame.errors import NotRegular, ReserveAboveSupport
from ame.revenue import welfare_above
from ame.suite import suite_markets

U = ValueDistribution.uniform(0.0, 1.0)
E = ValueDistribution.exponential(1.0)


def two_exchange_revenues(r1, r2):
    """Closed-form per-exchange revenues for the uniform two-FP-exchange market."""
    a = (2.0 * r2 + math.sqrt(4.0 * r2 * r2 - 3.0 * r1 * r1)) / 3.0
    c = 2.0 * a * r2 - a * a
    rev_low = -(4.0 / 3.0) * r1 ** 3 + r1 ** 2 * a + c - c * a + 1.0 / 3.0
    rev_high = 1.0 / 3.0 - a ** 3 / 3.0 + c - c * a
    return rev_low, rev_high


def test_fp_revenue_matches_formula_fig1():
    cfg = MarketConfig(2, U, (fp(0.5, 0.3), fp(0.5, 0.5)))
    beta = solve_bidding(cfg)
    rev_low, rev_high = two_exchange_revenues(0.3, 0.5)
    assert revenue_fp(beta, 0) == pytest.approx(rev_low, abs=1e-6)
    assert revenue_fp(beta, 1) == pytest.approx(rev_high, abs=1e-6)


def test_fp_revenue_zero_reserves_third():
    cfg = MarketConfig(2, U, (fp(0.5, 0.0), fp(0.5, 0.0)))
    beta = solve_bidding(cfg)
    assert revenue_fp(beta, 0) == pytest.approx(1.0 / 3.0, abs=1e-9)


def test_fp_revenue_small_reserve_against_zero():
    cfg = MarketConfig(2, U, (fp(0.5, 0.1), fp(0.5, 0.0)))
    beta = solve_bidding(cfg)
    ncfg = beta.market
    j = next(i for i, ex in enumerate(ncfg.exchanges) if ex.reserve == 0.1)
    rev = revenue_fp(beta, j)
    _, rev_formula = two_exchange_revenues(0.0, 0.1)
    assert rev == pytest.approx(rev_formula, abs=1e-9)
    assert rev == pytest.approx(0.3402, abs=5e-4)


def test_sp_revenue_single_zero_reserve():
    # truthful second-price: expected runner-up value is 1/3 for two uniforms
    cfg = MarketConfig(2, U, (sp(1.0, 0.0),))
    beta = solve_bidding(cfg)
    assert revenue_sp(beta, 0) == pytest.approx(1.0 / 3.0, abs=1e-9)


def test_sp_revenue_single_monopoly_reserve():
    cfg = MarketConfig(2, U, (sp(1.0, 0.5),))
    beta = solve_bidding(cfg)
    assert revenue_sp(beta, 0) == pytest.approx(5.0 / 12.0, abs=1e-9)


def test_mixed_zero_market_split():
    # beta = 2v/3: by hand, fp side = int 2v/3 * 2v dv = 4/9 and
    # sp side = int (v^2/3) * 2 dv = 2/9, weighted total 1/3
    cfg = MarketConfig(2, U, (fp(0.5, 0.0), sp(0.5, 0.0)))
    report = revenue_report(cfg)
    revs = dict(report.per_exchange)
    assert revs[0] == pytest.approx(4.0 / 9.0, abs=1e-8)
    assert revs[1] == pytest.approx(2.0 / 9.0, abs=1e-8)
    assert report.weighted_total == pytest.approx(1.0 / 3.0, abs=1e-8)


def test_equilibrium_profile_revenues():
    cfg = MarketConfig(2, U, (fp(0.5, 0.2402), fp(0.5, 0.3157)))
    report = revenue_report(cfg)
    revs = dict(report.per_exchange)
    rev_low, rev_high = two_exchange_revenues(0.2402, 0.3157)
    assert revs[0] == pytest.approx(rev_low, abs=1e-8)
    assert revs[1] == pytest.approx(rev_high, abs=1e-8)
    assert revs[0] == pytest.approx(0.397, abs=5e-4)
    assert revs[1] == pytest.approx(0.378, abs=5e-4)
    assert report.weighted_total == pytest.approx(0.3875, abs=1e-4)


def test_zero_reserve_revenue_equivalence():
    for theta in (0.25, 0.5, 0.75):
        cfg = MarketConfig(2, U, (fp(theta, 0.0), sp(1.0 - theta, 0.0)))
        report = revenue_report(cfg)
        revs = dict(report.per_exchange)
        assert report.weighted_total == pytest.approx(1.0 / 3.0, abs=1e-6), theta
        assert revs[0] >= report.weighted_total - 1e-9
        assert revs[1] <= report.weighted_total + 1e-9


def test_report_keeps_original_indices():
    # exchange 0 carries the higher reserve on purpose
    cfg = MarketConfig(2, U, (fp(0.5, 0.5), fp(0.5, 0.3)))
    report = revenue_report(cfg)
    rev_low, rev_high = two_exchange_revenues(0.3, 0.5)
    revs = dict(report.per_exchange)
    assert revs[0] == pytest.approx(rev_high, abs=1e-8)
    assert revs[1] == pytest.approx(rev_low, abs=1e-8)


def test_merged_exchanges_share_revenue():
    cfg = MarketConfig(2, U, (sp(0.25, 0.2), sp(0.75, 0.2)))
    report = revenue_report(cfg)
    revs = dict(report.per_exchange)
    assert revs[0] == revs[1]


def test_report_welfare_and_sale_probability():
    cfg = MarketConfig(2, U, (fp(0.5, 0.3), fp(0.5, 0.5)))
    report = revenue_report(cfg)
    # welfare of the served market: int_a1^1 v * 2v dv with a1 = 0.3
    assert report.welfare == pytest.approx((2.0 / 3.0) * (1.0 - 0.027), abs=1e-9)
    assert report.sale_probability == pytest.approx(1.0 - 0.09, abs=1e-12)
    wdict = dict(report.per_exchange_welfare)
    a2 = solve_bidding(cfg).breakpoints[1]
    assert wdict[1] == pytest.approx((2.0 / 3.0) * (1.0 - a2 ** 3), abs=1e-9)


def test_all_reserves_above_support_zero_report():
    cfg = MarketConfig(2, U, (fp(0.5, 1.2), fp(0.5, 1.4)))
    with pytest.warns(ReserveAboveSupport):
        report = revenue_report(cfg)
    assert all(r == 0.0 for _, r in report.per_exchange)
    assert report.weighted_total == 0.0
    assert report.sale_probability == 0.0


def test_myerson_uniform_two_bidders():
    assert myerson_benchmark(OrderStatistics(2, U)) == pytest.approx(5.0 / 12.0, abs=1e-9)


def test_myerson_uniform_three_bidders():
    # hand integral of [G(r) r + int_r^v t g dt] * 3 f over [0.5, 1] gives 17/32
    assert myerson_benchmark(OrderStatistics(3, U)) == pytest.approx(0.53125, abs=1e-8)


def test_myerson_exponential():
    # reserve 1, so revenue = 2/e - e^-2 / 2 by direct integration
    expected = 2.0 / math.e - 0.5 * math.exp(-2.0)
    assert myerson_benchmark(OrderStatistics(2, E)) == pytest.approx(expected, abs=1e-6)


def test_myerson_not_regular():
    d = ValueDistribution.bounded_power(0.5)
    with pytest.raises(NotRegular):
        myerson_benchmark(OrderStatistics(2, d))


def test_welfare_above_matches_quadrature():
    from scipy.integrate import quad
    os_ = OrderStatistics(3, E)
    ref, _ = quad(lambda v: v * os_.winner_density(v), 0.7, os_.dist.trunc_hi, limit=200)
    assert welfare_above(os_, 0.7) == pytest.approx(ref, abs=1e-6)


def test_welfare_dominance_when_selling_below_monopoly_reserve():
    os_ = OrderStatistics(2, U)
    w_opt = myerson_welfare(os_)
    for r1, r2 in [(0.2402, 0.3157), (0.1, 0.3), (0.0, 0.45)]:
        cfg = MarketConfig(2, U, (fp(0.5, r1), fp(0.5, r2)))
        report = revenue_report(cfg)
        assert report.welfare >= w_opt - 1e-10, (r1, r2)


@pytest.mark.parametrize("name,cfg", suite_markets())
def test_weighted_total_below_welfare(name, cfg):
    report = revenue_report(cfg)
    assert 0.0 <= report.weighted_total <= report.welfare + 1e-9, name
    assert all(r >= 0.0 for _, r in report.per_exchange), name
