import math

import numpy as np
import pytest

from ame import (
    MarketConfig,
    ValueDistribution,
    best_response,
    deviation_gain_zero_reserve,
    exchange_revenue,
    fp,
    iterated_best_response,
    sp,
    symmetric_instability,
    verify_fp_dominates_sp,
)
from ame.errors import HypothesisViolated
from ame.market import Kind

U = ValueDistribution.uniform(0.0, 1.0)
E = ValueDistribution.exponential(1.0)

FP_ONLY = (Kind.FIRST_PRICE,)


def upper_exchange_revenue(r_low, r_high):
    """Closed-form revenue of the higher-reserve exchange in the uniform pair."""
    a = (2.0 * r_high + math.sqrt(4.0 * r_high ** 2 - 3.0 * r_low ** 2)) / 3.0
    c = 2.0 * a * r_high - a * a
    return 1.0 / 3.0 - a ** 3 / 3.0 + c - c * a


def test_best_response_vs_zero_prefers_a_reserve():
    cfg = MarketConfig(2, U, (fp(0.5, 0.0), fp(0.5, 0.0)))
    br = best_response(cfg, 0, kinds=FP_ONLY)
    assert br.best_kind is Kind.FIRST_PRICE
    assert br.best_reserve > 0.05
    assert br.best_revenue > 1.0 / 3.0


def test_best_response_fixed_point_of_equilibrium():
    cfg = MarketConfig(2, U, (fp(0.5, 0.0), fp(0.5, 0.3157)))
    br = best_response(cfg, 0, kinds=FP_ONLY)
    assert br.best_reserve == pytest.approx(0.2402, abs=2e-3)


def test_best_response_picks_first_price():
    cfg = MarketConfig(2, U, (fp(0.5, 0.1), fp(0.5, 0.2)))
    br = best_response(cfg, 1)
    assert br.best_kind is Kind.FIRST_PRICE
    assert set(br.revenue_curve) == {"fp", "sp"}


def test_fp_dominates_sp_two_exchanges():
    cfg = MarketConfig(2, U, (fp(0.5, 0.2), sp(0.5, 0.4)))
    rev_fp, rev_sp, margin = verify_fp_dominates_sp(cfg, 1)
    assert margin > 1e-6
    assert rev_fp > rev_sp


def test_fp_dominates_sp_single_exchange_equivalence():
    # with one exchange the two formats are revenue equivalent
    cfg = MarketConfig(2, U, (fp(1.0, 0.3),))
    rev_fp, rev_sp, margin = verify_fp_dominates_sp(cfg, 0)
    assert margin == pytest.approx(0.0, abs=1e-7)


def test_fp_dominates_sp_three_exchanges():
    cfg = MarketConfig(3, U, (fp(1 / 3, 0.1), fp(1 / 3, 0.2), fp(1 / 3, 0.3)))
    _, _, margin = verify_fp_dominates_sp(cfg, 2)
    assert margin > 1e-6


def test_fp_dominates_sp_hypothesis_violated():
    cfg = MarketConfig(2, U, (sp(0.5, 0.1), fp(0.5, 0.4)))
    with pytest.raises(HypothesisViolated):
        verify_fp_dominates_sp(cfg, 1)


def test_deviation_gain_matches_formula():
    cfg = MarketConfig(2, U, (fp(0.5, 0.0), fp(0.5, 0.0)))
    res = deviation_gain_zero_reserve(cfg, 0.1)
    expected = upper_exchange_revenue(0.0, 0.1) - 1.0 / 3.0
    assert res.gain == pytest.approx(expected, abs=1e-8)
    assert res.gain == pytest.approx(0.3402 - 1.0 / 3.0, abs=5e-4)
    assert res.breakpoint == pytest.approx(0.4 / 3.0, abs=1e-9)


def test_deviation_gain_zero_epsilon():
    cfg = MarketConfig(2, U, (fp(0.5, 0.0), fp(0.5, 0.0)))
    assert deviation_gain_zero_reserve(cfg, 0.0).gain == 0.0


def test_deviation_gain_sweep_positive():
    cfg = MarketConfig(2, U, (fp(0.5, 0.0), fp(0.5, 0.0)))
    results = [deviation_gain_zero_reserve(cfg, e) for e in np.linspace(0.01, 0.2, 20)]
    best = max(results, key=lambda r: r.gain)
    assert best.gain > 1e-6
    assert best.h_value > 0.0


def test_deviation_gain_requires_zero_reserves():
    cfg = MarketConfig(2, U, (fp(0.5, 0.1), fp(0.5, 0.0)))
    with pytest.raises(HypothesisViolated):
        deviation_gain_zero_reserve(cfg, 0.05)


@pytest.mark.parametrize("r", [0.3, 0.5])
def test_symmetric_instability_matches_formula(r):
    cfg = MarketConfig(2, U, (fp(0.5, r), fp(0.5, r)))
    assert symmetric_instability(cfg) == pytest.approx(-2.0 * r * r, abs=1e-3)


def test_symmetric_instability_rejects_zero_reserve():
    cfg = MarketConfig(2, U, (fp(0.5, 0.0), fp(0.5, 0.0)))
    with pytest.raises(HypothesisViolated):
        symmetric_instability(cfg)


def test_ibr_single_exchange_monopoly_reserve():
    cfg = MarketConfig(2, U, (fp(1.0, 0.0),))
    res = iterated_best_response(cfg, max_iters=20, tol=1e-5, kinds=FP_ONLY)
    assert res.converged
    assert res.reserves[0] == pytest.approx(0.5, abs=1e-3)


def test_ibr_all_sp_monopoly_reserves():
    # against truthful residual bidding each SP exchange best-responds with
    # the monopoly reserve regardless of the rival
    cfg = MarketConfig(2, U, (sp(0.5, 0.1), sp(0.5, 0.3)))
    res = iterated_best_response(cfg, max_iters=20, tol=1e-5,
                                 kinds=(Kind.SECOND_PRICE,))
    assert res.converged
    assert res.reserves[0] == pytest.approx(0.5, abs=1e-3)
    assert res.reserves[1] == pytest.approx(0.5, abs=1e-3)


def test_ibr_reports_revenues_consistent():
    cfg = MarketConfig(2, U, (fp(0.5, 0.24), fp(0.5, 0.32)))
    res = iterated_best_response(cfg, max_iters=10, tol=1e-4, kinds=FP_ONLY)
    eq_cfg = MarketConfig(2, U, tuple(
        fp(0.5, r) for r in res.reserves))
    for j, rev in enumerate(res.revenues):
        assert rev == pytest.approx(exchange_revenue(eq_cfg, j), abs=1e-6)


def test_best_response_grid_stability():
    cfg = MarketConfig(2, U, (fp(0.5, 0.0), fp(0.5, 0.3157)))
    r64 = best_response(cfg, 0, kinds=FP_ONLY, coarse=64).best_reserve
    r128 = best_response(cfg, 0, kinds=FP_ONLY, coarse=128).best_reserve
    assert abs(r64 - r128) < 1e-4


def test_exponential_fp_dominance():
    cfg = MarketConfig(2, E, (fp(0.5, 0.5), sp(0.5, 1.0)))
    _, _, margin = verify_fp_dominates_sp(cfg, 1)
    assert margin > 1e-6
