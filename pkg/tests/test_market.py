import pytest

from ame import MarketConfig, ValueDistribution, cumulative_share, fp, normalize, sp
from ame.errors import EmptyMarket, IndexOutOfRange, NegativeLambda

U = ValueDistribution.uniform(0.0, 1.0)


def test_normalize_rescales_equal_split():
    cfg, idx = normalize(MarketConfig(2, U, (fp(1.0, 0.3), fp(1.0, 0.5))))
    assert [ex.share for ex in cfg.exchanges] == [0.5, 0.5]
    assert [ex.reserve for ex in cfg.exchanges] == [0.3, 0.5]
    assert idx == (0, 1)


def test_normalize_sorts_by_reserve():
    cfg, idx = normalize(MarketConfig(2, U, (fp(0.5, 0.9), fp(0.5, 0.7))))
    assert [ex.reserve for ex in cfg.exchanges] == [0.7, 0.9]
    assert idx == (1, 0)


def test_normalize_merges_identical():
    cfg, idx = normalize(MarketConfig(2, U, (sp(0.3, 0.2), sp(0.7, 0.2))))
    assert cfg.m == 1
    assert cfg.exchanges[0].share == pytest.approx(1.0, abs=0)
    assert idx == (0, 0)


def test_equal_reserve_different_kind_not_merged():
    cfg, _ = normalize(MarketConfig(2, U, (fp(0.5, 0.2), sp(0.5, 0.2))))
    assert cfg.m == 2


def test_normalize_idempotent():
    cfg, _ = normalize(MarketConfig(2, U, (sp(0.3, 0.2), fp(0.7, 0.1))))
    again, idx = normalize(cfg)
    assert again == cfg
    assert idx == cfg.index_map


def test_normalize_errors():
    with pytest.raises(EmptyMarket):
        normalize(MarketConfig(2, U, ()))
    with pytest.raises(NegativeLambda):
        normalize(MarketConfig(2, U, (fp(0.5, 0.1), fp(-0.1, 0.2))))


def test_cumulative_share():
    cfg, _ = normalize(MarketConfig(2, U, (fp(0.5, 0.1), fp(0.5, 0.2))))
    assert cumulative_share(cfg, 1) == pytest.approx(0.5, abs=0)
    assert cumulative_share(cfg, 2) == pytest.approx(1.0, abs=0)

    cfg3, _ = normalize(MarketConfig(
        2, U, (fp(0.2, 0.1), fp(0.3, 0.2), fp(0.5, 0.3))))
    assert cumulative_share(cfg3, 2) == pytest.approx(0.5, abs=1e-15)
    assert cumulative_share(cfg3, 3) == pytest.approx(1.0, abs=1e-15)
    # consecutive difference recovers each share exactly
    for ell in range(2, cfg3.m + 1):
        diff = cumulative_share(cfg3, ell) - cumulative_share(cfg3, ell - 1)
        assert diff == cfg3.exchanges[ell - 1].share


def test_cumulative_share_bounds():
    cfg, _ = normalize(MarketConfig(2, U, (fp(1.0, 0.1),)))
    with pytest.raises(IndexOutOfRange):
        cumulative_share(cfg, 0)
    with pytest.raises(IndexOutOfRange):
        cumulative_share(cfg, 2)
