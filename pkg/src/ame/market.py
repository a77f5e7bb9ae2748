"""Market configuration: exchanges, traffic shares, and the aggregate mechanism layout."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .distributions import ValueDistribution
from .errors import EmptyMarket, IndexOutOfRange, NegativeLambda

# Reserves closer than this are treated as equal when merging identical exchanges.
_RESERVE_EPS = 1e-12


class Kind(str, Enum):
    FIRST_PRICE = "fp"
    SECOND_PRICE = "sp"


@dataclass(frozen=True)
class MechanismSpec:
    kind: Kind
    reserve: float

    def __post_init__(self):
        if self.reserve < 0.0 or not self.reserve == self.reserve:
            raise ValueError(f"reserve must be finite and >= 0, got {self.reserve}")
        if self.reserve == float("inf"):
            raise ValueError("reserve must be finite")


@dataclass(frozen=True)
class ExchangeSpec:
    """One exchange: a traffic share and the auction it runs."""

    share: float  # the lambda weight; appears as "lambda" in scenario JSON
    mechanism: MechanismSpec

    @property
    def kind(self):
        return self.mechanism.kind

    @property
    def reserve(self):
        return self.mechanism.reserve


def fp(share, reserve):
    return ExchangeSpec(share, MechanismSpec(Kind.FIRST_PRICE, reserve))


def sp(share, reserve):
    return ExchangeSpec(share, MechanismSpec(Kind.SECOND_PRICE, reserve))


@dataclass(frozen=True)
class MarketConfig:
    """n bidders drawing i.i.d. values plus an ordered list of exchanges.

    After normalize() the exchanges are sorted by reserve ascending, shares sum
    to one, identical (kind, reserve) exchanges are merged, and index_map sends
    each original exchange index to its merged solver index.
    """

    n_bidders: int
    dist: ValueDistribution
    exchanges: tuple[ExchangeSpec, ...]
    index_map: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "exchanges", tuple(self.exchanges))
        if self.n_bidders < 2:
            raise ValueError(f"need at least 2 bidders, got {self.n_bidders}")

    @property
    def m(self):
        return len(self.exchanges)

    @property
    def is_normalized(self):
        return self.index_map is not None


def normalize(cfg):
    """Rescale shares to sum to one, sort by reserve (stable), merge identical exchanges.

    Returns (normalized_config, index_map) where index_map[i] is the solver
    index of original exchange i. Idempotent.
    """
    if cfg.m == 0:
        raise EmptyMarket("market has no exchanges")
    for i, ex in enumerate(cfg.exchanges):
        if ex.share <= 0.0:
            raise NegativeLambda(f"exchanges[{i}].lambda must be > 0, got {ex.share}")
    total = sum(ex.share for ex in cfg.exchanges)
    order = sorted(range(cfg.m), key=lambda i: (cfg.exchanges[i].reserve, i))

    merged: list[list] = []  # [share, mechanism, original indices]
    for i in order:
        ex = cfg.exchanges[i]
        if merged and merged[-1][1].kind == ex.kind and \
                abs(merged[-1][1].reserve - ex.reserve) <= _RESERVE_EPS:
            merged[-1][0] += ex.share / total
            merged[-1][2].append(i)
        else:
            merged.append([ex.share / total, ex.mechanism, [i]])

    stage = [0] * cfg.m
    exchanges = []
    for new_idx, (share, mech, originals) in enumerate(merged):
        exchanges.append(ExchangeSpec(share, mech))
        for i in originals:
            stage[i] = new_idx
    # compose with any earlier mapping so normalize is idempotent
    if cfg.index_map is not None:
        index_map = tuple(stage[j] for j in cfg.index_map)
    else:
        index_map = tuple(stage)
    out = replace(cfg, exchanges=tuple(exchanges), index_map=index_map)
    return out, index_map


def cumulative_share(cfg, ell):
    """Aggregate market share of the first ell exchanges (1-indexed, sorted order)."""
    if not 1 <= ell <= cfg.m:
        raise IndexOutOfRange(f"ell={ell} outside 1..{cfg.m}")
    return sum(ex.share for ex in cfg.exchanges[:ell])
