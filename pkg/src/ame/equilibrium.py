"""Symmetric equilibrium bidding for the traffic-weighted aggregate of sealed-bid auctions.

The bidding function is piecewise: sorted by reserve, each group of exchanges
activates at a breakpoint where the marginal winner is indifferent between the
standing bid and jumping to the new reserve. Within a segment the first-order
condition gives a linear ODE whose integrating-factor solution is

    beta(v) = v - [int_a^v G(t)**k dt + (a - s) * G(a)**k] / G(v)**k,

with k the ratio of total active share to the first-price active share. k = 1
recovers the all-first-price closed form; an all-second-price active set makes
truthful bidding (beta = v) the solution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import numerics
from .distributions import OrderStatistics
from .errors import (
    DegenerateSegment,
    IndexOutOfRange,
    ReserveAboveSupport,
    SolverDiverged,
)
from .market import Kind, normalize

_EPS = 1e-12


@dataclass(frozen=True)
class SolverOptions:
    grid_size: int = 1024          # nodes per segment grid
    root_tol: float = 1e-12        # breakpoint root tolerance in value units
    regularity_grid: int = 1000    # grid for virtual-value monotonicity checks


class SegmentForm(str, Enum):
    CLOSED_FORM_FP = "closed_form_fp"   # all active exchanges first-price
    IDENTITY = "identity"               # all active exchanges second-price
    ODE_GRID = "ode_grid"               # mixed active set, dense solution grid


@dataclass(frozen=True)
class SpTerm:
    """An active second-price exchange: activation point, reserve, share."""

    breakpoint: float
    reserve: float
    share: float
    # G(breakpoint)*reserve - B(breakpoint), so the conditional payment at
    # winner value v is (pay_base + B(v)) / G(v)
    pay_base: float = 0.0


@dataclass(eq=False)
class Segment:
    """One continuous piece of the bidding function on [lo, hi)."""

    lo: float
    hi: float                      # +inf sentinel until the next breakpoint is known
    active_fp_share: float
    active_sp_share: float
    sp_terms: tuple[SpTerm, ...]
    form: SegmentForm | None = None
    start_bid: float = 0.0         # right limit of beta at lo
    constant: float | None = None  # G(lo)*start_bid for the closed-form case
    grid: np.ndarray | None = None
    bids: np.ndarray | None = None
    pay_offset: float = 0.0        # integral of beta*g from the first breakpoint to lo
    _os: OrderStatistics | None = field(default=None, repr=False)
    _bid_ip: object = field(default=None, repr=False)
    _pay_grid: np.ndarray | None = field(default=None, repr=False)
    _pay_ip: object = field(default=None, repr=False)

    @property
    def total_share(self):
        return self.active_fp_share + self.active_sp_share

    def eval(self, v):
        """Bid at value v per this segment's law (valid for v >= lo)."""
        x = np.asarray(v, dtype=float)
        if self.form is SegmentForm.IDENTITY:
            out = x.copy()
        elif self.form is SegmentForm.CLOSED_FORM_FP:
            Gv = np.asarray(self._os.G(x))
            num = self.constant + np.asarray(self._os.int_tg(self.lo, x))
            out = np.where(Gv > 0.0, num / np.where(Gv > 0.0, Gv, 1.0), self.lo)
        else:
            hi_grid = self.grid[-1]
            out = self._bid_ip(np.clip(x, self.lo, hi_grid))
        return float(out) if np.ndim(v) == 0 else out

    def pay_at(self, v):
        """Integral of beta*g from the first breakpoint up to v (v within this segment)."""
        x = np.clip(np.asarray(v, dtype=float), self.lo, self.grid[-1])
        out = self.pay_offset + self._pay_ip(x)
        return float(out) if np.ndim(v) == 0 else out


def solve_segment(seg, os_, start_bid, grid_size=1024):
    """Solve one segment from (seg.lo, start_bid) over the whole remaining domain.

    Returns a new Segment carrying the dense solution grid, the exact form
    used, and the cumulative payment integral needed by second-price terms.
    """
    lo = seg.lo
    trunc = os_.dist.trunc_hi
    if not lo < trunc:
        raise DegenerateSegment(f"segment starts at or beyond the domain end ({lo} >= {trunc})")
    G_lo = float(os_.G(lo))
    if G_lo <= 0.0 and start_bid > lo + 1e-9:
        raise DegenerateSegment(
            f"positive start bid {start_bid} at zero win probability (lo={lo})")

    grid = np.linspace(lo, trunc, grid_size)
    lam_i, lam_j = seg.active_fp_share, seg.active_sp_share
    constant = None

    if lam_i <= _EPS:
        form = SegmentForm.IDENTITY
        bids = grid.copy()
    else:
        k = (lam_i + lam_j) / lam_i
        ig = os_.cum_G_pow(lo, grid, k)
        Gk = np.asarray(os_.G(grid)) ** k
        with np.errstate(divide="ignore", invalid="ignore"):
            bids = grid - (ig + (lo - start_bid) * G_lo ** k) / Gk
        bids[0] = start_bid if G_lo > 0.0 else lo
        if not np.all(np.isfinite(bids)):
            raise SolverDiverged(f"segment solution not finite from lo={lo}")
        form = SegmentForm.CLOSED_FORM_FP if lam_j <= _EPS else SegmentForm.ODE_GRID
        if form is SegmentForm.CLOSED_FORM_FP:
            constant = G_lo * start_bid

    out = Segment(
        lo=lo, hi=seg.hi,
        active_fp_share=lam_i, active_sp_share=lam_j,
        sp_terms=seg.sp_terms, form=form, start_bid=float(start_bid),
        constant=constant, grid=grid, bids=bids, pay_offset=seg.pay_offset,
        _os=os_,
    )
    if form is SegmentForm.IDENTITY:
        pay = np.asarray(os_.int_tg(lo, grid))
    else:
        out._bid_ip = PchipInterpolator(grid, bids, extrapolate=True)
        bid_fn = out.eval if form is SegmentForm.CLOSED_FORM_FP else out._bid_ip
        pay = numerics.cumulative(
            lambda t: np.asarray(bid_fn(t)) * np.asarray(os_.g(t)), grid)
    out._pay_grid = pay
    out._pay_ip = PchipInterpolator(grid, pay, extrapolate=True)
    return out


@dataclass(eq=False)
class BiddingFunction:
    """Piecewise symmetric equilibrium bid, right-continuous at breakpoints."""

    market: object                     # normalized MarketConfig
    os: OrderStatistics
    breakpoints: tuple[float, ...]     # one per solved exchange, support-hi if it never sells
    segments: tuple[Segment, ...]
    never_sells: tuple[int, ...] = ()
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        self._seg_los = np.array([s.lo for s in self.segments]) if self.segments else np.empty(0)

    @property
    def trunc_hi(self):
        return self.os.dist.trunc_hi

    def _route(self, x):
        return np.searchsorted(self._seg_los, x, side="right") - 1

    def eval(self, v):
        """Bid at value v; zero below the first breakpoint."""
        x = np.asarray(v, dtype=float)
        out = np.zeros_like(x)
        if self.segments:
            idx = self._route(x)
            for i, seg in enumerate(self.segments):
                mask = idx == i
                if np.any(mask):
                    out[mask] = seg.eval(x[mask])
        return float(out) if np.ndim(v) == 0 else out

    def pay_integral(self, v):
        """Integral of beta(t) g(t) dt from the first breakpoint to v."""
        x = np.asarray(v, dtype=float)
        out = np.zeros_like(x)
        if self.segments:
            idx = self._route(x)
            for i, seg in enumerate(self.segments):
                mask = idx == i
                if np.any(mask):
                    out[mask] = seg.pay_at(x[mask])
        return float(out) if np.ndim(v) == 0 else out

    def segment_at(self, v):
        i = int(self._route(float(v)))
        return self.segments[i] if 0 <= i < len(self.segments) else None


def eval_bid(beta, v):
    """Bid at value v (right-continuous at breakpoints; zero below the lowest)."""
    return beta.eval(v)


def one_sided_limits(beta, ell):
    """(left limit, right limit) of the bid at breakpoint ell (1-indexed exchange)."""
    if not 1 <= ell <= len(beta.breakpoints):
        raise IndexOutOfRange(f"ell={ell} outside 1..{len(beta.breakpoints)}")
    a = beta.breakpoints[ell - 1]
    if not math.isfinite(a) or a >= beta.trunc_hi:
        return math.nan, math.nan
    below = [s for s in beta.segments if s.lo < a - _EPS]
    minus = below[-1].eval(a) if below else 0.0
    return float(minus), float(beta.eval(a))


def _bisect_down(h, lo, hi, tol):
    """Root of a decreasing function with h(lo) >= 0 >= h(hi), to width tol."""
    if not np.isfinite(h(lo)) or not np.isfinite(h(hi)):
        raise SolverDiverged("indifference residual not finite on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class _Level:
    reserve: float
    members: tuple  # (solver index, ExchangeSpec)

    @property
    def share(self):
        return sum(ex.share for _, ex in self.members)


def _group_levels(exchanges):
    levels = []
    for idx, ex in enumerate(exchanges):
        if levels and abs(ex.reserve - levels[-1][0]) <= _EPS:
            levels[-1][1].append((idx, ex))
        else:
            levels.append([ex.reserve, [(idx, ex)]])
    return [_Level(r, tuple(mem)) for r, mem in levels]


def _cell_jump_pay(cell, r_star):
    """Sum of share * activation payment over a cell's members when bidding r_star."""
    total = 0.0
    for lv in cell:
        for _, ex in lv.members:
            total += ex.share * (r_star if ex.kind is Kind.FIRST_PRICE else lv.reserve)
    return total


def solve_bidding(cfg, options=None):
    """Solve the symmetric equilibrium bidding function for a market.

    Accepts raw or normalized configs (normalizes internally). Exchanges whose
    reserve is never cleared by equilibrium bids are flagged and assigned a
    breakpoint at the top of the support.
    """
    opts = options or SolverOptions()
    ncfg, _ = normalize(cfg)
    os_ = OrderStatistics(ncfg.n_bidders, ncfg.dist)
    dist = ncfg.dist
    lo_sup, hi_sup = dist.support
    trunc = dist.trunc_hi

    levels = _group_levels(ncfg.exchanges)
    flags = []
    never: dict[int, float] = {}
    sellable = []
    for lv in levels:
        if lv.reserve >= hi_sup:
            warnings.warn(
                f"reserve {lv.reserve} at or above the support top {hi_sup}",
                ReserveAboveSupport, stacklevel=2)
            for idx, _ in lv.members:
                flags.append(f"reserve_above_support:{idx}")
                never[idx] = hi_sup
        elif lv.reserve >= trunc * (1.0 - 1e-12):
            for idx, _ in lv.members:
                flags.append(f"reserve_beyond_truncation:{idx}")
                never[idx] = hi_sup
        else:
            sellable.append(lv)

    breakpoints = dict(never)
    segments: list[Segment] = []
    if sellable:
        partition = [[lv] for lv in sellable]
        for _attempt in range(len(sellable) + 2):
            outcome = _try_partition(partition, os_, opts, lo_sup, trunc)
            status = outcome[0]
            if status == "ok":
                _, segments, solved_bp = outcome
                breakpoints.update(solved_bp)
                break
            if status == "merge_back":
                k = outcome[1]
                partition[k - 1] = partition[k - 1] + partition[k]
                del partition[k]
            elif status == "merge_fwd":
                k = outcome[1]
                partition[k] = partition[k] + partition[k + 1]
                del partition[k + 1]
            elif status == "never_tail":
                k = outcome[1]
                for cell in partition[k:]:
                    for lv in cell:
                        for idx, _ in lv.members:
                            flags.append(f"reserve_never_reached:{idx}")
                            breakpoints[idx] = hi_sup
                partition = partition[:k]
        else:
            raise SolverDiverged("breakpoint partition search did not settle")

    bp = tuple(breakpoints.get(i, hi_sup) for i in range(ncfg.m))
    return BiddingFunction(
        market=ncfg, os=os_, breakpoints=bp, segments=tuple(segments),
        never_sells=tuple(sorted(never)), flags=tuple(flags))


def _try_partition(partition, os_, opts, lo_sup, trunc):
    """Sequentially place one breakpoint per cell; report required cell merges."""
    segments: list[Segment] = []
    breakpoints: dict[int, float] = {}
    active_fp = 0.0
    sp_terms: list[SpTerm] = []
    pay_off = 0.0
    cur: Segment | None = None

    for ci, cell in enumerate(partition):
        r_star = cell[-1].reserve
        lam_new = sum(lv.share for lv in cell)
        if cur is None:
            a = max(r_star, lo_sup)
        else:
            jump_pay = _cell_jump_pay(cell, r_star)

            def h(x):
                return active_fp * (r_star - cur.eval(x)) + jump_pay - lam_new * x

            lo_x = max(cur.lo, r_star)
            h_lo = h(lo_x)
            if h_lo < -1e-9:
                if ci == 0:
                    raise SolverDiverged("first cell cannot backtrack")
                return ("merge_back", ci)
            if h(trunc) > 0.0:
                if ci + 1 < len(partition):
                    return ("merge_fwd", ci)
                return ("never_tail", ci)
            if h_lo <= 1e-12:
                a = lo_x
            else:
                a = _bisect_down(h, lo_x, trunc, opts.root_tol)

        if cur is not None:
            b_at = cur.pay_at(a)
            cur.hi = a
            segments.append(cur)
        else:
            b_at = 0.0

        Ga = float(os_.G(a))
        for lv in cell:
            for idx, ex in lv.members:
                breakpoints[idx] = a
                if ex.kind is Kind.SECOND_PRICE:
                    sp_terms.append(SpTerm(
                        breakpoint=a, reserve=lv.reserve, share=ex.share,
                        pay_base=Ga * lv.reserve - b_at))
                else:
                    active_fp += ex.share
        start = r_star if Ga > 0.0 else a
        proto = Segment(
            lo=a, hi=math.inf,
            active_fp_share=active_fp,
            active_sp_share=sum(t.share for t in sp_terms),
            sp_terms=tuple(sp_terms), pay_offset=b_at)
        cur = solve_segment(proto, os_, start, grid_size=opts.grid_size)

    if cur is not None:
        cur.hi = math.inf
        segments.append(cur)
    return ("ok", segments, breakpoints)


# -- equilibrium audit ----------------------------------------------------------


def _bid_crossings(bid_fn, reserves, lo, hi, iters=80):
    """Smallest value whose bid clears each reserve (inf when never cleared)."""
    out = []
    for r in reserves:
        if bid_fn(lo) >= r:
            out.append(lo)
            continue
        if bid_fn(hi) < r:
            out.append(math.inf)
            continue
        a, b = lo, hi
        for _ in range(iters):
            mid = 0.5 * (a + b)
            if bid_fn(mid) >= r:
                b = mid
            else:
                a = mid
        out.append(b)
    return out


def regret_audit(beta, cfg, values=None, bid_grid_size=2000):
    """Maximum gain any bidder value gets from deviating to another point of the bid curve.

    Utilities are computed from the bid function alone (payment integrals are
    re-derived by quadrature here, independent of solver caches), so any
    monotone bid profile can be audited, including perturbed ones. Deviating to
    not bidding at all is included. A small or negative return certifies the
    profile as an equilibrium at audit tolerance.
    """
    ncfg, _ = normalize(cfg)
    os_ = OrderStatistics(ncfg.n_bidders, ncfg.dist)
    dist = ncfg.dist
    lo_sup = dist.support[0]
    trunc = dist.trunc_hi

    reserves = [ex.reserve for ex in ncfg.exchanges]
    cross = _bid_crossings(lambda v: float(beta.eval(v)), reserves, lo_sup, trunc)

    # cumulative integral of beta*g on a fine grid split at the bid jumps;
    # linear interpolation keeps the kinks at activation points exact
    base = np.linspace(lo_sup, trunc, 8193)
    edges = np.unique(np.concatenate([base, [c for c in cross if math.isfinite(c)]]))
    cumpay = np.concatenate(
        ([0.0], np.cumsum(numerics.panel_integrals(
            lambda t: np.asarray(beta.eval(t)) * np.asarray(os_.g(t)), edges))))

    def pay_ip(x):
        return np.interp(np.asarray(x, dtype=float), edges, cumpay)

    def scaled_terms(s):
        """Coefficient of v and the payment mass, both scaled by G(s)."""
        s = np.asarray(s, dtype=float)
        Gs = np.asarray(os_.G(s))
        bid = np.asarray(beta.eval(s))
        B = pay_ip(np.clip(s, lo_sup, trunc))
        coef = np.zeros_like(s)
        pay = np.zeros_like(s)
        for ex, a_j in zip(ncfg.exchanges, cross):
            if not math.isfinite(a_j):
                continue
            act = s >= a_j
            coef += ex.share * Gs * act
            if ex.kind is Kind.FIRST_PRICE:
                pay += np.where(act, ex.share * bid * Gs, 0.0)
            else:
                base_j = float(os_.G(a_j)) * ex.reserve - float(pay_ip(a_j))
                pay += np.where(act, ex.share * (base_j + B), 0.0)
        return coef, pay

    finite = [c for c in cross if math.isfinite(c)]
    if not finite:
        return 0.0
    a1 = min(finite)
    targets = np.linspace(lo_sup, trunc, bid_grid_size)
    extras = []
    for c in finite:
        extras.extend([c, max(c - 1e-9, lo_sup)])
    targets = np.unique(np.concatenate([targets, extras]))

    if values is None:
        values = np.linspace(lo_sup, trunc, 200)
    values = np.asarray(values, dtype=float)

    coef_s, pay_s = scaled_terms(targets)
    coef_v, pay_v = scaled_terms(values)
    u_dev = values[:, None] * coef_s[None, :] - pay_s[None, :]
    best = np.maximum(u_dev.max(axis=1), 0.0)   # bidding nothing is allowed
    own = values * coef_v - pay_v
    own = np.where(values < a1, 0.0, own)
    return float(np.max(best - own))
