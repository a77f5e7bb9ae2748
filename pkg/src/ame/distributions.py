"""Value distributions, their order statistics, and monopoly-reserve machinery.

Three analytic families are supported: uniform on [lo, hi], exponential with a
rate parameter, and a bounded power law F(v) = v**k on [0, 1]. Each exposes
cdf/pdf/quantile plus the integrals the equilibrium solver needs in closed
form: int_G (integral of the high-order-statistic cdf), int_tg (expected
runner-up mass), and powers of G for mixed first/second-price segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from . import numerics
from .errors import NotRegular

# Quantile mass discarded when truncating unbounded supports for integration.
TAIL_MASS = 1e-8


class Family(str, Enum):
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"
    BOUNDED_POWER = "bounded_power"


def _wrap(v, out):
    return float(out) if np.ndim(v) == 0 else out


@dataclass(frozen=True)
class ValueDistribution:
    """An i.i.d. bidder value law with positive density on its support interior."""

    family: Family
    params: tuple[float, ...]

    def __post_init__(self):
        p = self.params
        if self.family is Family.UNIFORM:
            if len(p) != 2 or not (0.0 <= p[0] < p[1]) or not math.isfinite(p[1]):
                raise ValueError(f"uniform needs 0 <= lo < hi, got {p}")
        elif self.family is Family.EXPONENTIAL:
            if len(p) != 1 or p[0] <= 0.0:
                raise ValueError(f"exponential needs rate > 0, got {p}")
        elif self.family is Family.BOUNDED_POWER:
            if len(p) != 1 or p[0] <= 0.0:
                raise ValueError(f"bounded_power needs exponent > 0, got {p}")
        else:
            raise ValueError(f"unknown family {self.family!r}")

    @classmethod
    def uniform(cls, lo=0.0, hi=1.0):
        return cls(Family.UNIFORM, (float(lo), float(hi)))

    @classmethod
    def exponential(cls, rate=1.0):
        return cls(Family.EXPONENTIAL, (float(rate),))

    @classmethod
    def bounded_power(cls, exponent=2.0):
        return cls(Family.BOUNDED_POWER, (float(exponent),))

    @property
    def support(self):
        if self.family is Family.UNIFORM:
            return self.params[0], self.params[1]
        if self.family is Family.EXPONENTIAL:
            return 0.0, math.inf
        return 0.0, 1.0

    @property
    def trunc_hi(self):
        """Finite upper end used for all integration (quantile 1 - TAIL_MASS if unbounded)."""
        hi = self.support[1]
        return hi if math.isfinite(hi) else float(self.quantile(1.0 - TAIL_MASS))

    def cdf(self, v):
        x = np.asarray(v, dtype=float)
        if self.family is Family.UNIFORM:
            lo, hi = self.params
            out = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        elif self.family is Family.EXPONENTIAL:
            out = np.where(x > 0.0, -np.expm1(-self.params[0] * np.maximum(x, 0.0)), 0.0)
        else:
            out = np.clip(x, 0.0, 1.0) ** self.params[0]
        return _wrap(v, out)

    def sf(self, v):
        """Survival function 1 - F, computed without cancellation."""
        x = np.asarray(v, dtype=float)
        if self.family is Family.EXPONENTIAL:
            out = np.where(x > 0.0, np.exp(-self.params[0] * np.maximum(x, 0.0)), 1.0)
        else:
            out = 1.0 - np.asarray(self.cdf(x))
        return _wrap(v, out)

    def pdf(self, v):
        x = np.asarray(v, dtype=float)
        lo, hi = self.support
        if self.family is Family.UNIFORM:
            out = np.where((x >= lo) & (x <= hi), 1.0 / (hi - lo), 0.0)
        elif self.family is Family.EXPONENTIAL:
            r = self.params[0]
            out = np.where(x >= 0.0, r * np.exp(-r * np.maximum(x, 0.0)), 0.0)
        else:
            k = self.params[0]
            inside = (x > 0.0) & (x <= 1.0)
            out = np.where(inside, k * np.maximum(x, 1e-300) ** (k - 1.0), 0.0)
        return _wrap(v, out)

    def quantile(self, q):
        p = np.asarray(q, dtype=float)
        if self.family is Family.UNIFORM:
            lo, hi = self.params
            out = lo + p * (hi - lo)
        elif self.family is Family.EXPONENTIAL:
            out = -np.log1p(-p) / self.params[0]
        else:
            out = p ** (1.0 / self.params[0])
        return _wrap(q, out)

    def virtual_value(self, v):
        """Myerson's transformed value v - (1 - F(v)) / f(v)."""
        x = np.asarray(v, dtype=float)
        out = x - np.asarray(self.sf(x)) / np.asarray(self.pdf(x))
        return _wrap(v, out)


def monopoly_reserve(dist, grid=1000):
    """Zero of the virtual value, after checking strict regularity on a grid.

    Raises NotRegular when the virtual value is not strictly increasing on the
    interior quantile grid.
    """
    qs = np.linspace(1e-6, 1.0 - 1e-6, grid)
    vs = np.asarray(dist.quantile(qs))
    phi = np.asarray(dist.virtual_value(vs))
    if not np.all(np.diff(phi) > 0.0):
        raise NotRegular(f"virtual value not strictly increasing for {dist}")
    lo = vs[0]
    if dist.virtual_value(lo) >= 0.0:
        return dist.support[0]
    hi = dist.trunc_hi
    return float(brentq(dist.virtual_value, lo, hi, xtol=1e-13, rtol=8.9e-16))


@dataclass(frozen=True)
class OrderStatistics:
    """High-order statistics of n i.i.d. draws: G = F^(n-1) and its integrals."""

    n: int
    dist: ValueDistribution

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 bidders, got {self.n}")

    def G(self, v):
        out = np.asarray(self.dist.cdf(v)) ** (self.n - 1)
        return _wrap(v, out)

    def g(self, v):
        F = np.asarray(self.dist.cdf(v))
        out = (self.n - 1) * np.asarray(self.dist.pdf(v)) * F ** (self.n - 2)
        return _wrap(v, out)

    def winner_cdf(self, v):
        out = np.asarray(self.dist.cdf(v)) ** self.n
        return _wrap(v, out)

    def winner_density(self, v):
        """Density of the highest of n values: n * F^(n-1) * f."""
        out = self.n * np.asarray(self.G(v)) * np.asarray(self.dist.pdf(v))
        return _wrap(v, out)

    # -- closed-form integrals -------------------------------------------------

    def _int_G_from_lo(self, v):
        """Integral of G from support_lo to v (v clipped to the support)."""
        d = self.dist
        lo, hi = d.support
        x = np.asarray(v, dtype=float)
        if d.family is Family.UNIFORM:
            x = np.clip(x, lo, hi)
            w = hi - lo
            return w / self.n * np.asarray(d.cdf(x)) ** self.n
        if d.family is Family.BOUNDED_POWER:
            x = np.clip(x, 0.0, 1.0)
            kappa = d.params[0] * (self.n - 1)
            return x ** (kappa + 1.0) / (kappa + 1.0)
        # exponential: binomial expansion of (1 - e^{-rt})^{n-1}
        r = d.params[0]
        x = np.maximum(x, 0.0)
        acc = np.zeros_like(x)
        for j in range(self.n):
            coef = math.comb(self.n - 1, j) * (-1.0) ** j
            if j == 0:
                acc = acc + coef * x
            else:
                acc = acc + coef * -np.expm1(-j * r * x) / (j * r)
        return acc

    def int_G(self, a, b):
        """Integral of G(t) dt over [a, b]."""
        out = self._int_G_from_lo(b) - self._int_G_from_lo(a)
        return _wrap(b, out)

    def int_tg(self, a, b):
        """Integral of t*g(t) dt over [a, b] via integration by parts."""
        lo = self.dist.support[0]

        def T(v):
            x = np.asarray(v, dtype=float)
            xc = np.maximum(np.minimum(x, self.dist.support[1]), lo)
            return xc * np.asarray(self.G(xc)) - self._int_G_from_lo(xc)

        out = T(b) - T(a)
        return _wrap(b, out)

    def int_G_pow(self, a, b, k):
        """Integral of G(t)**k dt over [a, b]; analytic where the family allows."""
        d = self.dist
        lo, hi = d.support
        kappa = (self.n - 1) * k
        if d.family is Family.UNIFORM:
            w = hi - lo
            ac = np.clip(np.asarray(a, float), lo, hi)
            bc = np.clip(np.asarray(b, float), lo, hi)
            prim = lambda x: w * ((x - lo) / w) ** (kappa + 1.0) / (kappa + 1.0)
            return _wrap(b, prim(bc) - prim(ac))
        if d.family is Family.BOUNDED_POWER:
            kk = d.params[0] * kappa
            ac = np.clip(np.asarray(a, float), 0.0, 1.0)
            bc = np.clip(np.asarray(b, float), 0.0, 1.0)
            return _wrap(b, (bc ** (kk + 1.0) - ac ** (kk + 1.0)) / (kk + 1.0))
        if np.ndim(b) == 0:
            return numerics.integrate(lambda t: np.asarray(self.G(t)) ** k, float(a), float(b))
        return self.cum_G_pow(float(a), np.asarray(b, float), k)

    def cum_G_pow(self, a, grid, k):
        """Cumulative integral of G**k from a to every point of an ascending grid."""
        d = self.dist
        if d.family in (Family.UNIFORM, Family.BOUNDED_POWER):
            return np.asarray(self.int_G_pow(a, grid, k))
        edges = np.concatenate(([a], np.asarray(grid, float)))
        vals = numerics.cumulative(lambda t: np.asarray(self.G(t)) ** k, edges)
        return vals[1:]
