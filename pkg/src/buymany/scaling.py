"""Scaled-pricing revenue machinery.

A random scale factor ``alpha`` drawn from the equal-revenue density
``1 / (alpha * ln(hi/lo))`` on ``[lo, hi]`` turns the buyer's utility drop
between prices ``lo*q`` and ``hi*q`` into expected revenue.  Everything here
is computed exactly from the upper envelope of the utility lines
``alpha -> v(S) - alpha*q(S)``.

Logarithms are natural logarithms throughout; the density only integrates to
one in that base.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .demand import best_response
from .lattice import (
    DEFAULT_TOL,
    MAX_TABLE_N,
    ItemPricing,
    Pricing,
    ToleranceConfig,
    Valuation,
    ValuationDistribution,
    additive_extension,
    all_masks,
    check_deterministic_sybil_proof,
    popcounts,
    submasks,
)

__all__ = [
    "ScaleDistribution",
    "BreakpointProfile",
    "ScaledRevenue",
    "sample_alpha",
    "expected_scaled_revenue",
    "pointwise_factor",
    "scaled_bound_check",
    "gt_pricing",
    "combined_bound_check",
]


@dataclass(frozen=True)
class ScaleDistribution:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo > 0 and self.hi >= self.lo and math.isfinite(self.hi)):
            raise ValueError("need 0 < lo <= hi < inf")

    @property
    def log_ratio(self) -> float:
        return math.log(self.hi / self.lo)

    def density(self, alpha: float) -> float:
        if not self.lo <= alpha <= self.hi or self.lo == self.hi:
            return 0.0
        return 1.0 / (alpha * self.log_ratio)

    def inverse_cdf(self, u: float) -> float:
        if self.lo == self.hi:
            return self.lo
        return self.lo * (self.hi / self.lo) ** u

    def sample(self, rng: np.random.Generator, size: int | None = None):
        u = rng.random(size)
        return self.lo * (self.hi / self.lo) ** u


def sample_alpha(sd: ScaleDistribution, seed: int | np.random.Generator = 0) -> float:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return float(sd.inverse_cdf(float(rng.random())))


@dataclass(frozen=True)
class BreakpointProfile:
    intervals: tuple[tuple[float, float, int], ...]

    def chosen_at(self, alpha: float) -> int:
        for start, end, s in self.intervals:
            if start <= alpha <= end:
                return s
        raise ValueError("alpha outside the profile range")


@dataclass(frozen=True)
class ScaledRevenue:
    value: float
    profile: BreakpointProfile
    utility_lo: float
    utility_hi: float
    log_ratio: float

    @property
    def utility_drop_rate(self) -> float:
        """Utility drop divided by ``ln(hi/lo)``."""
        if self.log_ratio == 0:
            return self.value
        return (self.utility_lo - self.utility_hi) / self.log_ratio


def _lines(v: Valuation, q: Pricing) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best set per distinct price: returns ``(prices, values, masks)``."""
    full = (1 << q.n) - 1
    if q.is_monotone and v.relevant_mask != full:
        masks = submasks(v.relevant_mask)
        vals, prices = v.values(masks), q.prices(masks)
    else:
        if q.n > MAX_TABLE_N:
            raise ValueError("universe too large for exact scaling")
        masks = all_masks(q.n)
        vals, prices = v.table(), q.table()
    finite = np.isfinite(prices)
    masks, vals, prices = masks[finite], vals[finite], prices[finite]
    sizes = np.array([int(m).bit_count() for m in masks])
    # within one price: highest value, then smallest cardinality, then bitset
    order = np.lexsort((masks, sizes, -vals, prices))
    prices, vals, masks = prices[order], vals[order], masks[order]
    first = np.ones(len(prices), dtype=bool)
    first[1:] = prices[1:] != prices[:-1]
    return prices[first], vals[first], masks[first]


def _argmax_right(alpha: float, prices: np.ndarray, vals: np.ndarray) -> int:
    """Line maximal at ``alpha`` that stays maximal just to its right."""
    u = vals - alpha * prices
    best = u.max()
    slack = 1e-12 * max(1.0, abs(best), float(np.abs(vals).max(initial=0.0)))
    cand = np.flatnonzero(u >= best - slack)
    return int(cand[np.argmin(prices[cand])])


def expected_scaled_revenue(v: Valuation, q: Pricing, sd: ScaleDistribution,
                            tol: ToleranceConfig = DEFAULT_TOL) -> ScaledRevenue:
    """Exact ``E_alpha[Rev_v(alpha q)]`` with the buyer's breakpoint profile."""
    prices, vals, masks = _lines(v, q)
    lo, hi = sd.lo, sd.hi
    u_lo = float((vals - lo * prices).max())
    u_hi = float((vals - hi * prices).max())
    if lo == hi:
        br = best_response(v, q.scaled(lo), tol)
        prof = BreakpointProfile(((lo, hi, br.chosen_set),))
        return ScaledRevenue(br.price_paid, prof, u_lo, u_hi, 0.0)

    intervals = []
    alpha = lo
    cur = _argmax_right(alpha, prices, vals)
    total = 0.0
    while True:
        lower = prices < prices[cur]
        nxt = hi
        if lower.any():
            xs = (vals[cur] - vals[lower]) / (prices[cur] - prices[lower])
            xs = xs[xs > alpha]
            if len(xs):
                nxt = min(hi, float(xs.min()))
        intervals.append((alpha, nxt, int(masks[cur])))
        total += float(prices[cur]) * (nxt - alpha)
        if nxt >= hi:
            break
        alpha = nxt
        new = _argmax_right(alpha, prices, vals)
        if prices[new] >= prices[cur]:
            # numerical stall: force progress to the next-cheaper line
            cand = np.flatnonzero(lower)
            u = vals[cand] - alpha * prices[cand]
            new = int(cand[np.argmax(u)])
        cur = new
    merged: list[tuple[float, float, int]] = []
    for start, end, s in intervals:
        if end <= start:
            continue
        if merged and merged[-1][2] == s:
            merged[-1] = (merged[-1][0], end, s)
        else:
            merged.append((start, end, s))
    if not merged:
        merged = [(lo, hi, intervals[-1][2])]
    return ScaledRevenue(total / sd.log_ratio, BreakpointProfile(tuple(merged)),
                         u_lo, u_hi, sd.log_ratio)


def pointwise_factor(p: Pricing, q: Pricing, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Smallest ``c`` with ``q/c <= p <= q`` on every set (``inf`` when some set
    is free under ``p`` but priced under ``q``)."""
    if p.n != q.n:
        raise ValueError("pricings live on different universes")
    tp, tq = p.table(), q.table()
    if not (np.isfinite(tp).all() and np.isfinite(tq).all()):
        raise ValueError("pointwise factor needs finite pricings")
    over = tp > tq + tol.eps_price
    if over.any():
        s = int(np.argmax(over))
        raise ValueError(f"p exceeds q on set {s:#b}: {tp[s]} > {tq[s]}")
    both_zero = (tp == 0) & (tq == 0)
    if ((tp == 0) & (tq > 0)).any():
        return math.inf
    ratio = np.where(both_zero, 1.0, tq / np.where(tp == 0, 1.0, tp))
    return float(max(1.0, ratio.max()))


@dataclass(frozen=True)
class TypeMargin:
    index: int
    weight: float
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


@dataclass
class BoundReport:
    margins: list[TypeMargin]
    params: dict = field(default_factory=dict)

    def holds(self, eps: float = DEFAULT_TOL.eps_report) -> bool:
        return all(m.margin >= -eps for m in self.margins)

    @property
    def min_margin(self) -> float:
        return min((m.margin for m in self.margins), default=0.0)


def _require_sybil_proof(p: Pricing, tol: ToleranceConfig) -> None:
    rep = check_deterministic_sybil_proof(p, tol, max_witnesses=1)
    if not rep.sybil_proof or rep.partial:
        raise ValueError(f"pricing is not monotone subadditive (witnesses {rep.witnesses})")


def scaled_bound_check(p: Pricing, D: ValuationDistribution, q: Pricing | None = None,
                       lo: float | None = None, hi: float | None = None,
                       tol: ToleranceConfig = DEFAULT_TOL, verify: bool = True) -> BoundReport:
    """Per-type margins of ``E_alpha[Rev_v(alpha q)] - Rev_v(p) / (2 ln 2c)``.

    ``q`` defaults to the additive extension of ``p`` and ``c`` is the
    pointwise factor between them; ``lo``/``hi`` default to ``1/(2c)`` and 1.
    """
    if verify:
        _require_sybil_proof(p, tol)
    q = additive_extension(p) if q is None else q
    c = pointwise_factor(p, q, tol)
    if not math.isfinite(c):
        raise ValueError("pointwise factor is infinite")
    sd = ScaleDistribution(1.0 / (2 * c) if lo is None else lo, 1.0 if hi is None else hi)
    denom = 2 * math.log(2 * c)
    margins = []
    for idx, (w, v) in enumerate(D.support):
        lhs = expected_scaled_revenue(v, q, sd, tol).value
        rhs = best_response(v, p, tol).price_paid / denom
        margins.append(TypeMargin(idx, w, lhs, rhs))
    return BoundReport(margins, {"c": c, "lo": sd.lo, "hi": sd.hi})


def gt_pricing(q_vector, T: int, a: int) -> ItemPricing:
    """Uniform item pricing charging ``2**(a+n) * q(T)`` per item."""
    if a < 0:
        raise ValueError("exponent a must be non-negative")
    qv = np.asarray(q_vector, dtype=float)
    n = len(qv)
    qT = float(sum(qv[i] for i in range(n) if (T >> i) & 1))
    return ItemPricing((2.0 ** (a + n) * qT,) * n)


def _uniform_price_revenue(best_by_size: np.ndarray, r: np.ndarray, eps_tie: float) -> np.ndarray:
    """Revenue of per-item price ``r`` for a buyer whose best ``k``-set is
    worth ``best_by_size[k]``; ties go to the larger purchase."""
    k = np.arange(len(best_by_size))
    util = best_by_size[None, :] - r[:, None] * k[None, :]
    top = util.max(axis=1, keepdims=True)
    ok = util >= top - eps_tie
    kstar = np.where(ok, k[None, :], -1).max(axis=1)
    return r * kstar


def combined_bound_check(p: Pricing, D: ValuationDistribution, a_max: int = 256,
                         lo: float | None = None, hi: float | None = None,
                         tol: ToleranceConfig = DEFAULT_TOL, verify: bool = True) -> BoundReport:
    """Per-type margins of
    ``ln(hi/lo) E_alpha[Rev_v(alpha q)] + 4 E_{T,a}[Rev_v(g_{T,a})] - p(v)/2``
    with ``lo = 1/(2n)``, ``hi = 4n``, ``T`` uniform over all subsets and
    ``Pr[a = x] = 2**(-x-1)``.  The geometric sum over ``a`` is cut where
    every buyer buys nothing, so the expectation is exact.
    """
    n = p.n
    if n > 10:
        raise ValueError("combined bound enumerates 2^n sets T; needs n <= 10")
    if verify:
        _require_sybil_proof(p, tol)
    q = additive_extension(p)
    sd = ScaleDistribution(1.0 / (2 * n) if lo is None else lo, 4.0 * n if hi is None else hi)
    qT = q.table()
    positive = qT[qT > 0]
    top_value = max(v.grand_value() for v in D.valuations)
    if len(positive) == 0:
        a_stop = 0
    else:
        a_stop = 0
        while 2.0 ** (a_stop + n) * positive.min() <= top_value + tol.eps_tie:
            a_stop += 1
            if a_stop > a_max:
                raise ValueError(
                    f"prices never exceed every buyer's value within a_max={a_max}; "
                    "increase a_max")
    sizes = popcounts(n)
    a_vals = np.arange(a_stop)
    # r[T, a] flattened; weight 2^-n * 2^-(a+1)
    r = (2.0 ** (a_vals[None, :] + n) * qT[:, None]).ravel()
    wts = (np.full(len(qT), 2.0 ** -n)[:, None] * 2.0 ** -(a_vals[None, :] + 1)).ravel()

    margins = []
    for idx, (w, v) in enumerate(D.support):
        t = v.table()
        best_by_size = np.array([t[sizes == k].max() for k in range(n + 1)])
        e_alpha = expected_scaled_revenue(v, q, sd, tol).value
        e_gt = float(np.dot(wts, _uniform_price_revenue(best_by_size, r, tol.eps_tie))) if len(r) else 0.0
        lhs = sd.log_ratio * e_alpha + 4.0 * e_gt
        rhs = best_response(v, p, tol).price_paid / 2.0
        margins.append(TypeMargin(idx, w, lhs, rhs))
    return BoundReport(margins, {"lo": sd.lo, "hi": sd.hi, "a_stop": a_stop})
