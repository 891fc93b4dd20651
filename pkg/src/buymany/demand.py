"""Buyer best response, revenue and demand distributions for deterministic
pricings."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .lattice import (
    DEFAULT_TOL,
    MAX_TABLE_N,
    Additive,
    ItemPricing,
    Pricing,
    SingleMinded,
    ToleranceConfig,
    Valuation,
    ValuationDistribution,
    all_masks,
    items_of,
    submasks,
)

__all__ = [
    "DemandResult",
    "ExplicitDemand",
    "ProductMarginals",
    "best_response",
    "revenue",
    "demand_distribution",
    "singleminded_from_demand",
]


@dataclass(frozen=True)
class DemandResult:
    chosen_set: int
    price_paid: float
    utility: float

    @property
    def items(self) -> list[int]:
        return items_of(self.chosen_set)


@dataclass(frozen=True)
class ExplicitDemand:
    n: int
    outcomes: tuple[tuple[float, int], ...]

    def __post_init__(self):
        outs = tuple((float(w), int(s)) for w, s in self.outcomes)
        if any(w < 0 for w, _ in outs):
            raise ValueError("probabilities must be non-negative")
        total = math.fsum(w for w, _ in outs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "outcomes", outs)

    def iter_outcomes(self) -> Iterator[tuple[float, int]]:
        return iter(self.outcomes)

    def marginals(self) -> np.ndarray:
        pi = np.zeros(self.n)
        for w, s in self.outcomes:
            for i in items_of(s):
                pi[i] += w
        return pi

    def as_dict(self) -> dict[int, float]:
        d: dict[int, float] = defaultdict(float)
        for w, s in self.outcomes:
            d[s] += w
        return dict(d)


@dataclass(frozen=True)
class ProductMarginals:
    """Independent inclusion of item ``i`` with probability ``pi[i]``."""

    pi: tuple[float, ...]

    def __post_init__(self):
        pi = tuple(float(x) for x in self.pi)
        if any(not 0.0 <= x <= 1.0 for x in pi):
            raise ValueError("marginals must lie in [0, 1]")
        object.__setattr__(self, "pi", pi)

    @property
    def n(self) -> int:
        return len(self.pi)

    def marginals(self) -> np.ndarray:
        return np.array(self.pi)

    def probabilities(self, items: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Exact ``(masks, probs)`` over subsets of ``items`` (default: all)."""
        items = list(range(self.n)) if items is None else list(items)
        if len(items) > MAX_TABLE_N:
            raise ValueError("too many coordinates for exact enumeration")
        masks = np.zeros(1, dtype=np.int64)
        probs = np.ones(1)
        for i in items:
            p = self.pi[i]
            masks = np.concatenate([masks, masks | (1 << i)])
            probs = np.concatenate([probs * (1 - p), probs * p])
        return masks, probs

    def iter_outcomes(self) -> Iterator[tuple[float, int]]:
        masks, probs = self.probabilities()
        for m, w in zip(masks, probs):
            if w > 0:
                yield float(w), int(m)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        draws = rng.random((size, self.n)) < np.array(self.pi)[None, :]
        return (draws.astype(np.int64) << np.arange(self.n, dtype=np.int64)[None, :]).sum(axis=1)


def _pick(masks: np.ndarray, vals: np.ndarray, prices: np.ndarray, eps_tie: float) -> DemandResult:
    util = vals - prices
    best = util.max()
    cand = np.flatnonzero(util >= best - eps_tie)
    if len(cand) > 1:
        cm = masks[cand]
        sizes = np.array([int(m).bit_count() for m in cm])
        # lexsort: last key is primary
        order = np.lexsort((cm, sizes, -prices[cand]))
        j = cand[order[0]]
    else:
        j = cand[0]
    return DemandResult(int(masks[j]), float(prices[j]), float(util[j]))


def best_response(v: Valuation, p: Pricing, tol: ToleranceConfig = DEFAULT_TOL) -> DemandResult:
    """Utility-maximizing set; ties within ``eps_tie`` go to the highest price,
    then the smallest cardinality, then the smallest bitset.

    Against a monotone pricing only subsets of the valuation's relevant items
    can be strictly optimal, so those are the only sets enumerated; this is
    what makes large universes with sparse valuations tractable.
    """
    if v.n != p.n:
        raise ValueError("valuation and pricing live on different universes")
    if isinstance(p, ItemPricing) and isinstance(v, Additive):
        vv, qq = v.vector, p.vector
        take = (vv > qq) | ((vv == qq) & (qq > 0))
        mask = int(sum(1 << int(i) for i in np.flatnonzero(take)))
        paid = float(qq[take].sum())
        return DemandResult(mask, paid, float(vv[take].sum()) - paid)
    if isinstance(v, SingleMinded) and p.is_monotone:
        c = p.price(v.target)
        gain = v.value_ - c
        if v.target and math.isfinite(c) and (gain > tol.eps_tie or (gain >= -tol.eps_tie and c > 0)):
            return DemandResult(v.target, c, gain)
        return DemandResult(0, 0.0, 0.0)
    full = (1 << p.n) - 1
    if p.is_monotone and v.relevant_mask != full:
        masks = submasks(v.relevant_mask)
        return _pick(masks, v.values(masks), p.prices(masks), tol.eps_tie)
    if p.n > MAX_TABLE_N:
        raise ValueError(f"cannot enumerate all subsets of n={p.n} items")
    return _pick(all_masks(p.n), v.table(), p.table(), tol.eps_tie)


def revenue(D: ValuationDistribution, p: Pricing, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    return math.fsum(w * best_response(v, p, tol).price_paid for w, v in D.support)


def demand_distribution(p: Pricing, D: ValuationDistribution,
                        tol: ToleranceConfig = DEFAULT_TOL) -> ExplicitDemand:
    acc: dict[int, float] = {}
    for w, v in D.support:
        s = best_response(v, p, tol).chosen_set
        acc[s] = acc.get(s, 0.0) + w
    return ExplicitDemand(p.n, tuple((w, s) for s, w in acc.items()))


def singleminded_from_demand(demand: ExplicitDemand | ProductMarginals, p: Pricing,
                             drop_zero: bool = True) -> ValuationDistribution:
    """Single-minded types that each want one demanded set at its price.

    With ``drop_zero`` outcomes of probability 0 are omitted (product
    marginals at 0 or 1 produce them).
    """
    pairs = []
    for w, s in demand.iter_outcomes():
        if drop_zero and w <= 0:
            continue
        c = p.price(s)
        if not math.isfinite(c):
            raise ValueError(f"infinite price on demanded set {items_of(s)}")
        pairs.append((w, SingleMinded(p.n, s, c)))
    total = math.fsum(w for w, _ in pairs)
    return ValuationDistribution(tuple((w / total, v) for w, v in pairs))
