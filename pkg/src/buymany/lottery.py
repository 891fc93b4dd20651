"""Finite lottery menus: stochastic dominance, per-item price floors, adaptive
acquisition costs and the repeated-purchase multiset strategy."""
from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx

from .lattice import Additive, SingleMinded, Valuation, items_of, submasks

__all__ = [
    "Lottery",
    "LotteryMenu",
    "ItemFloors",
    "dominates",
    "lottery_item_floor",
    "adaptive_acquisition_cost",
    "multiset_bundle_utility",
]

FLOW_TOL = 1e-9


@dataclass(frozen=True)
class Lottery:
    """Finite distribution over item subsets (bitsets)."""

    outcomes: tuple[tuple[float, int], ...]

    def __post_init__(self):
        merged: dict[int, float] = {}
        for p, s in self.outcomes:
            p = float(p)
            if not p > 0:
                raise ValueError("outcome probabilities must be positive")
            merged[int(s)] = merged.get(int(s), 0.0) + p
        if not merged:
            raise ValueError("lottery needs at least one outcome")
        total = math.fsum(merged.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"outcome probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "outcomes", tuple((p, s) for s, p in sorted(merged.items())))

    @classmethod
    def point(cls, mask: int) -> "Lottery":
        return cls(((1.0, mask),))

    def prob_contains(self, item: int) -> float:
        return math.fsum(p for p, s in self.outcomes if (s >> item) & 1)

    def prob_hits(self, mask: int) -> float:
        return math.fsum(p for p, s in self.outcomes if s & mask)

    def prob_disjoint(self, mask: int) -> float:
        return math.fsum(p for p, s in self.outcomes if not s & mask)


@dataclass(frozen=True)
class LotteryMenu:
    n: int
    options: tuple[tuple[Lottery, float], ...]

    def __post_init__(self):
        opts = []
        for lot, c in self.options:
            c = float(c)
            if not c >= 0 or not math.isfinite(c):
                raise ValueError("option prices must be finite and non-negative")
            if any(s >> self.n for _, s in lot.outcomes):
                raise ValueError("lottery outcome outside the universe")
            opts.append((lot, c))
        object.__setattr__(self, "options", tuple(opts))


def dominates(a: Lottery, b: Lottery) -> bool:
    """Whether some coupling makes a draw from ``a`` a superset of a draw
    from ``b``; decided by max-flow over the containment graph."""
    g = nx.DiGraph()
    for i, (pa, sa) in enumerate(a.outcomes):
        g.add_edge("src", ("a", i), capacity=pa)
        for j, (_, sb) in enumerate(b.outcomes):
            if sa & sb == sb:
                g.add_edge(("a", i), ("b", j), capacity=2.0)
    for j, (pb, _) in enumerate(b.outcomes):
        g.add_edge(("b", j), "sink", capacity=pb)
    if "src" not in g or "sink" not in g:
        return False
    value = nx.maximum_flow_value(g, "src", "sink")
    return value >= 1.0 - FLOW_TOL


@dataclass(frozen=True)
class ItemFloors:
    prices: tuple[float, ...]
    option_index: tuple[int | None, ...]

    @property
    def finite(self) -> bool:
        return all(math.isfinite(x) for x in self.prices)


def lottery_item_floor(menu: LotteryMenu) -> ItemFloors:
    """Cheapest expected price per unit probability of receiving each item;
    ``inf`` (with no option) for items no option ever allocates."""
    prices, which = [], []
    for i in range(menu.n):
        best, arg = math.inf, None
        for k, (lot, c) in enumerate(menu.options):
            pr = lot.prob_contains(i)
            if pr > 0 and c / pr < best:
                best, arg = c / pr, k
        prices.append(best)
        which.append(arg)
    return ItemFloors(tuple(prices), tuple(which))


def adaptive_acquisition_cost(menu: LotteryMenu, S: int) -> float:
    """Minimum expected spend to own every item of ``S`` when options can be
    bought one at a time after seeing earlier draws.

    States are the still-missing subsets ``R`` of ``S``.  Repeating an option
    until it hits ``R`` costs ``c / Pr[hit]`` in expectation, and every hit
    strictly shrinks ``R``, so the Bellman equations are solved exactly in
    order of increasing ``|R|``.
    """
    if S == 0:
        return 0.0
    floors = lottery_item_floor(menu)
    missing = [i for i in items_of(S) if not math.isfinite(floors.prices[i])]
    if missing:
        raise ValueError(f"items {missing} are never allocated by the menu")
    states = submasks(S)
    order = sorted(states.tolist(), key=lambda m: int(m).bit_count())
    value: dict[int, float] = {0: 0.0}
    for R in order:
        if R == 0:
            continue
        best = math.inf
        for lot, c in menu.options:
            hit = lot.prob_hits(R)
            if hit <= 0:
                continue
            cont = math.fsum(p * value[R & ~s] for p, s in lot.outcomes if s & R)
            cand = (c + cont) / hit
            if cand < best:
                best = cand
        value[R] = best
    return value[S]


def multiset_bundle_utility(menu: LotteryMenu, v: Valuation, T: int, m: int) -> float:
    """Expected utility of buying ``ceil(m / Pr[i in lambda_i])`` independent
    copies of each item's floor lottery ``lambda_i`` for every ``i`` in ``T``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if not isinstance(v, (Additive, SingleMinded)):
        raise ValueError("exact multiset utility needs additive or single-minded values; "
                         "use a Monte Carlo estimate for other valuations")
    floors = lottery_item_floor(menu)
    bought: list[tuple[Lottery, int]] = []
    spend = 0.0
    for i in items_of(T):
        k = floors.option_index[i]
        if k is None:
            raise ValueError(f"item {i} has no finite floor")
        lot, c = menu.options[k]
        copies = math.ceil(m / lot.prob_contains(i) - 1e-12)
        bought.append((lot, copies))
        spend += copies * c

    def prob_avoid(mask: int) -> float:
        out = 1.0
        for lot, copies in bought:
            out *= lot.prob_disjoint(mask) ** copies
        return out

    if isinstance(v, Additive):
        expected = math.fsum(x * (1.0 - prob_avoid(1 << j))
                             for j, x in enumerate(v.item_values) if x > 0)
    else:
        # inclusion-exclusion over the wanted set
        expected = v.value_ * math.fsum(
            (-1) ** int(A).bit_count() * prob_avoid(int(A)) for A in submasks(v.target))
    return expected - spend


