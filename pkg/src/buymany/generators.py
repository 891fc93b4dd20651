"""Random instances: monotone subadditive pricings, valuations, type
distributions, cover option lists and lottery menus."""
from __future__ import annotations

import numpy as np

from .lattice import (
    Additive,
    CoverClosure,
    ExplicitPricing,
    ExplicitValuation,
    ItemPricing,
    SingleMinded,
    UnitDemand,
    Valuation,
    ValuationDistribution,
    all_masks,
)
from .lottery import Lottery, LotteryMenu

__all__ = [
    "PRICING_KINDS",
    "VALUATION_KINDS",
    "random_options",
    "random_subadditive_pricing",
    "random_valuation",
    "random_distribution",
    "random_lottery",
    "random_point_menu",
    "random_menu",
]

PRICING_KINDS = ("cover", "xos", "budget", "coverage")
VALUATION_KINDS = ("additive", "single-minded", "unit-demand", "xos")


def _random_mask(rng: np.random.Generator, n: int, nonempty: bool = True) -> int:
    while True:
        s = int(rng.integers(0, 1 << n))
        if s or not nonempty:
            return s


def random_options(rng: np.random.Generator, n: int, k: int | None = None,
                   max_price: int = 20, singletons: bool = False) -> list[tuple[int, float]]:
    """Integer-priced ``(set, price)`` options, so closure sums are exact."""
    k = int(rng.integers(1, 2 * n + 1)) if k is None else k
    opts = [(_random_mask(rng, n), float(rng.integers(1, max_price + 1))) for _ in range(k)]
    if singletons:
        opts += [(1 << i, float(rng.integers(1, max_price + 1))) for i in range(n)]
    return opts


def _xos_table(n: int, clauses: np.ndarray) -> np.ndarray:
    masks = all_masks(n)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    return (bits @ clauses.T).max(axis=1)


def _dyadic(x):
    # multiples of 1/64: every sum of a few such prices is exact in floating point,
    # so price identities can be compared without tolerance
    return np.round(np.asarray(x) * 64) / 64


def random_subadditive_pricing(rng: np.random.Generator, n: int, kind: str | None = None) -> ExplicitPricing:
    """Monotone subadditive pricing with finite positive singleton prices.

    ``cover``: cheapest cover by random options plus every singleton;
    ``xos``: maximum of a few additive clauses; ``budget``: additive prices
    capped at a budget; ``coverage``: weighted coverage of a random ground set.
    """
    kind = kind or PRICING_KINDS[int(rng.integers(len(PRICING_KINDS)))]
    if kind == "cover":
        table = CoverClosure(n, tuple(random_options(rng, n, singletons=True))).table()
    elif kind == "xos":
        clauses = _dyadic(rng.uniform(0, 10, size=(int(rng.integers(1, 5)), n)))
        clauses[0] += 0.125
        table = _xos_table(n, clauses)
    elif kind == "budget":
        w = _dyadic(rng.uniform(0.5, 10, size=n))
        cap = max(float(_dyadic(rng.uniform(w.max(), w.sum() + 1e-9))), float(w.max()))
        table = np.minimum(ItemPricing(tuple(w)).table(), cap)
    elif kind == "coverage":
        g = int(rng.integers(n, 2 * n + 2))
        weight = _dyadic(rng.uniform(0.5, 5, size=g))
        covers = [_random_mask(rng, g) for _ in range(n)]
        elem = np.array([sum(1 << e for e in range(g) if (covers[i] >> e) & 1) for i in range(n)],
                        dtype=np.int64)
        table = np.zeros(1 << n)
        for m in range(1, 1 << n):
            u = 0
            for i in range(n):
                if (m >> i) & 1:
                    u |= int(elem[i])
            table[m] = sum(weight[e] for e in range(g) if (u >> e) & 1)
    else:
        raise ValueError(f"unknown pricing kind {kind!r}")
    table = np.array(table, dtype=float)
    table[0] = 0.0
    return ExplicitPricing(n, table)


def random_valuation(rng: np.random.Generator, n: int, kind: str | None = None,
                     scale: float = 10.0) -> Valuation:
    kind = kind or VALUATION_KINDS[int(rng.integers(len(VALUATION_KINDS)))]
    if kind == "additive":
        vec = rng.uniform(0, scale, size=n) * (rng.random(n) < 0.7)
        return Additive(tuple(float(x) for x in vec))
    if kind == "single-minded":
        return SingleMinded(n, _random_mask(rng, n), float(rng.uniform(0, scale * n / 2)))
    if kind == "unit-demand":
        return UnitDemand(tuple(float(x) for x in rng.uniform(0, scale, size=n)))
    if kind == "xos":
        clauses = rng.uniform(0, scale, size=(int(rng.integers(1, 4)), n))
        return ExplicitValuation(n, _xos_table(n, clauses))
    raise ValueError(f"unknown valuation kind {kind!r}")


def random_distribution(rng: np.random.Generator, n: int, max_types: int = 10,
                        kinds: tuple[str, ...] | None = None) -> ValuationDistribution:
    k = int(rng.integers(1, max_types + 1))
    types = []
    for _ in range(k):
        kind = None if kinds is None else kinds[int(rng.integers(len(kinds)))]
        types.append(random_valuation(rng, n, kind))
    w = rng.uniform(0.1, 1.0, size=k)
    return ValuationDistribution.normalized(list(zip(w.tolist(), types)))


def random_lottery(rng: np.random.Generator, n: int, max_support: int = 5) -> Lottery:
    k = int(rng.integers(1, max_support + 1))
    sets = [_random_mask(rng, n, nonempty=False) for _ in range(k)]
    w = rng.uniform(0.05, 1.0, size=k)
    w /= w.sum()
    return Lottery(tuple(zip(w.tolist(), sets)))


def random_point_menu(rng: np.random.Generator, n: int) -> tuple[LotteryMenu, list[tuple[int, float]]]:
    """Deterministic menu together with its option list (every item offered)."""
    opts = random_options(rng, n, singletons=True)
    return LotteryMenu(n, tuple((Lottery.point(s), c) for s, c in opts)), opts


def random_menu(rng: np.random.Generator, n: int, k: int | None = None) -> LotteryMenu:
    """Random lotteries plus a sure singleton for every item, so floors are finite."""
    k = int(rng.integers(1, n + 2)) if k is None else k
    options = [(random_lottery(rng, n), float(rng.uniform(0.5, 5))) for _ in range(k)]
    options += [(Lottery.point(1 << i), float(rng.uniform(1, 10))) for i in range(n)]
    return LotteryMenu(n, tuple(options))
