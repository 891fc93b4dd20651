"""Core-tail decomposition of a subadditive pricing under a product demand
distribution, with the witness simple pricings that recover its revenue."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .demand import ProductMarginals, revenue, singleminded_from_demand
from .lattice import (
    DEFAULT_TOL,
    MAX_TABLE_N,
    BundlePricing,
    ItemPricing,
    Pricing,
    ToleranceConfig,
    additive_extension,
    items_of,
    mask_of,
)
from .simple_opt import brev_exact

__all__ = [
    "CoreTailSplit",
    "CoreStats",
    "DecompositionReport",
    "JENSEN_FLOOR",
    "CORE_BRev_FACTOR",
    "RATIO_BOUND",
    "split_core_tail",
    "core_stats",
    "tail_pricing",
    "decomposition_report",
]

JENSEN_FLOOR = 1.0 - math.exp(-0.5)
# E[p(core)] <= (6 + 4 / ((1 - e^-1/2) ln 2)) * BRev
CORE_BRev_FACTOR = 6.0 + 4.0 / (JENSEN_FLOOR * math.log(2))
RATIO_BOUND = 22.67


@dataclass(frozen=True)
class CoreTailSplit:
    k: int
    order: tuple[int, ...]
    tail: int
    core: int
    regime: str

    @property
    def boundary_item(self) -> int | None:
        """The first core item, whose singleton price caps every core marginal."""
        return self.order[self.k] if self.k < len(self.order) else None


@dataclass(frozen=True)
class CoreStats:
    a: float
    c: float
    core_mean: float
    bound: float
    exact: bool


def _order(p: Pricing) -> list[int]:
    singles = p.singleton_prices()
    return sorted(range(p.n), key=lambda i: (-singles[i], i))


def split_core_tail(p: Pricing, pi: ProductMarginals) -> CoreTailSplit:
    """Tail = the longest prefix of items (by decreasing singleton price, ties
    by index) whose marginals sum below 1/2."""
    if pi.n != p.n:
        raise ValueError("pricing and marginals live on different universes")
    order = _order(p)
    total = 0.0
    k = 0
    for i in order:
        if total + pi.pi[i] >= 0.5:
            break
        total += pi.pi[i]
        k += 1
    regime = "tail-only" if k == p.n else "standard"
    tail = mask_of(order[:k])
    core = mask_of(order[k:])
    return CoreTailSplit(k, tuple(order), tail, core, regime)


def _distribution(p: Pricing, pi: ProductMarginals, coords: int) -> tuple[np.ndarray, np.ndarray]:
    masks, probs = pi.probabilities(items_of(coords))
    return p.prices(masks), probs


def _lower_median(values: np.ndarray, probs: np.ndarray) -> float:
    order = np.argsort(values, kind="stable")
    cdf = np.cumsum(probs[order])
    idx = int(np.searchsorted(cdf, 0.5 - 1e-12))
    return float(values[order][min(idx, len(order) - 1)])


def core_stats(p: Pricing, pi: ProductMarginals, split: CoreTailSplit, samples: int = 100_000,
               seed: int = 0) -> CoreStats:
    """Median ``a`` and mean of ``p(S_CORE)``, boundary price ``c`` and the
    concentration bound ``3a + 4c / ln 2``.

    Exact by enumeration when the core has at most ``MAX_TABLE_N`` items;
    otherwise a Monte Carlo estimate from ``samples`` draws.
    """
    if split.regime != "standard":
        raise ValueError("no core in the tail-only regime; use decomposition_report")
    c = float(p.price(1 << split.boundary_item))
    core_items = items_of(split.core)
    if len(core_items) <= MAX_TABLE_N:
        vals, probs = _distribution(p, pi, split.core)
        exact = True
    else:
        rng = np.random.default_rng(seed)
        draws = pi.sample(rng, samples) & split.core
        vals = np.array([p.price(int(s)) for s in draws])
        probs = np.full(samples, 1.0 / samples)
        exact = False
    a = _lower_median(vals, probs)
    mean = math.fsum(vals * probs)
    return CoreStats(a, c, mean, 3 * a + 4 * c / math.log(2), exact)


def tail_pricing(p: Pricing, split: CoreTailSplit) -> ItemPricing:
    singles = p.singleton_prices()
    return ItemPricing(tuple(float(singles[i]) if (split.tail >> i) & 1 else 0.0
                             for i in range(p.n)))


@dataclass(frozen=True)
class DecompositionReport:
    split: CoreTailSplit
    rev: float
    e_tail: float
    e_core: float
    stats: CoreStats | None
    brev: float
    tail_srev: float
    bundle_a_rev: float
    bundle_c_rev: float
    hit_prob: float
    extension_srev: float
    checks: dict

    @property
    def ratio(self) -> float:
        best = max(self.tail_srev, self.brev)
        if best > 0:
            return self.rev / best
        return 0.0 if self.rev <= 0 else math.inf

    @property
    def best_ratio(self) -> float:
        """Ratio against the best of all witnesses, including item prices equal
        to the singleton prices of ``p``."""
        best = max(self.tail_srev, self.extension_srev, self.brev)
        if best > 0:
            return self.rev / best
        return 0.0 if self.rev <= 0 else math.inf

    @property
    def holds(self) -> bool:
        return all(self.checks.values())


def decomposition_report(p: Pricing, pi: ProductMarginals,
                         tol: ToleranceConfig = DEFAULT_TOL) -> DecompositionReport:
    """Exact core/tail revenue accounting for buyers induced by ``(pi, p)``.

    ``checks`` maps each step of the argument to whether it holds within
    ``eps_report``:

    * ``core_concentration``: E[p(S_CORE)] <= 3a + 4c / ln 2
    * ``bundle_a``: the bundle price ``a`` sells with probability at least 1/2
    * ``jensen``: some of the first ``k + 1`` items is demanded w.p. >= 1 - e^-1/2
    * ``core``: E[p(S_CORE)] <= (6 + 4 / ((1 - e^-1/2) ln 2)) BRev
    * ``tail``: E[p(S_TAIL)] <= 2 Rev(tail item pricing)
    * ``ratio``: Rev <= 22.67 max(tail item revenue, BRev)
    """
    if p.n > MAX_TABLE_N:
        raise ValueError("decomposition report enumerates all demanded sets")
    eps = tol.eps_report
    split = split_core_tail(p, pi)
    D = singleminded_from_demand(pi, p)
    vals, probs = _distribution(p, pi, (1 << p.n) - 1)
    rev = math.fsum(vals * probs)
    tv, tp = _distribution(p, pi, split.tail)
    e_tail = math.fsum(tv * tp)
    q = tail_pricing(p, split)
    tail_srev = revenue(D, q, tol)
    brev = brev_exact(D, tol).value
    singles = p.singleton_prices()
    extension_srev = revenue(D, additive_extension(p), tol) if np.isfinite(singles).all() else 0.0
    checks = {"tail": e_tail <= 2 * tail_srev + eps}
    stats = None
    e_core = 0.0
    bundle_a_rev = bundle_c_rev = 0.0
    hit = 0.0
    if split.regime == "standard":
        stats = core_stats(p, pi, split)
        e_core = stats.core_mean
        bundle_a_rev = revenue(D, BundlePricing(p.n, stats.a), tol) if stats.a > 0 else 0.0
        bundle_c_rev = revenue(D, BundlePricing(p.n, stats.c), tol) if stats.c > 0 else 0.0
        hit = 1.0 - math.prod(1.0 - pi.pi[i] for i in split.order[:split.k + 1])
        checks["core_concentration"] = e_core <= stats.bound + eps
        checks["bundle_a"] = bundle_a_rev >= stats.a / 2 - eps
        checks["jensen"] = hit >= JENSEN_FLOOR - eps
        checks["bundle_c"] = bundle_c_rev >= JENSEN_FLOOR * stats.c - eps
        checks["core"] = e_core <= CORE_BRev_FACTOR * brev + eps
    checks["ratio"] = rev <= RATIO_BOUND * max(tail_srev, brev) + eps
    return DecompositionReport(split, rev, e_tail, e_core, stats, brev, tail_srev,
                               bundle_a_rev, bundle_c_rev, hit, extension_srev, checks)
