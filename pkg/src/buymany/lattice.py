"""Subset-lattice foundations: pricings, valuations, Sybil-proofness checks and
the buy-many cover closure.

Subsets of the item universe ``{0, ..., n-1}`` are encoded as integer bitsets
(bit ``i`` set means item ``i`` is in the set).  Full ``2**n`` tables are only
materialized for ``n <= MAX_TABLE_N``; larger universes are supported by the
representations that can be evaluated set-by-set (item, bundle, cover,
additive, single-minded, unit-demand).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

MAX_TABLE_N = 20
INF = math.inf

__all__ = [
    "MAX_TABLE_N",
    "ToleranceConfig",
    "DEFAULT_TOL",
    "mask_of",
    "items_of",
    "all_masks",
    "popcounts",
    "submasks",
    "Pricing",
    "ExplicitPricing",
    "ItemPricing",
    "BundlePricing",
    "CoverClosure",
    "ScaledPricing",
    "Valuation",
    "ExplicitValuation",
    "Additive",
    "SingleMinded",
    "UnitDemand",
    "ValuationDistribution",
    "CheckReport",
    "check_deterministic_sybil_proof",
    "buy_many_closure",
    "additive_extension",
]


@dataclass(frozen=True)
class ToleranceConfig:
    eps_price: float = 1e-9
    eps_tie: float = 1e-9
    eps_report: float = 1e-6

    def __post_init__(self):
        for name in ("eps_price", "eps_tie", "eps_report"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_TOL = ToleranceConfig()


# --------------------------------------------------------------------------
# bitset helpers
# --------------------------------------------------------------------------

def mask_of(items: Iterable[int]) -> int:
    mask = 0
    for i in items:
        mask |= 1 << int(i)
    return mask


def items_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _check_table_n(n: int) -> None:
    if n > MAX_TABLE_N:
        raise ValueError(f"full subset tables need n <= {MAX_TABLE_N}, got n={n}")


@lru_cache(maxsize=None)
def all_masks(n: int) -> np.ndarray:
    _check_table_n(n)
    arr = np.arange(1 << n, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def popcounts(n: int) -> np.ndarray:
    _check_table_n(n)
    pc = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        pc[1 << i: 1 << (i + 1)] = pc[: 1 << i] + 1
    pc.setflags(write=False)
    return pc


def submasks(mask: int) -> np.ndarray:
    """All submasks of ``mask`` in increasing numeric order (including 0)."""
    bits = items_of(mask)
    if len(bits) > MAX_TABLE_N:
        raise ValueError(f"too many items to enumerate: {len(bits)}")
    out = np.zeros(1, dtype=np.int64)
    for b in bits:
        out = np.concatenate([out, out + (1 << b)])
    return out


def _bit_matrix(masks: np.ndarray, n: int) -> np.ndarray:
    """Boolean ``(len(masks), n)`` membership matrix."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(bool)


def _validate_n(n: int) -> int:
    n = int(n)
    if n < 1:
        raise ValueError("item count must be at least 1")
    return n


# --------------------------------------------------------------------------
# pricings
# --------------------------------------------------------------------------

class Pricing:
    """A price for every subset of ``n`` items.

    Subclasses implement :meth:`price`; :meth:`prices` and :meth:`table` are
    vectorized where the representation allows it.
    """

    n: int
    #: ``True`` when the representation is monotone by construction.
    structurally_monotone: bool = False

    def price(self, mask: int) -> float:
        raise NotImplementedError

    def prices(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self.n <= MAX_TABLE_N:
            return self.table()[masks]
        return np.array([self.price(int(m)) for m in masks], dtype=float)

    def table(self) -> np.ndarray:
        return self._table

    @cached_property
    def _table(self) -> np.ndarray:
        t = self._build_table()
        t.setflags(write=False)
        return t

    def _build_table(self) -> np.ndarray:
        _check_table_n(self.n)
        return np.array([self.price(m) for m in range(1 << self.n)], dtype=float)

    def singleton_prices(self) -> np.ndarray:
        return np.array([self.price(1 << i) for i in range(self.n)], dtype=float)

    @property
    def is_monotone(self) -> bool:
        if self.structurally_monotone:
            return True
        return self._monotone_scan

    @cached_property
    def _monotone_scan(self) -> bool:
        if self.n > MAX_TABLE_N:
            return False
        return check_deterministic_sybil_proof(self, check_subadditive=False).monotone

    def scaled(self, alpha: float) -> "ScaledPricing":
        return ScaledPricing(alpha, self)


@dataclass(frozen=True, eq=False)
class ExplicitPricing(Pricing):
    """Tabulated pricing indexed by bitset; ``+inf`` marks unavailable sets."""

    n: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _validate_n(self.n)
        _check_table_n(self.n)
        vals = np.array(self.values, dtype=float)
        if vals.shape != (1 << self.n,):
            raise ValueError(f"explicit table must have {1 << self.n} entries")
        if np.isnan(vals).any() or (vals < 0).any():
            raise ValueError("prices must be non-negative numbers")
        if vals[0] != 0:
            raise ValueError("price of the empty set must be 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def price(self, mask: int) -> float:
        return float(self.values[mask])

    def _build_table(self) -> np.ndarray:
        return self.values

    def table(self) -> np.ndarray:
        return self.values


@dataclass(frozen=True, eq=False)
class ItemPricing(Pricing):
    item_prices: tuple[float, ...]
    structurally_monotone = True

    def __post_init__(self):
        qs = tuple(float(x) for x in self.item_prices)
        if not qs:
            raise ValueError("item pricing needs at least one item")
        if any(not math.isfinite(x) or x < 0 for x in qs):
            raise ValueError("item prices must be finite and non-negative")
        object.__setattr__(self, "item_prices", qs)

    @property
    def n(self) -> int:
        return len(self.item_prices)

    @cached_property
    def vector(self) -> np.ndarray:
        v = np.array(self.item_prices, dtype=float)
        v.setflags(write=False)
        return v

    def price(self, mask: int) -> float:
        return float(sum(self.item_prices[i] for i in items_of(mask)))

    def prices(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self.n <= MAX_TABLE_N:
            return self.table()[masks]
        return _bit_matrix(masks, self.n) @ self.vector

    def _build_table(self) -> np.ndarray:
        _check_table_n(self.n)
        t = np.zeros(1 << self.n)
        for i, q in enumerate(self.item_prices):
            t[1 << i: 1 << (i + 1)] = t[: 1 << i] + q
        return t


@dataclass(frozen=True, eq=False)
class BundlePricing(Pricing):
    n: int
    bundle_price: float
    structurally_monotone = True

    def __post_init__(self):
        _validate_n(self.n)
        if not self.bundle_price >= 0:
            raise ValueError("bundle price must be non-negative")

    def price(self, mask: int) -> float:
        return float(self.bundle_price) if mask else 0.0

    def prices(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        return np.where(masks != 0, float(self.bundle_price), 0.0)

    def _build_table(self) -> np.ndarray:
        _check_table_n(self.n)
        t = np.full(1 << self.n, float(self.bundle_price))
        t[0] = 0.0
        return t


@dataclass(frozen=True, eq=False)
class CoverClosure(Pricing):
    """Cheapest collection of base options whose union covers a set.

    Sets that no union of options covers cost ``+inf``.  For ``n`` within the
    table cap the whole ``2**n`` table is computed once; otherwise each set is
    priced by a DP over its own submasks.
    """

    n: int
    options: tuple[tuple[int, float], ...]
    structurally_monotone = True

    def __post_init__(self):
        _validate_n(self.n)
        full = (1 << self.n) - 1
        opts = []
        for mask, c in self.options:
            mask, c = int(mask), float(c)
            if mask & ~full:
                raise ValueError(f"option set {items_of(mask)} outside the universe")
            if not c >= 0 or math.isnan(c):
                raise ValueError("option prices must be non-negative")
            if mask:
                opts.append((mask, c))
        object.__setattr__(self, "options", tuple(opts))

    @property
    def empty(self) -> bool:
        return not self.options

    def price(self, mask: int) -> float:
        if self.n <= MAX_TABLE_N:
            return float(self.table()[mask])
        return self._price_lazy(mask)

    def _price_lazy(self, mask: int) -> float:
        relevant = [(t, c) for t, c in self.options if t & mask]
        memo: dict[int, float] = {0: 0.0}

        def f(rest: int) -> float:
            if rest in memo:
                return memo[rest]
            best = INF
            for t, c in relevant:
                if t & rest and c < best:
                    val = c + f(rest & ~t)
                    if val < best:
                        best = val
            memo[rest] = best
            return best

        return f(mask)

    def _build_table(self) -> np.ndarray:
        return _cover_table(self.n, self.options)


def _cover_table(n: int, options: Sequence[tuple[int, float]]) -> np.ndarray:
    _check_table_n(n)
    masks = all_masks(n)
    f = np.full(1 << n, INF)
    f[0] = 0.0
    if not options:
        return f
    prepared = [((masks & t) != 0, masks & ~t, c) for t, c in options]
    # Gauss-Seidel relaxation; each sweep extends covers by one option, so at
    # most n + 1 sweeps are needed.
    for _ in range(n + 2):
        changed = False
        for hit, rest, c in prepared:
            cand = np.where(hit, c + f[rest], INF)
            better = cand < f
            if better.any():
                f = np.where(better, cand, f)
                changed = True
        if not changed:
            break
    return f


@dataclass(frozen=True, eq=False)
class ScaledPricing(Pricing):
    alpha: float
    inner: Pricing

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("scale factor must be positive")

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def structurally_monotone(self) -> bool:  # type: ignore[override]
        return self.inner.structurally_monotone

    def price(self, mask: int) -> float:
        return self.alpha * self.inner.price(mask)

    def prices(self, masks) -> np.ndarray:
        return self.alpha * self.inner.prices(masks)

    def _build_table(self) -> np.ndarray:
        return self.alpha * self.inner.table()


# --------------------------------------------------------------------------
# valuations
# --------------------------------------------------------------------------

class Valuation:
    n: int

    def value(self, mask: int) -> float:
        raise NotImplementedError

    def values(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self.n <= MAX_TABLE_N:
            return self.table()[masks]
        return np.array([self.value(int(m)) for m in masks], dtype=float)

    def table(self) -> np.ndarray:
        return self._table

    @cached_property
    def _table(self) -> np.ndarray:
        t = self._build_table()
        t.setflags(write=False)
        return t

    def _build_table(self) -> np.ndarray:
        _check_table_n(self.n)
        return np.array([self.value(m) for m in range(1 << self.n)], dtype=float)

    @property
    def relevant_mask(self) -> int:
        """Items outside this mask never change the value of a set."""
        return (1 << self.n) - 1

    def grand_value(self) -> float:
        return self.value((1 << self.n) - 1)


@dataclass(frozen=True, eq=False)
class ExplicitValuation(Valuation):
    n: int
    values_: np.ndarray = field(repr=False)

    def __post_init__(self):
        _validate_n(self.n)
        _check_table_n(self.n)
        vals = np.array(self.values_, dtype=float)
        if vals.shape != (1 << self.n,):
            raise ValueError(f"explicit valuation must have {1 << self.n} entries")
        if not np.isfinite(vals).all() or (vals < 0).any():
            raise ValueError("values must be finite and non-negative")
        if vals[0] != 0:
            raise ValueError("value of the empty set must be 0")
        masks = all_masks(self.n)
        for i in range(self.n):
            bit = 1 << i
            lo = masks[(masks & bit) == 0]
            bad = vals[lo] > vals[lo | bit]
            if bad.any():
                s = int(lo[np.argmax(bad)])
                raise ValueError(
                    f"valuation not monotone: v({items_of(s)}) > v({items_of(s | bit)})")
        vals.setflags(write=False)
        object.__setattr__(self, "values_", vals)

    def value(self, mask: int) -> float:
        return float(self.values_[mask])

    def table(self) -> np.ndarray:
        return self.values_


@dataclass(frozen=True, eq=False)
class Additive(Valuation):
    item_values: tuple[float, ...]

    def __post_init__(self):
        vs = tuple(float(x) for x in self.item_values)
        if not vs or any(not math.isfinite(x) or x < 0 for x in vs):
            raise ValueError("additive values must be finite and non-negative")
        object.__setattr__(self, "item_values", vs)

    @property
    def n(self) -> int:
        return len(self.item_values)

    @cached_property
    def vector(self) -> np.ndarray:
        v = np.array(self.item_values)
        v.setflags(write=False)
        return v

    @property
    def relevant_mask(self) -> int:
        return mask_of(i for i, x in enumerate(self.item_values) if x > 0)

    def value(self, mask: int) -> float:
        return float(sum(self.item_values[i] for i in items_of(mask)))

    def values(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self.n <= MAX_TABLE_N:
            return self.table()[masks]
        return _bit_matrix(masks, self.n) @ self.vector

    def _build_table(self) -> np.ndarray:
        return ItemPricing(self.item_values).table().copy()


@dataclass(frozen=True, eq=False)
class SingleMinded(Valuation):
    """Value ``value`` for every superset of ``target``, zero otherwise."""

    n: int
    target: int
    value_: float

    def __post_init__(self):
        _validate_n(self.n)
        if self.target >> self.n:
            raise ValueError("target set outside the universe")
        if not math.isfinite(self.value_) or self.value_ < 0:
            raise ValueError("value must be finite and non-negative")

    @property
    def relevant_mask(self) -> int:
        return self.target

    def value(self, mask: int) -> float:
        return float(self.value_) if (mask & self.target) == self.target else 0.0

    def values(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        return np.where((masks & self.target) == self.target, float(self.value_), 0.0)

    def _build_table(self) -> np.ndarray:
        return self.values(all_masks(self.n))


@dataclass(frozen=True, eq=False)
class UnitDemand(Valuation):
    item_values: tuple[float, ...]

    def __post_init__(self):
        vs = tuple(float(x) for x in self.item_values)
        if not vs or any(not math.isfinite(x) or x < 0 for x in vs):
            raise ValueError("unit-demand values must be finite and non-negative")
        object.__setattr__(self, "item_values", vs)

    @property
    def n(self) -> int:
        return len(self.item_values)

    @property
    def relevant_mask(self) -> int:
        return mask_of(i for i, x in enumerate(self.item_values) if x > 0)

    def value(self, mask: int) -> float:
        return max((self.item_values[i] for i in items_of(mask)), default=0.0)

    def _build_table(self) -> np.ndarray:
        _check_table_n(self.n)
        t = np.zeros(1 << self.n)
        for i, x in enumerate(self.item_values):
            t[1 << i: 1 << (i + 1)] = np.maximum(t[: 1 << i], x)
        return t


@dataclass(frozen=True, eq=False)
class ValuationDistribution:
    """Finite-support distribution over valuations sharing one universe."""

    support: tuple[tuple[float, Valuation], ...]

    def __post_init__(self):
        sup = tuple((float(w), v) for w, v in self.support)
        if not sup:
            raise ValueError("distribution needs a nonempty support")
        if any(not w > 0 for w, _ in sup):
            raise ValueError("support weights must be positive")
        total = math.fsum(w for w, _ in sup)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, not 1")
        ns = {v.n for _, v in sup}
        if len(ns) != 1:
            raise ValueError("valuations must share one universe")
        object.__setattr__(self, "support", sup)

    @classmethod
    def uniform(cls, valuations: Sequence[Valuation]) -> "ValuationDistribution":
        k = len(valuations)
        return cls(tuple((1.0 / k, v) for v in valuations))

    @classmethod
    def normalized(cls, pairs: Sequence[tuple[float, Valuation]]) -> "ValuationDistribution":
        total = math.fsum(w for w, _ in pairs)
        return cls(tuple((w / total, v) for w, v in pairs))

    @property
    def n(self) -> int:
        return self.support[0][1].n

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.support])

    @property
    def valuations(self) -> list[Valuation]:
        return [v for _, v in self.support]

    def __len__(self) -> int:
        return len(self.support)


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

@dataclass
class CheckReport:
    monotone: bool
    subadditive: bool
    partial: bool = False
    monotone_witnesses: list[tuple[list[int], list[int]]] = field(default_factory=list)
    subadditive_witnesses: list[tuple[list[int], list[int]]] = field(default_factory=list)

    @property
    def sybil_proof(self) -> bool:
        return self.monotone and self.subadditive

    @property
    def witnesses(self) -> list[tuple[list[int], list[int]]]:
        return self.monotone_witnesses + self.subadditive_witnesses


def check_deterministic_sybil_proof(p: Pricing, tol: ToleranceConfig = DEFAULT_TOL,
                                    max_witnesses: int = 16,
                                    check_subadditive: bool = True) -> CheckReport:
    """Exhaustively test monotonicity and pairwise subadditivity.

    Monotonicity is checked on covering pairs ``S, S + i`` where both prices
    are finite.  Subadditivity is checked over all pairs of sets, ``O(4**n)``
    work, chunked row by row.
    """
    n = p.n
    t = p.table()
    masks = all_masks(n)
    partial = bool(np.isinf(t).any())
    eps = tol.eps_price

    mono_w: list[tuple[list[int], list[int]]] = []
    monotone = True
    for i in range(n):
        bit = 1 << i
        lo = masks[(masks & bit) == 0]
        a, b = t[lo], t[lo | bit]
        finite = np.isfinite(a) & np.isfinite(b)
        bad = finite & (a > b + eps)
        if bad.any():
            monotone = False
            for s in lo[bad][: max(0, max_witnesses - len(mono_w))]:
                mono_w.append((items_of(int(s)), items_of(int(s) | bit)))

    sub_w: list[tuple[list[int], list[int]]] = []
    subadditive = True
    if check_subadditive:
        for s in range(1, 1 << n):
            others = masks[s:]  # pairs are symmetric
            lhs = t[others | s]
            rhs = t[s] + t[others]
            bad = lhs > rhs + eps
            if bad.any():
                subadditive = False
                room = max_witnesses - len(sub_w)
                for o in others[bad][: max(0, room)]:
                    sub_w.append((items_of(s), items_of(int(o))))
    return CheckReport(monotone, subadditive, partial, mono_w, sub_w)


def buy_many_closure(options: Sequence[tuple[Iterable[int] | int, float]], n: int) -> ExplicitPricing:
    """Explicit table of the cheapest cover of every set by base options.

    ``options`` holds ``(subset, price)`` pairs; subsets may be bitsets or item
    lists.  Uncoverable sets are priced ``+inf``.
    """
    opts = tuple((s if isinstance(s, (int, np.integer)) else mask_of(s), c) for s, c in options)
    return ExplicitPricing(n, CoverClosure(n, opts).table())


def additive_extension(p: Pricing) -> ItemPricing:
    singles = p.singleton_prices()
    for i, x in enumerate(singles):
        if not math.isfinite(x):
            raise ValueError(f"item {i} has infinite singleton price; no additive extension")
    return ItemPricing(tuple(singles))
