"""Optimal simple pricings: exact BRev, exact SRev for single-minded buyers,
and a grid/coordinate-ascent lower bound on SRev for general buyers."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .demand import revenue
from .lattice import (
    DEFAULT_TOL,
    MAX_TABLE_N,
    Additive,
    BundlePricing,
    ItemPricing,
    Pricing,
    SingleMinded,
    ToleranceConfig,
    ValuationDistribution,
    all_masks,
    items_of,
    popcounts,
)

SREV_EXACT_MAX_SUPPORT = 14

__all__ = [
    "SimpleOptResult",
    "brev_exact",
    "srev_exact_singleminded",
    "srev_grid",
    "item_pricing_revenue",
]


@dataclass(frozen=True)
class SimpleOptResult:
    best_pricing: Pricing
    value: float
    exact: bool


def brev_exact(D: ValuationDistribution, tol: ToleranceConfig = DEFAULT_TOL) -> SimpleOptResult:
    """Best constant bundle price; the optimum is one of the grand-bundle values."""
    grand = np.array([v.grand_value() for v in D.valuations])
    w = D.weights
    best_t, best_rev = 0.0, 0.0
    for t in np.unique(grand):
        if t <= 0:
            continue
        rev = float(t) * math.fsum(w[grand >= t - tol.eps_tie])
        if rev > best_rev + tol.eps_tie * max(1.0, best_rev):
            best_t, best_rev = float(t), rev
    pricing = BundlePricing(D.n, best_t)
    return SimpleOptResult(pricing, best_rev, True)


def item_pricing_revenue(D: ValuationDistribution, q: np.ndarray) -> float | None:
    """Vectorized revenue of item prices ``q`` when every type is additive or
    single-minded (same tie rule as :func:`buymany.demand.best_response`);
    ``None`` for other valuation kinds."""
    cache = _type_arrays(D)
    if cache is None:
        return None
    w, sm_masks, sm_vals, sm_w, add_vals, add_w = cache
    total = 0.0
    if len(sm_w):
        cost = sm_masks @ q
        buy = ((sm_vals - cost > DEFAULT_TOL.eps_tie)
               | ((sm_vals - cost >= -DEFAULT_TOL.eps_tie) & (cost > 0)))
        total += float(np.dot(sm_w, np.where(buy, cost, 0.0)))
    if len(add_w):
        take = (add_vals > q[None, :]) | ((add_vals == q[None, :]) & (q[None, :] > 0))
        total += float(np.dot(add_w, (take * q[None, :]).sum(axis=1)))
    return total


_TYPE_CACHE: dict[int, tuple] = {}


def _type_arrays(D: ValuationDistribution):
    key = id(D)
    hit = _TYPE_CACHE.get(key)
    if hit is not None and hit[0] is D:
        return hit[1]
    n = D.n
    sm_rows, sm_vals, sm_w, add_rows, add_w = [], [], [], [], []
    for wt, v in D.support:
        if isinstance(v, SingleMinded):
            sm_rows.append([(v.target >> i) & 1 for i in range(n)])
            sm_vals.append(v.value_)
            sm_w.append(wt)
        elif isinstance(v, Additive):
            add_rows.append(v.item_values)
            add_w.append(wt)
        else:
            _TYPE_CACHE[key] = (D, None)
            return None
    out = (D.weights,
           np.array(sm_rows, dtype=float).reshape(-1, n), np.array(sm_vals), np.array(sm_w),
           np.array(add_rows, dtype=float).reshape(-1, n), np.array(add_w))
    if len(_TYPE_CACHE) > 64:
        _TYPE_CACHE.clear()
    _TYPE_CACHE[key] = (D, out)
    return out


def _revenue_of_vector(D: ValuationDistribution, q: np.ndarray, tol: ToleranceConfig) -> float:
    fast = item_pricing_revenue(D, q)
    if fast is not None:
        return fast
    return revenue(D, ItemPricing(tuple(q)), tol)


def srev_exact_singleminded(D: ValuationDistribution,
                            tol: ToleranceConfig = DEFAULT_TOL) -> SimpleOptResult:
    """Exact optimal item pricing for single-minded types.

    For each subset ``A`` of types that should be served, solve the LP that
    maximizes collected prices subject to every served type affording its
    bundle; the best LP solution over all ``A`` is an optimal item pricing.
    """
    types = D.valuations
    if any(not isinstance(v, SingleMinded) for v in types):
        raise ValueError("srev_exact_singleminded needs single-minded types only")
    k = len(types)
    if k > SREV_EXACT_MAX_SUPPORT:
        raise ValueError(
            f"support of {k} types exceeds the enumeration budget of "
            f"{SREV_EXACT_MAX_SUPPORT}; use srev_grid instead")
    n = D.n
    w = D.weights
    rows = np.array([[(v.target >> i) & 1 for i in range(n)] for v in types], dtype=float)
    vals = np.array([v.value_ for v in types])

    best_q = np.zeros(n)
    best_rev = _revenue_of_vector(D, best_q, tol)
    for size in range(1, k + 1):
        for served in itertools.combinations(range(k), size):
            idx = list(served)
            A = rows[idx]
            if not A.any():
                continue
            objective = -(w[idx] @ A)
            res = linprog(objective, A_ub=A, b_ub=vals[idx], bounds=[(0, None)] * n,
                          method="highs")
            if res.status != 0:
                continue
            q = np.maximum(res.x, 0.0)
            # undo LP round-off so every served type still affords its bundle
            cost = A @ q
            over = cost > vals[idx]
            if over.any():
                q = q * float(np.min(vals[idx][over] / cost[over]))
            rev = _revenue_of_vector(D, q, tol)
            if rev > best_rev + 1e-12:
                best_rev, best_q = rev, q
    return SimpleOptResult(ItemPricing(tuple(best_q)), best_rev, True)


def _grid_levels(D: ValuationDistribution, levels_per_item: int) -> list[np.ndarray]:
    n = D.n
    per_item: list[set[float]] = [set() for _ in range(n)]
    for v in D.valuations:
        if isinstance(v, SingleMinded):
            members = items_of(v.target)
            if members:
                level = v.value_ / len(members)
                for i in members:
                    per_item[i].update((level, v.value_))
        elif isinstance(v, Additive):
            for i, x in enumerate(v.item_values):
                per_item[i].add(x)
        else:
            if n > MAX_TABLE_N:
                raise ValueError("general valuations need n within the table cap")
            t = v.table()
            masks = all_masks(n)
            sizes = popcounts(n)
            avg = np.where(sizes > 0, t / np.maximum(sizes, 1), 0.0)
            for i in range(n):
                sel = (masks >> i) & 1 == 1
                per_item[i].update(np.unique(avg[sel]).tolist())
    out = []
    for levels in per_item:
        arr = np.unique(np.array(sorted(levels | {0.0})))
        if len(arr) > levels_per_item + 1:
            pos = np.unique(np.round(np.linspace(1, len(arr) - 1, levels_per_item)).astype(int))
            arr = np.concatenate([[0.0], arr[pos]])
        out.append(arr)
    return out


def srev_grid(D: ValuationDistribution, levels_per_item: int = 32, seed: int = 0,
              restarts: int = 8, max_sweeps: int = 50,
              tol: ToleranceConfig = DEFAULT_TOL) -> SimpleOptResult:
    """Coordinate ascent over a per-item grid of observed value levels.

    The returned value is the revenue of an actual item pricing, hence a
    lower bound on SRev.
    """
    if levels_per_item < 1:
        raise ValueError("levels_per_item must be at least 1")
    grids = _grid_levels(D, levels_per_item)
    n = D.n
    rng = np.random.default_rng(seed)
    best_q = np.zeros(n)
    best_rev = _revenue_of_vector(D, best_q, tol)
    starts = [np.array([g[-1] for g in grids]), np.zeros(n)]
    while len(starts) < restarts:
        starts.append(np.array([g[rng.integers(len(g))] for g in grids]))
    for q in starts[:max(restarts, 1)]:
        q = q.copy()
        cur = _revenue_of_vector(D, q, tol)
        for _ in range(max_sweeps):
            improved = False
            for i in range(n):
                keep = q[i]
                local_best, local_level = cur, keep
                for level in grids[i]:
                    if level == keep:
                        continue
                    q[i] = level
                    r = _revenue_of_vector(D, q, tol)
                    if r > local_best + 1e-12:
                        local_best, local_level = r, level
                q[i] = local_level
                if local_level != keep:
                    cur = local_best
                    improved = True
            if not improved:
                break
        if cur > best_rev + 1e-12:
            best_rev, best_q = cur, q.copy()
    return SimpleOptResult(ItemPricing(tuple(best_q)), best_rev, False)
