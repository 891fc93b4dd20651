"""JSON round-trip for pricings, valuations, distributions, demand
distributions, option lists and lottery menus.

Subsets are sorted arrays of item indices; ``null`` stands for an infinite
price.  Field names are documented in ``docs/schema.md``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .demand import ExplicitDemand, ProductMarginals
from .lattice import (
    Additive,
    BundlePricing,
    CoverClosure,
    ExplicitPricing,
    ExplicitValuation,
    ItemPricing,
    Pricing,
    ScaledPricing,
    SingleMinded,
    UnitDemand,
    Valuation,
    ValuationDistribution,
    items_of,
    mask_of,
)
from .lottery import Lottery, LotteryMenu

__all__ = [
    "SchemaError",
    "pricing_to_json",
    "pricing_from_json",
    "valuation_to_json",
    "valuation_from_json",
    "distribution_to_json",
    "distribution_from_json",
    "demand_to_json",
    "demand_from_json",
    "options_to_json",
    "options_from_json",
    "menu_to_json",
    "menu_from_json",
    "instance_from_json",
    "load_json",
]


class SchemaError(ValueError):
    """Malformed or inconsistent JSON document."""


def _num(x: float) -> float | None:
    return None if math.isinf(x) else float(x)


def _from_num(x) -> float:
    if x is None:
        return math.inf
    if not isinstance(x, (int, float)) or isinstance(x, bool):
        raise SchemaError(f"expected a number or null, got {x!r}")
    return float(x)


def _set_out(mask: int) -> list[int]:
    return items_of(int(mask))


def _set_in(items, n: int) -> int:
    if not isinstance(items, list) or any(not isinstance(i, int) or isinstance(i, bool) for i in items):
        raise SchemaError(f"a set must be a list of item indices, got {items!r}")
    if any(not 0 <= i < n for i in items):
        raise SchemaError(f"set {items} has items outside 0..{n - 1}")
    return mask_of(items)


def _require(doc: dict, key: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"missing field {key!r}")
    return doc[key]


def _body(p: Pricing) -> dict[str, Any]:
    if isinstance(p, ItemPricing):
        return {"kind": "item", "prices": list(p.item_prices)}
    if isinstance(p, BundlePricing):
        return {"kind": "bundle", "price": _num(p.bundle_price)}
    if isinstance(p, CoverClosure):
        return {"kind": "cover", "options": [{"set": _set_out(s), "price": c} for s, c in p.options]}
    if isinstance(p, ScaledPricing):
        return {"kind": "scaled", "alpha": p.alpha, "inner": _body(p.inner)}
    return {"kind": "explicit", "values": [_num(x) for x in p.table()]}


def pricing_to_json(p: Pricing) -> dict[str, Any]:
    return {"n": p.n, "pricing": _body(p)}


def _pricing_body(body: dict, n: int) -> Pricing:
    kind = _require(body, "kind")
    if kind == "explicit":
        return ExplicitPricing(n, np.array([_from_num(x) for x in _require(body, "values")]))
    if kind == "item":
        prices = _require(body, "prices")
        if len(prices) != n:
            raise SchemaError("item prices must have n entries")
        return ItemPricing(tuple(_from_num(x) for x in prices))
    if kind == "bundle":
        return BundlePricing(n, _from_num(_require(body, "price")))
    if kind == "cover":
        return CoverClosure(n, tuple(_option_in(o, n) for o in _require(body, "options")))
    if kind == "scaled":
        return ScaledPricing(_from_num(_require(body, "alpha")), _pricing_body(_require(body, "inner"), n))
    raise SchemaError(f"unknown pricing kind {kind!r}")


def pricing_from_json(doc: dict) -> Pricing:
    n = _require(doc, "n")
    try:
        return _pricing_body(_require(doc, "pricing"), n)
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from exc


def valuation_to_json(v: Valuation) -> dict[str, Any]:
    if isinstance(v, Additive):
        return {"kind": "additive", "values": list(v.item_values)}
    if isinstance(v, UnitDemand):
        return {"kind": "unit-demand", "values": list(v.item_values)}
    if isinstance(v, SingleMinded):
        return {"kind": "single-minded", "n": v.n, "set": _set_out(v.target), "value": v.value_}
    return {"kind": "explicit", "n": v.n, "values": [float(x) for x in v.table()]}


def valuation_from_json(doc: dict, n: int | None = None) -> Valuation:
    kind = _require(doc, "kind")
    try:
        if kind == "additive":
            return Additive(tuple(_require(doc, "values")))
        if kind == "unit-demand":
            return UnitDemand(tuple(_require(doc, "values")))
        if kind == "single-minded":
            m = doc.get("n", n)
            return SingleMinded(m, _set_in(_require(doc, "set"), m), float(_require(doc, "value")))
        if kind == "explicit":
            return ExplicitValuation(doc.get("n", n), np.array(_require(doc, "values"), dtype=float))
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from exc
    raise SchemaError(f"unknown valuation kind {kind!r}")


def distribution_to_json(D: ValuationDistribution) -> dict[str, Any]:
    return {"n": D.n, "types": [{"weight": w, "valuation": valuation_to_json(v)} for w, v in D.support]}


def distribution_from_json(doc: dict) -> ValuationDistribution:
    n = _require(doc, "n")
    pairs = [(float(_require(t, "weight")), valuation_from_json(_require(t, "valuation"), n))
             for t in _require(doc, "types")]
    if any(v.n != n for _, v in pairs):
        raise SchemaError("valuation universe differs from n")
    try:
        return ValuationDistribution(tuple(pairs))
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def demand_to_json(demand: ExplicitDemand | ProductMarginals) -> dict[str, Any]:
    if isinstance(demand, ProductMarginals):
        return {"n": demand.n, "kind": "product", "marginals": list(demand.pi)}
    return {"n": demand.n, "kind": "explicit",
            "outcomes": [{"p": w, "set": _set_out(s)} for w, s in demand.outcomes]}


def demand_from_json(doc: dict) -> ExplicitDemand | ProductMarginals:
    kind = _require(doc, "kind")
    try:
        if kind == "product":
            return ProductMarginals(tuple(_require(doc, "marginals")))
        if kind == "explicit":
            n = _require(doc, "n")
            return ExplicitDemand(n, tuple((float(_require(o, "p")), _set_in(_require(o, "set"), n))
                                           for o in _require(doc, "outcomes")))
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from exc
    raise SchemaError(f"unknown demand kind {kind!r}")


def _option_in(o: dict, n: int) -> tuple[int, float]:
    price = _from_num(_require(o, "price"))
    if not math.isfinite(price) or price < 0:
        raise SchemaError("option prices must be finite and non-negative")
    return _set_in(_require(o, "set"), n), price


def options_to_json(n: int, options) -> dict[str, Any]:
    return {"n": n, "options": [{"set": _set_out(s), "price": c} for s, c in options]}


def options_from_json(doc: dict) -> tuple[int, list[tuple[int, float]]]:
    n = _require(doc, "n")
    if not isinstance(n, int) or n < 1:
        raise SchemaError("n must be a positive integer")
    return n, [_option_in(o, n) for o in _require(doc, "options")]


def menu_to_json(menu: LotteryMenu) -> dict[str, Any]:
    return {"n": menu.n, "options": [
        {"price": c, "outcomes": [{"p": p, "set": _set_out(s)} for p, s in lot.outcomes]}
        for lot, c in menu.options]}


def menu_from_json(doc: dict) -> LotteryMenu:
    n = _require(doc, "n")
    try:
        opts = []
        for o in _require(doc, "options"):
            outs = tuple((float(_require(x, "p")), _set_in(_require(x, "set"), n))
                         for x in _require(o, "outcomes"))
            opts.append((Lottery(outs), _from_num(_require(o, "price"))))
        return LotteryMenu(n, tuple(opts))
    except SchemaError:
        raise
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from exc


def instance_from_json(doc: dict) -> tuple[Pricing, ValuationDistribution]:
    """``{"n", "pricing", "distribution"}`` with the distribution's ``n``
    defaulting to the instance's."""
    n = _require(doc, "n")
    p = pricing_from_json({"n": n, "pricing": _require(doc, "pricing")})
    dist = dict(_require(doc, "distribution"))
    dist.setdefault("n", n)
    D = distribution_from_json(dist)
    if D.n != p.n:
        raise SchemaError("pricing and distribution universes differ")
    return p, D


def load_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
