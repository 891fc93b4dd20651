import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buymany.demand import ExplicitDemand, ProductMarginals
from buymany.generators import random_distribution, random_menu, random_options, random_subadditive_pricing
from buymany.lattice import BundlePricing, CoverClosure, ExplicitPricing, ItemPricing, ScaledPricing
from buymany.serialization import (
    SchemaError,
    demand_from_json,
    demand_to_json,
    distribution_from_json,
    distribution_to_json,
    instance_from_json,
    load_json,
    menu_from_json,
    menu_to_json,
    options_from_json,
    options_to_json,
    pricing_from_json,
    pricing_to_json,
)

SAMPLES = Path(__file__).resolve().parent.parent / "docs" / "samples"


def _through_text(doc):
    return json.loads(json.dumps(doc))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_pricing_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    opts = random_options(rng, n)
    for p in (random_subadditive_pricing(rng, n), ItemPricing(tuple(rng.uniform(0, 5, n))),
              BundlePricing(n, 3.5), CoverClosure(n, tuple(opts)),
              ScaledPricing(0.5, CoverClosure(n, tuple(opts)))):
        back = pricing_from_json(_through_text(pricing_to_json(p)))
        assert type(back) is type(p)
        np.testing.assert_array_equal(back.table(), p.table())


def test_infinite_prices_use_null():
    p = ExplicitPricing(2, CoverClosure(2, ((1, 2.0),)).table())
    doc = pricing_to_json(p)
    assert doc["pricing"]["values"] == [0.0, 2.0, None, None]
    json.dumps(doc, allow_nan=False)
    assert math.isinf(pricing_from_json(doc).price(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_distribution_roundtrip(n, seed):
    D = random_distribution(np.random.default_rng(seed), n)
    back = distribution_from_json(_through_text(distribution_to_json(D)))
    assert [w for w, _ in back.support] == [w for w, _ in D.support]
    for (_, a), (_, b) in zip(back.support, D.support):
        np.testing.assert_array_equal(a.table(), b.table())


def test_demand_roundtrip():
    for dem in (ProductMarginals((0.2, 0.7)), ExplicitDemand(3, ((0.25, 0b101), (0.75, 0b010)))):
        back = demand_from_json(_through_text(demand_to_json(dem)))
        assert back == dem


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_menu_and_options_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    menu = random_menu(rng, n)
    assert menu_from_json(_through_text(menu_to_json(menu))) == menu
    opts = random_options(rng, n)
    assert options_from_json(_through_text(options_to_json(n, opts))) == (n, opts)


@pytest.mark.parametrize("doc", [
    {"pricing": {"kind": "item", "prices": [1]}},
    {"n": 2, "pricing": {"kind": "item", "prices": [1]}},
    {"n": 2, "pricing": {"kind": "nope"}},
    {"n": 2, "pricing": {"kind": "cover", "options": [{"set": [0, 5], "price": 1}]}},
    {"n": 2, "pricing": {"kind": "cover", "options": [{"set": [0], "price": -1}]}},
    {"n": 1, "pricing": {"kind": "bundle", "price": "cheap"}},
])
def test_bad_pricing_documents(doc):
    with pytest.raises(SchemaError):
        pricing_from_json(doc)


def test_bad_instance_documents():
    good = load_json(SAMPLES / "instance.json")
    p, D = instance_from_json(good)
    assert p.n == D.n == 2
    bad = json.loads(json.dumps(good))
    bad["distribution"]["types"][0]["weight"] = 0.9
    with pytest.raises(SchemaError):
        instance_from_json(bad)
    bad = json.loads(json.dumps(good))
    bad["distribution"]["types"][0]["valuation"] = {"kind": "additive", "values": [1.0]}
    with pytest.raises(SchemaError):
        instance_from_json(bad)
    with pytest.raises(SchemaError):
        menu_from_json({"n": 1, "options": [{"price": 1, "outcomes": [{"p": 0.4, "set": [0]}]}]})


def test_load_json_errors(tmp_path):
    f = tmp_path / "x.json"
    f.write_text("{not json")
    with pytest.raises(SchemaError):
        load_json(f)
    with pytest.raises(SchemaError):
        load_json(tmp_path / "missing.json")
