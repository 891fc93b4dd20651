import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buymany.demand import ExplicitDemand, best_response, revenue, singleminded_from_demand
from buymany.lattice import ExplicitPricing, ItemPricing
from buymany.lowerbound import (
    MATROID_PRESETS,
    BetaVector,
    MatroidSpec,
    SetSystemParams,
    approx_from_below_ratio,
    build_additive_instance,
    build_singleminded_instance,
    check_mu_tau_large,
    gap_report,
    gen_matroid_spec,
    gen_set_system,
    induced_singleminded,
    is_independent,
    matroid_rank,
    sample_beta,
)
from buymany.simple_opt import brev_exact

import oracles


def test_set_system_examples():
    sets = gen_set_system(SetSystemParams(12, 4, 4, 2), 7)
    assert len(sets) == 4 and all(s.bit_count() == 4 for s in sets)
    assert all((a & b).bit_count() <= 2 for a, b in itertools.combinations(sets, 2))
    (s,) = gen_set_system(SetSystemParams(9, 1, 5, 0), 3)
    assert s.bit_count() == 5 and s < 1 << 9
    with pytest.raises(ValueError, match="placing 1 of 3"):
        gen_set_system(SetSystemParams(4, 3, 4, 1, max_tries=200), 0)


def test_set_system_params_validated():
    with pytest.raises(ValueError):
        SetSystemParams(3, 1, 4, 1)
    with pytest.raises(ValueError):
        SetSystemParams(6, 1, 3, 3)


def test_beta_examples():
    b = sample_beta(20000, 3, 1, seed=1)
    vals, counts = np.unique(b.values, return_counts=True)
    assert vals.tolist() == [2, 4, 8]
    freq = counts / counts.sum()
    for f, p in zip(freq, (4 / 7, 2 / 7, 1 / 7)):
        assert abs(f - p) <= 4 * math.sqrt(p * (1 - p) / 20000)
    assert set(sample_beta(50, 1, 3, seed=2).values) == {6}
    assert sample_beta(30, 6, 4, seed=5) == sample_beta(30, 6, 4, seed=5)
    with pytest.raises(ValueError):
        BetaVector((1,), 1, 3)


def test_singleminded_instance_examples():
    inst = build_singleminded_instance(2, [0b11], (4,))
    assert revenue(inst.D, inst.p) == 2.0
    inst = build_singleminded_instance(8, [0x0F, 0xF0], (4, 8))
    assert revenue(inst.D, inst.p) == 3.0 == inst.target_revenue()


def test_additive_instance_examples():
    inst = build_additive_instance(2, [0b11], (4,))
    assert inst.D.valuations[0].item_values == (2.0, 2.0)
    assert revenue(inst.D, inst.p) == 2.0
    inst = build_additive_instance(8, [0x0F, 0xF0], (8, 8))
    assert revenue(inst.D, inst.p) == 4.0
    with pytest.raises(ValueError, match="no-arbitrage"):
        build_additive_instance(6, [0b000111, 0b001110], (2, 16))


def test_approx_from_below_examples():
    s1, s2 = 0b01, 0b10
    demand = ExplicitDemand(2, ((0.5, s1), (0.5, s2)))
    p = ItemPricing((4.0, 8.0))
    assert approx_from_below_ratio(p, p, demand) == 1.0
    assert approx_from_below_ratio(ItemPricing((4.0, 10.0)), p, demand) == 3.0
    assert math.isinf(approx_from_below_ratio(ItemPricing((0.0, 0.0)), p, demand))


def _spec_one():
    return MatroidSpec(6, (0b1111,), (2,), 4, 2, {})


def test_matroid_examples():
    spec = _spec_one()
    assert matroid_rank(spec, 0b1111) == 2
    assert matroid_rank(spec, 0) == 0
    assert matroid_rank(spec, 0b110000) == 2
    assert check_mu_tau_large(spec)
    assert not check_mu_tau_large(MatroidSpec(6, (0b11,), (0,), 4, 2, {}))


def test_matroid_budget_enforced():
    with pytest.raises(ValueError):
        matroid_rank(MatroidSpec(15, (1,), (1,), 1, 2, {}), 1)


def _random_spec(rng):
    while True:
        mu, b_min = MATROID_PRESETS[int(rng.integers(len(MATROID_PRESETS)))]
        n = int(rng.integers(max(mu + 1, 6), 11))
        N = int(rng.integers(1, 4))
        try:
            spec = gen_matroid_spec(rng, n, N, mu, b_min, max_tries=500)
        except ValueError:
            continue
        if check_mu_tau_large(spec):
            return spec


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matroid_matches_brute_force(seed):
    spec = _random_spec(np.random.default_rng(seed))
    n = spec.n
    for S in range(1 << n):
        assert is_independent(spec, S) == oracles.matroid_independent(S, list(spec.sets), spec.b,
                                                                      spec.mu, spec.tau)
    for S in np.random.default_rng(seed).integers(0, 1 << n, 40).tolist():
        assert matroid_rank(spec, S) == oracles.matroid_rank_brute(S, list(spec.sets), spec.b,
                                                                   spec.mu, spec.tau)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_rank_axioms_and_targets(seed):
    spec = _random_spec(np.random.default_rng(seed))
    n = spec.n
    r = [matroid_rank(spec, S) for S in range(1 << n)]
    for S in range(1 << n):
        assert 0 <= r[S] <= S.bit_count()
        for x in range(n):
            if not (S >> x) & 1:
                assert r[S] <= r[S | 1 << x] <= r[S] + 1
    for S in range(1 << n):
        for x in range(n):
            if (S >> x) & 1:
                continue
            gain = r[S | 1 << x] - r[S]
            # supersets T of S without x
            rest = ((1 << n) - 1) & ~S & ~(1 << x)
            sub = rest
            while True:
                T = S | sub
                assert gain >= r[T | 1 << x] - r[T]
                if sub == 0:
                    break
                sub = (sub - 1) & rest
    for s, b in zip(spec.sets, spec.b):
        assert r[s] == b


def test_matroid_mode_instance():
    spec = _random_spec(np.random.default_rng(3))
    inst = build_singleminded_instance(spec.n, spec.sets, spec.b, "matroid", spec)
    assert revenue(inst.D, inst.p) == pytest.approx(inst.target_revenue(), abs=1e-9)


def test_matroid_mode_rejects_mismatch():
    spec = _spec_one()
    with pytest.raises(ValueError):
        build_singleminded_instance(6, (0b1111,), (3,), "matroid", spec)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_each_type_buys_its_set_when_disjoint(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 5))
    sets = gen_set_system(SetSystemParams(4 * N, N, 4, 0), seed)
    beta = sample_beta(N, 4, 2, seed)
    inst = build_singleminded_instance(4 * N, sets, beta)
    for (_, v), s in zip(inst.D.support, sets):
        assert best_response(v, inst.p).chosen_set == s
    assert revenue(inst.D, inst.p) == pytest.approx(inst.target_revenue(), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_below_ratio_matches_singleminded_revenue(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    k = int(rng.integers(1, 5))
    sets = [int(rng.integers(1, 1 << n)) for _ in range(k)]
    w = rng.uniform(0.1, 1, k)
    w /= w.sum()
    demand = ExplicitDemand(n, tuple(zip(w.tolist(), sets)))
    p = ItemPricing(tuple(float(x) for x in rng.integers(1, 9, n)))
    q = ExplicitPricing(n, _monotone_table(rng, n))
    D = singleminded_from_demand(demand, p)
    expected = revenue(D, p) / revenue(D, q) if revenue(D, q) > 0 else math.inf
    got = approx_from_below_ratio(q, p, demand)
    assert got == pytest.approx(expected, rel=1e-9) or (math.isinf(got) and math.isinf(expected))


def _monotone_table(rng, n):
    # max of random item-pricing tables is monotone
    tabs = []
    for _ in range(2):
        q = ItemPricing(tuple(float(x) for x in rng.integers(0, 6, n)))
        tabs.append(q.table())
    return np.maximum(*tabs)


def test_gap_report_single_type():
    inst = build_singleminded_instance(4, [0b0110], (8,))
    rep = gap_report(inst)
    assert rep.rev_p == 4.0
    # one type: a bundle price at the full value extracts everything, which
    # is at least what the half-priced p collects
    assert rep.get("brev").revenue == pytest.approx(8.0)
    assert rep.best.revenue >= rep.rev_p
    assert rep.best.ratio == pytest.approx(0.5)


def test_bundle_closed_form_on_small_family():
    sets = gen_set_system(SetSystemParams(24, 6, 3, 1), 2)
    beta = sample_beta(6, 5, 2, seed=3)
    inst = build_singleminded_instance(24, sets, beta)
    D = induced_singleminded(inst)
    b = np.array(beta.values, dtype=float)
    formula = max((2.0 ** (k - 1)) * beta.b_min * np.mean(b >= 2.0 ** k * beta.b_min)
                  for k in range(1, beta.m + 1))
    assert brev_exact(D).value == pytest.approx(formula, abs=1e-9)
    rep = gap_report(inst)
    assert rep.get("brev") is not None and rep.get("best_scaled") is not None
