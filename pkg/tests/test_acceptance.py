"""Acceptance criteria 1-11.

Each test prints one ``criterion N: PASS|FAIL`` line (visible even under
captured output) and then asserts the same outcome.
"""
import itertools
import math
import time

import numpy as np
import pytest

import oracles
from buymany.cli import hart_nisan_rows, main
from buymany.coretail import JENSEN_FLOOR, RATIO_BOUND, decomposition_report
from buymany.demand import ProductMarginals, best_response, revenue, singleminded_from_demand
from buymany.generators import (
    random_distribution,
    random_lottery,
    random_options,
    random_point_menu,
    random_subadditive_pricing,
    random_valuation,
)
from buymany.lattice import (
    CoverClosure,
    ItemPricing,
    SingleMinded,
    ValuationDistribution,
    additive_extension,
    buy_many_closure,
)
from buymany.lottery import adaptive_acquisition_cost, dominates
from buymany.lowerbound import (
    MATROID_PRESETS,
    SetSystemParams,
    approx_from_below_ratio,
    build_singleminded_instance,
    check_mu_tau_large,
    gen_matroid_spec,
    gen_set_system,
    matroid_rank,
    sample_beta,
)
from buymany.scaling import ScaleDistribution, combined_bound_check, expected_scaled_revenue, scaled_bound_check
from buymany.simple_opt import brev_exact


@pytest.fixture
def report(capsys):
    def emit(num: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, f"criterion {num}: {detail}"
    return emit


def rng_for(criterion: int, i: int) -> np.random.Generator:
    return np.random.default_rng([criterion, i])


# 1 ------------------------------------------------------------------------

def test_c1_scaled_revenue_identity(report):
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        rng = rng_for(1, i)
        n = int(rng.integers(1, 9))
        v = random_valuation(rng, n)
        if i % 2:
            q = ItemPricing(tuple(float(x) for x in rng.uniform(0.01, 10, n)))
        else:
            q = additive_extension(random_subadditive_pricing(rng, n))
        lo = float(rng.uniform(0.01, 1.0))
        sd = ScaleDistribution(lo, lo * float(rng.uniform(1.5, 100)))
        got = expected_scaled_revenue(v, q, sd).value
        u_lo = best_response(v, q.scaled(sd.lo)).utility
        u_hi = best_response(v, q.scaled(sd.hi)).utility
        worst = max(worst, abs(got - (u_lo - u_hi) / math.log(sd.hi / sd.lo)))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-6 and elapsed < 30,
           f"max |E[scaled rev] - utility drop / log ratio| = {worst:.3g} over 1000 pairs, {elapsed:.1f}s")


# 2 ------------------------------------------------------------------------

def test_c2_scaled_item_pricing_bound(report):
    worst, worst_c = math.inf, 0.0
    for i in range(1000):
        rng = rng_for(2, i)
        n = int(rng.integers(1, 7))
        p = random_subadditive_pricing(rng, n)
        D = random_distribution(rng, n, max_types=10)
        rep = scaled_bound_check(p, D)
        worst = min(worst, rep.min_margin)
        worst_c = max(worst_c, rep.params["c"] / n)
    report(2, worst >= -1e-6 and worst_c <= 1.0,
           f"min margin {worst:.3g}, max c/n {worst_c:.3f} over 1000 instances")


# 3 ------------------------------------------------------------------------

def test_c3_sandwich(report):
    bad = 0
    for i in range(1000):
        rng = rng_for(3, i)
        n = int(rng.integers(1, 9))
        p = random_subadditive_pricing(rng, n)
        tp, tq = p.table(), additive_extension(p).table()
        if not ((tp <= tq).all() and (tq <= n * tp).all()):
            bad += 1
    report(3, bad == 0, f"{bad} of 1000 pricings violate q/n <= p <= q (exact comparison)")


# 4 ------------------------------------------------------------------------

def test_c4_combined_bound(report):
    worst = math.inf
    for i in range(200):
        rng = rng_for(4, i)
        n = int(rng.integers(1, 6))
        p = random_subadditive_pricing(rng, n)
        D = random_distribution(rng, n)
        worst = min(worst, combined_bound_check(p, D).min_margin)
    report(4, worst >= -1e-6, f"min combined margin {worst:.3g} over 200 instances")


# 5 ------------------------------------------------------------------------

def test_c5_hart_nisan(report):
    ratios, worst = [], 0.0
    for n in range(2, 7):
        rows = hart_nisan_rows(n)
        raw = next(r for r in rows if r[1] == "raw_menu")
        weights = [float(n) ** -i for i in range(1, 2 ** n)]
        # type i values the grand bundle at n^i
        grand = (2 ** n - 1) / math.fsum(weights)
        worst = max(worst, abs(raw[2] - grand / n), abs(raw[3] - grand))
        ratios.append(raw[4])
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    report(5, worst <= 1e-9 and increasing,
           f"max closed-form gap {worst:.3g}; ratios {', '.join(f'{r:.3f}' for r in ratios)}")


# 6 ------------------------------------------------------------------------

def _closure_defects(n, opts):
    t = CoverClosure(n, tuple(opts)).table()
    full = 1 << n
    masks = np.arange(full)
    defects = []
    again = CoverClosure(n, tuple((s, t[s]) for s in range(1, full) if math.isfinite(t[s]))).table()
    if not np.array_equal(again, t):
        defects.append("idempotence")
    for i in range(n):
        if (t[masks | (1 << i)] < t).any():
            defects.append("monotone")
            break
    finite = np.isfinite(t)
    union = masks[:, None] | masks[None, :]
    pair = t[:, None] + t[None, :]
    ok = np.where(finite[:, None] & finite[None, :], t[union] <= pair, True)
    if not ok.all():
        defects.append("subadditive")
    if any(t[s] > c for s, c in opts):
        defects.append("base price")
    return defects


def test_c6_closure_suite(report):
    bad = []
    for i in range(10_000):
        rng = rng_for(6, i)
        n = int(rng.integers(1, 7))
        d = _closure_defects(n, random_options(rng, n))
        if d:
            bad.append((i, d))
    report(6, not bad, f"{len(bad)} of 10000 option lists fail ({bad[:3]})")


# 7 ------------------------------------------------------------------------

def _rank_axiom_failures(spec):
    n = spec.n
    full = 1 << n
    r = np.array([matroid_rank(spec, S) for S in range(full)])
    masks = np.arange(full)
    sizes = np.array([int(m).bit_count() for m in masks])
    fails = []
    if r[0] != 0 or (r < 0).any() or (r > sizes).any():
        fails.append("bounds")
    for x in range(n):
        step = r[masks | (1 << x)] - r
        if ((step < 0) | (step > 1)).any():
            fails.append("unit increase")
            break
    # diminishing returns for every S and x, y (equivalent to submodularity)
    for x, y in itertools.combinations(range(n), 2):
        bx, by = 1 << x, 1 << y
        if (r[masks | bx] + r[masks | by] < r[masks | bx | by] + r).any():
            fails.append("submodular")
            break
    for s, b in zip(spec.sets, spec.b):
        if r[s] != b or oracles.matroid_rank_brute(s, list(spec.sets), spec.b, spec.mu, spec.tau) != b:
            fails.append("target rank")
    return fails


def test_c7_matroid_suite(report):
    t0 = time.perf_counter()
    specs, attempts, bad = 0, 0, []
    while specs < 100:
        rng = rng_for(7, attempts)
        attempts += 1
        mu, b_min = MATROID_PRESETS[int(rng.integers(len(MATROID_PRESETS)))]
        n = int(rng.integers(max(mu + 1, 6), 11))
        N = int(rng.integers(1, 4))
        try:
            spec = gen_matroid_spec(rng, n, N, mu, b_min, max_tries=500)
        except ValueError:
            continue
        if spec.tau > 3 or not check_mu_tau_large(spec):
            continue
        specs += 1
        fails = _rank_axiom_failures(spec)
        if fails:
            bad.append(fails)
    elapsed = time.perf_counter() - t0
    report(7, not bad and elapsed < 60,
           f"{len(bad)} of 100 specs fail rank axioms or targets ({attempts} draws), {elapsed:.1f}s")


# 8 ------------------------------------------------------------------------

LB = dict(n=48, N=24, d=6, t=1, b_min=4, m=6)


def _lb_sample(s):
    sets = gen_set_system(SetSystemParams(LB["n"], LB["N"], LB["d"], LB["t"]), s)
    beta = sample_beta(LB["N"], LB["m"], LB["b_min"], 10_000 + s)
    return sets, beta, build_singleminded_instance(LB["n"], sets, beta)


def _bundle_formula(b, b_min, m):
    """Best bundle price against buyers worth ``b_i / 2``: price ``2^(k-1) b_min``
    sells to every ``b_i >= 2^k b_min``."""
    b = np.asarray(b, dtype=float)
    return max((2.0 ** (k - 1)) * b_min * float(np.mean(b >= 2.0 ** k * b_min)) for k in range(1, m + 1))


@pytest.fixture(scope="module")
def lower_bound_samples():
    out = []
    for s in range(200):
        sets, beta, inst = _lb_sample(s)
        rev = revenue(inst.D, inst.p)
        # buyers paying exactly half their target: what the identity promises
        half = ValuationDistribution.uniform([SingleMinded(LB["n"], S, b / 2)
                                              for S, b in zip(sets, beta.values)])
        brev_half = brev_exact(half).value
        induced = singleminded_from_demand(inst.demand, inst.p)
        bundle = brev_exact(induced).best_pricing
        below = approx_from_below_ratio(bundle, inst.p, inst.demand)
        rev_ind = revenue(induced, inst.p)
        rev_bundle = revenue(induced, bundle)
        out.append(dict(target=inst.target_revenue(), rev=rev, brev_half=brev_half,
                        formula=_bundle_formula(beta.values, LB["b_min"], LB["m"]),
                        below=below, sm_ratio=rev_ind / rev_bundle if rev_bundle > 0 else math.inf))
    return out


def test_c8_revenue_identity(report, lower_bound_samples):
    gaps = [abs(x["rev"] - x["target"]) for x in lower_bound_samples]
    bad = sum(g > 1e-9 for g in gaps)
    report(8, bad == 0,
           f"[identity] {bad} of 200 samples have Rev(D,p) != sum b/(2N); max gap {max(gaps):.3g}")


def test_c8_bundle_ratio(report, lower_bound_samples):
    m = LB["m"]
    bound = 0.9 * (m / 2) * (1 - 2.0 ** -m)
    oracle_gap = max(abs(x["brev_half"] - x["formula"]) for x in lower_bound_samples)
    ratios = np.array([x["target"] / x["brev_half"] for x in lower_bound_samples])
    below = int((ratios < bound).sum())
    report(8, oracle_gap <= 1e-9 and below == 0,
           f"[bundle ratio] closed form vs exact BRev gap {oracle_gap:.3g}; "
           f"{below} of 200 ratios below {bound:.4f} (mean {ratios.mean():.3f}, min {ratios.min():.3f})")


def test_c8_below_ratio_equivalence(report, lower_bound_samples):
    gaps = [abs(x["below"] - x["sm_ratio"]) for x in lower_bound_samples]
    report(8, max(gaps) <= 1e-9,
           f"[from-below] max |approx ratio - single-minded revenue ratio| = {max(gaps):.3g}")


# 9 ------------------------------------------------------------------------

def test_c9_core_tail(report):
    bad, worst_ratio, min_hit = [], 0.0, 1.0
    for i in range(1000):
        rng = rng_for(9, i)
        n = int(rng.integers(1, 13))
        p = random_subadditive_pricing(rng, n)
        pi = ProductMarginals(tuple(float(x) for x in rng.uniform(0, 1, n)))
        rep = decomposition_report(p, pi)
        if not rep.holds:
            bad.append((i, [k for k, v in rep.checks.items() if not v]))
        worst_ratio = max(worst_ratio, rep.ratio)
        if rep.split.regime == "standard":
            min_hit = min(min_hit, rep.hit_prob)
    ok = not bad and worst_ratio <= RATIO_BOUND + 1e-6 and min_hit >= JENSEN_FLOOR - 1e-6
    report(9, ok, f"{len(bad)} failing reports {bad[:3]}; max ratio {worst_ratio:.3f}; "
                  f"min hit probability {min_hit:.4f} (floor {JENSEN_FLOOR:.6f})")


# 10 -----------------------------------------------------------------------

def test_c10_dominance_and_point_menus(report):
    disagree = 0
    for i in range(1000):
        rng = rng_for(10, i)
        n = int(rng.integers(1, 5))
        a, b = random_lottery(rng, n, 5), random_lottery(rng, n, 5)
        if rng.random() < 0.3:
            # bias toward dominating pairs by thinning a copy of a
            b = random_lottery(rng, n, 5) if not a.outcomes else type(a)(
                tuple((pa, sa & int(rng.integers(0, 1 << n))) for pa, sa in a.outcomes))
        if dominates(a, b) != oracles.dominates_hall(a.outcomes, b.outcomes):
            disagree += 1
    mismatch = 0
    for i in range(80):
        n = 1 + i % 8
        menu, opts = random_point_menu(rng_for(10, 10_000 + i), n)
        table = buy_many_closure(opts, n).table()
        mismatch += sum(adaptive_acquisition_cost(menu, S) != table[S] for S in range(1 << n))
    report(10, disagree == 0 and mismatch == 0,
           f"{disagree} of 1000 dominance disagreements; {mismatch} point-menu cost mismatches")


# 11 -----------------------------------------------------------------------

def test_c11_cli_determinism(report, tmp_path):
    from test_cli import COMMANDS
    differ = []
    for name, argv in sorted(COMMANDS.items()):
        outs = []
        variants = [[], []]
        if name in ("lowerbound", "coretail"):
            variants = [["--threads", "1"], ["--threads", "1"], ["--threads", "2"], ["--threads", "5"]]
        for j, extra in enumerate(variants):
            path = tmp_path / f"{name}{j}.csv"
            main(["--out", str(path), *argv, *extra])
            outs.append(path.read_bytes())
        if any(o != outs[0] for o in outs) or not outs[0]:
            differ.append(name)
    report(11, not differ, f"{len(COMMANDS)} subcommands; differing outputs: {differ or 'none'}")
