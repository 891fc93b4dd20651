"""Command-line front end.  Every subcommand writes CSV (header row first,
floats with 9 significant digits) to stdout or ``--out``.

Exit codes: 0 success, 2 invalid input, 3 a checked inequality failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from .coretail import decomposition_report
from .demand import ProductMarginals, revenue
from .generators import random_subadditive_pricing
from .lattice import (
    DEFAULT_TOL,
    Additive,
    CoverClosure,
    ExplicitPricing,
    SingleMinded,
    ValuationDistribution,
    additive_extension,
    all_masks,
    check_deterministic_sybil_proof,
    items_of,
    mask_of,
)
from .lottery import adaptive_acquisition_cost, dominates, lottery_item_floor
from .lowerbound import (
    SetSystemParams,
    build_additive_instance,
    build_singleminded_instance,
    gap_report,
    gen_set_system,
    sample_beta,
)
from .scaling import (
    ScaleDistribution,
    combined_bound_check,
    expected_scaled_revenue,
    pointwise_factor,
    scaled_bound_check,
)
from .serialization import (
    SchemaError,
    instance_from_json,
    load_json,
    menu_from_json,
    options_from_json,
    pricing_from_json,
)
from .simple_opt import SREV_EXACT_MAX_SUPPORT, brev_exact, srev_exact_singleminded, srev_grid

__all__ = ["main", "gen_hart_nisan", "task_rng", "fmt"]

EXIT_OK, EXIT_INVALID, EXIT_VIOLATED = 0, 2, 3
THREADS_ENV = "BUYMANY_THREADS"
IDENTITY_TOL = 1e-6


class Violation(Exception):
    """A checked inequality failed beyond tolerance."""


def fmt(x) -> str:
    """Locale-independent cell formatting."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.9g" % x
    if x is None:
        return ""
    return str(x)


def set_str(mask: int) -> str:
    return " ".join(str(i) for i in items_of(mask))


def write_csv(header: Sequence[str], rows: Iterable[Sequence], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])


def task_rng(root: int, index: int) -> np.random.Generator:
    """Independent stream for task ``index``; the same for any thread count."""
    return np.random.default_rng(np.random.SeedSequence([root, index]))


def thread_count(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SchemaError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def parallel_map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def gen_hart_nisan(n: int) -> tuple[ValuationDistribution, ExplicitPricing, CoverClosure]:
    """Types ``i = 1..2^n - 1`` over sets ordered by (size, bitset): type ``i``
    has probability proportional to ``n^-i`` and values each item of ``S_i``
    at ``n^i / |S_i|``.  Returns the distribution, the raw menu pricing
    ``S_i -> n^(i-1)`` and its buy-many closure."""
    if not 2 <= n <= 8:
        raise ValueError("Hart-Nisan family needs 2 <= n <= 8")
    sets = sorted(range(1, 1 << n), key=lambda s: (s.bit_count(), s))
    weights, types, table = [], [], np.zeros(1 << n)
    for i, s in enumerate(sets, start=1):
        size = s.bit_count()
        vec = tuple(float(n) ** i / size if (s >> j) & 1 else 0.0 for j in range(n))
        types.append(Additive(vec))
        weights.append(float(n) ** -i)
        table[s] = float(n) ** (i - 1)
    D = ValuationDistribution.normalized(list(zip(weights, types)))
    raw = ExplicitPricing(n, table)
    closure = CoverClosure(n, tuple((s, float(table[s])) for s in sets))
    return D, raw, closure


def _srev(D: ValuationDistribution, seed: int):
    if len(D) <= SREV_EXACT_MAX_SUPPORT and all(isinstance(v, SingleMinded) for v in D.valuations):
        return srev_exact_singleminded(D)
    return srev_grid(D, seed=seed)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_verify(args, out) -> int:
    p = pricing_from_json(load_json(args.pricing))
    rep = check_deterministic_sybil_proof(p)
    rows = [("monotone", rep.monotone), ("subadditive", rep.subadditive),
            ("sybil_proof", rep.sybil_proof), ("partial", rep.partial)]
    for a, b in rep.monotone_witnesses:
        rows.append(("monotone_witness", f"{set_str(a)} | {set_str(b)}"))
    for a, b in rep.subadditive_witnesses:
        rows.append(("subadditive_witness", f"{set_str(a)} | {set_str(b)}"))
    write_csv(("property", "value"), rows, out)
    return EXIT_OK


def cmd_closure(args, out) -> int:
    n, opts = options_from_json(load_json(args.options))
    table = CoverClosure(n, tuple(opts)).table()
    write_csv(("mask", "set", "price"),
              ((int(m), set_str(int(m)), table[m]) for m in all_masks(n)), out)
    return EXIT_OK


def cmd_revenue(args, out) -> int:
    p, D = instance_from_json(load_json(args.instance))
    rev = revenue(D, p)
    sr = _srev(D, args.seed)
    br = brev_exact(D)
    write_csv(("rev", "srev", "srev_exact", "brev"), [(rev, sr.value, sr.exact, br.value)], out)
    return EXIT_OK


def cmd_scale(args, out) -> int:
    p, D = instance_from_json(load_json(args.instance))
    q = additive_extension(p)
    c = pointwise_factor(p, q)
    lo = args.lo if args.lo is not None else 1.0 / (2 * c)
    hi = args.hi if args.hi is not None else 1.0
    sd = ScaleDistribution(lo, hi)
    t3 = scaled_bound_check(p, D, q=q, lo=lo, hi=hi)
    comb = combined_bound_check(p, D, a_max=args.a_max) if p.n <= 10 else None
    rows, bad = [], []
    for idx, (w, v) in enumerate(D.support):
        sr = expected_scaled_revenue(v, q, sd)
        identity_gap = abs(sr.value - sr.utility_drop_rate)
        tm = t3.margins[idx]
        row = [idx, w, sr.value, sr.utility_drop_rate, tm.lhs, tm.rhs, tm.margin]
        if identity_gap > IDENTITY_TOL:
            bad.append(f"type {idx}: scaled revenue identity off by {identity_gap:.3g}")
        if tm.margin < -DEFAULT_TOL.eps_report:
            bad.append(f"type {idx}: scaled revenue bound margin {tm.margin:.3g}")
        if comb is not None:
            cm = comb.margins[idx]
            row += [cm.lhs, cm.rhs, cm.margin]
            if cm.margin < -DEFAULT_TOL.eps_report:
                bad.append(f"type {idx}: combined bound margin {cm.margin:.3g}")
        else:
            row += [None, None, None]
        rows.append(row)
    write_csv(("type", "weight", "scaled_rev", "utility_drop_rate", "bound_lhs", "bound_rhs",
               "bound_margin", "combined_lhs", "combined_rhs", "combined_margin"), rows, out)
    if bad:
        raise Violation("; ".join(bad))
    return EXIT_OK


def _parse_set(text: str, n: int) -> int:
    items = [int(x) for x in text.replace(",", " ").split()] if text.strip() else []
    if any(not 0 <= i < n for i in items):
        raise SchemaError(f"target set {items} outside 0..{n - 1}")
    return mask_of(items)


def cmd_lottery(args, out) -> int:
    menu = menu_from_json(load_json(args.menu))
    try:
        target = _parse_set(args.target, menu.n)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    floors = lottery_item_floor(menu)
    rows = []
    for i, (x, k) in enumerate(zip(floors.prices, floors.option_index)):
        rows.append(("floor", i, "" if k is None else k, x))
    cost = adaptive_acquisition_cost(menu, target)
    repeat = math.fsum(floors.prices[i] for i in items_of(target))
    rows.append(("adaptive_cost", set_str(target), "", cost))
    rows.append(("repeat_floors_cost", set_str(target), "", repeat))
    for i, (a, _) in enumerate(menu.options):
        for j, (b, _) in enumerate(menu.options):
            if i != j:
                rows.append(("dominates", i, j, dominates(a, b)))
    write_csv(("record", "a", "b", "value"), rows, out)
    if cost > repeat + DEFAULT_TOL.eps_report * max(1.0, repeat):
        raise Violation(f"adaptive cost {cost} exceeds the repeat-floors cost {repeat}")
    return EXIT_OK


LOWERBOUND_HEADER = ("seed", "sample", "N", "m", "rev_p", "target", "brev", "srev", "best_scaled",
                     "ratio_brev", "ratio_srev", "ratio_scaled",
                     "below_brev", "below_srev", "below_scaled")


def _lowerbound_row(args, index: int) -> list:
    rng = task_rng(args.seed, index)
    sets_seed, beta_seed, grid_seed = rng.integers(0, 2**63 - 1, size=3)
    params = SetSystemParams(args.n, args.N, args.d, args.t, args.max_tries)
    sets = gen_set_system(params, int(sets_seed))
    beta = sample_beta(args.N, args.m, args.bmin, int(beta_seed))
    if args.mode == "single-minded":
        inst = build_singleminded_instance(args.n, sets, beta, "cover")
    else:
        inst = build_additive_instance(args.n, sets, beta)
    rep = gap_report(inst, seed=int(grid_seed))
    srev = rep.get("srev_exact") or rep.get("srev_grid")
    brev, scaled = rep.get("brev"), rep.get("best_scaled")
    return [args.seed, index, args.N, args.m, rep.rev_p, inst.target_revenue(),
            brev.revenue, srev.revenue, scaled.revenue,
            brev.ratio, srev.ratio, scaled.ratio,
            brev.below_ratio, srev.below_ratio, scaled.below_ratio]


def cmd_lowerbound(args, out) -> int:
    if args.samples < 1:
        raise SchemaError("--samples must be positive")
    rows = parallel_map(lambda i: _lowerbound_row(args, i), list(range(args.samples)),
                        thread_count(args.threads))
    write_csv(LOWERBOUND_HEADER, rows, out)
    return EXIT_OK


CORETAIL_HEADER = ("n", "seed", "sample", "rev", "e_tail", "e_core", "a", "c", "brev",
                   "tail_srev", "ratio", "regime", "holds")


def _coretail_row(args, index: int) -> list:
    rng = task_rng(args.seed, index)
    p = random_subadditive_pricing(rng, args.n)
    pi = ProductMarginals(tuple(rng.uniform(0.0, 0.6, size=args.n).tolist()))
    rep = decomposition_report(p, pi)
    a = rep.stats.a if rep.stats else 0.0
    c = rep.stats.c if rep.stats else 0.0
    return [args.n, args.seed, index, rep.rev, rep.e_tail, rep.e_core, a, c, rep.brev,
            rep.tail_srev, rep.ratio, rep.split.regime, rep.holds]


def cmd_coretail(args, out) -> int:
    if not 1 <= args.n <= 12:
        raise SchemaError("--n must lie in 1..12")
    if args.samples < 1:
        raise SchemaError("--samples must be positive")
    rows = parallel_map(lambda i: _coretail_row(args, i), list(range(args.samples)),
                        thread_count(args.threads))
    write_csv(CORETAIL_HEADER, rows, out)
    failed = [r[2] for r in rows if not r[-1]]
    if failed:
        raise Violation(f"decomposition inequalities fail on samples {failed}")
    return EXIT_OK


def hart_nisan_rows(n: int, seed: int = 0) -> list[list]:
    D, raw, closure = gen_hart_nisan(n)
    grand = math.fsum(w * v.grand_value() for w, v in D.support)
    brev = brev_exact(D).value
    srev = srev_grid(D, seed=seed).value
    simple = max(brev, srev)
    rows = []
    for family, p in (("raw_menu", raw), ("closure", closure)):
        r = revenue(D, p)
        rows.append([n, family, r, grand, r / simple if simple > 0 else math.inf])
    rows.append([n, "brev", brev, grand, brev / simple])
    rows.append([n, "srev_grid", srev, grand, srev / simple])
    return rows


def cmd_hartnisan(args, out) -> int:
    try:
        rows = hart_nisan_rows(args.n, args.seed)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    write_csv(("n", "family", "rev", "expected_grand_value", "ratio_vs_simple"), rows, out)
    raw = rows[0][2]
    if abs(raw - rows[0][3] / args.n) > 1e-9 * max(1.0, rows[0][3]):
        raise Violation("raw menu revenue differs from E[v([n])]/n")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="buymany", description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="write CSV here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify", help="check a deterministic pricing is monotone and subadditive")
    s.add_argument("pricing")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("closure", help="cheapest-cover table of an option list")
    s.add_argument("options")
    s.set_defaults(func=cmd_closure)

    s = sub.add_parser("revenue", help="revenue of a pricing against simple pricings")
    s.add_argument("instance")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_revenue)

    s = sub.add_parser("scale", help="scaled item pricing bounds per buyer type")
    s.add_argument("instance")
    s.add_argument("--lo", type=float)
    s.add_argument("--hi", type=float)
    s.add_argument("--a-max", type=int, default=256)
    s.set_defaults(func=cmd_scale)

    s = sub.add_parser("lottery", help="item floors, adaptive cost and dominance of a menu")
    s.add_argument("menu")
    s.add_argument("--target", required=True, help="items, e.g. '0 2' or '0,2'")
    s.set_defaults(func=cmd_lottery)

    s = sub.add_parser("lowerbound", help="gap reports on random hard instances")
    s.add_argument("--n", type=int, default=48)
    s.add_argument("--N", type=int, default=24)
    s.add_argument("--d", type=int, default=6)
    s.add_argument("--t", type=int, default=1)
    s.add_argument("--m", type=int, default=6)
    s.add_argument("--bmin", type=int, default=4)
    s.add_argument("--samples", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mode", choices=("single-minded", "additive"), default="single-minded")
    s.add_argument("--max-tries", type=int, default=100_000)
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_lowerbound)

    s = sub.add_parser("coretail", help="core-tail decomposition on random instances")
    s.add_argument("--n", type=int, default=6)
    s.add_argument("--samples", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_coretail)

    s = sub.add_parser("hartnisan", help="menu vs simple pricing revenue on the Hart-Nisan family")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_hartnisan)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except Violation as exc:
        _emit(args, buf)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATED
    except (SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(args, buf)
    return code


def _emit(args, buf: io.StringIO) -> None:
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    sys.exit(main())
