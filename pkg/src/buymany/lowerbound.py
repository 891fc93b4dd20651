"""Hard instances for simple pricings: almost-disjoint set systems,
truncated-geometric value scales, single-minded and additive instance
builders, the approximation-from-below ratio, and a matroid rank oracle."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .demand import ExplicitDemand, best_response, revenue, singleminded_from_demand
from .lattice import (
    DEFAULT_TOL,
    MAX_TABLE_N,
    Additive,
    CoverClosure,
    ExplicitPricing,
    ItemPricing,
    Pricing,
    ScaledPricing,
    SingleMinded,
    ToleranceConfig,
    ValuationDistribution,
    all_masks,
    items_of,
)
from .simple_opt import (
    SREV_EXACT_MAX_SUPPORT,
    brev_exact,
    srev_exact_singleminded,
    srev_grid,
)

__all__ = [
    "SetSystemParams",
    "BetaVector",
    "MatroidSpec",
    "LowerBoundInstance",
    "AdversaryResult",
    "GapReport",
    "gen_set_system",
    "sample_beta",
    "build_singleminded_instance",
    "build_additive_instance",
    "approx_from_below_ratio",
    "matroid_rank",
    "is_independent",
    "check_mu_tau_large",
    "gen_matroid_spec",
    "MATROID_PRESETS",
    "gap_report",
]

MATROID_MAX_GROUND = 14
MATROID_MAX_SETS = 6
MATROID_MAX_TAU = 4


@dataclass(frozen=True)
class SetSystemParams:
    n: int
    N: int
    d: int
    t: int
    max_tries: int = 100_000

    def __post_init__(self):
        if not (1 <= self.d <= self.n):
            raise ValueError("need 1 <= d <= n")
        if not (0 <= self.t < self.d):
            raise ValueError("need 0 <= t < d")
        if self.N < 1:
            raise ValueError("need N >= 1")
        if self.max_tries < 1:
            raise ValueError("max_tries must be positive")


def gen_set_system(params: SetSystemParams, seed: int | np.random.Generator = 0) -> list[int]:
    """``N`` random ``d``-subsets with pairwise intersections at most ``t``.

    Uniform ``d``-subsets are drawn and kept when compatible with every set
    kept so far; ``max_tries`` bounds the total number of draws.
    """
    rng = np.random.default_rng(seed)
    kept: list[int] = []
    tries = 0
    while len(kept) < params.N:
        if tries >= params.max_tries:
            raise ValueError(
                f"rejection budget exhausted after placing {len(kept)} of {params.N} sets "
                f"(n={params.n}, d={params.d}, t={params.t})")
        tries += 1
        draw = rng.choice(params.n, size=params.d, replace=False)
        s = int(sum(1 << int(i) for i in draw))
        if all((s & k).bit_count() <= params.t for k in kept):
            kept.append(s)
    return kept


@dataclass(frozen=True)
class BetaVector:
    values: tuple[int, ...]
    b_min: int
    m: int

    def __post_init__(self):
        lo, hi = 2 * self.b_min, (2 ** self.m) * self.b_min
        if any(not lo <= b <= hi for b in self.values):
            raise ValueError("values outside [2 b_min, 2^m b_min]")

    @property
    def N(self) -> int:
        return len(self.values)


def sample_beta(N: int, m: int, b_min: int, seed: int | np.random.Generator = 0) -> BetaVector:
    """Independent draws ``2^k b_min`` with ``Pr[k] = 2^-k / (1 - 2^-m)``, k = 1..m."""
    if m < 1 or b_min < 1:
        raise ValueError("need m >= 1 and b_min >= 1")
    rng = np.random.default_rng(seed)
    ks = np.arange(1, m + 1)
    probs = 2.0 ** -ks
    probs /= probs.sum()
    draws = rng.choice(ks, size=N, p=probs)
    return BetaVector(tuple(int(b_min) << int(k) for k in draws), int(b_min), int(m))


@dataclass(frozen=True)
class MatroidSpec:
    """Set system plus targets ``b`` defining a matroid through the
    cardinality cap ``mu`` and coverage caps ``h(J)`` for ``|J| < tau``.

    ``meta`` records generator parameters (set size, expansion bound) for
    reporting only.
    """

    n: int
    sets: tuple[int, ...]
    b: tuple[int, ...]
    mu: int
    tau: int
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.sets) != len(self.b):
            raise ValueError("sets and b must align")
        if self.mu < max(self.b, default=0):
            raise ValueError("mu must be at least max b_i")
        if self.tau < 2:
            raise ValueError("tau must be at least 2")
        full = (1 << self.n) - 1
        if any(s & ~full for s in self.sets):
            raise ValueError("set outside the ground set")

    def check_budget(self) -> None:
        if self.n > MATROID_MAX_GROUND or len(self.sets) > MATROID_MAX_SETS or self.tau > MATROID_MAX_TAU:
            raise ValueError(
                f"matroid spec exceeds enumeration budget (ground <= {MATROID_MAX_GROUND}, "
                f"N <= {MATROID_MAX_SETS}, tau <= {MATROID_MAX_TAU})")

    def union(self, J: tuple[int, ...]) -> int:
        out = 0
        for j in J:
            out |= self.sets[j]
        return out

    def h(self, J: tuple[int, ...]) -> int:
        return sum(self.b[j] for j in J) - (self.mu * len(J) - self.union(J).bit_count())

    def constraints(self) -> list[tuple[int, int]]:
        """``(S(J), h(J))`` for every nonempty ``J`` with ``|J| < tau``."""
        cache = self.__dict__.get("_constraints")
        if cache is None:
            cache = []
            N = len(self.sets)
            for size in range(1, min(self.tau - 1, N) + 1):
                for J in itertools.combinations(range(N), size):
                    cache.append((self.union(J), self.h(J)))
            self.__dict__["_constraints"] = cache
        return cache


def is_independent(spec: MatroidSpec, I: int) -> bool:
    if I.bit_count() > spec.mu:
        return False
    return all((I & cover).bit_count() <= cap for cover, cap in spec.constraints())


def matroid_rank(spec: MatroidSpec, S: int) -> int:
    """Size of a maximum independent subset of ``S`` (greedy is exact for
    matroids)."""
    spec.check_budget()
    I = 0
    for x in items_of(S):
        cand = I | (1 << x)
        if is_independent(spec, cand):
            I = cand
    return I.bit_count()


def check_mu_tau_large(spec: MatroidSpec) -> bool:
    """``h(J) >= 0`` for ``|J| < tau`` and ``h(J) >= mu`` for
    ``tau <= |J| <= 2 tau - 2``."""
    spec.check_budget()
    N = len(spec.sets)
    for size in range(0, min(2 * spec.tau - 2, N) + 1):
        floor = 0 if size < spec.tau else spec.mu
        for J in itertools.combinations(range(N), size):
            if spec.h(J) < floor:
                return False
    return True


# (mu = d, b_min) pairs; tau = 2 mu / b_min and eps = b_min / (4 mu) follow
MATROID_PRESETS: tuple[tuple[int, int], ...] = ((3, 2), (4, 4), (2, 2))


def gen_matroid_spec(rng: np.random.Generator, n: int, N: int, mu: int, b_min: int,
                     max_tries: int = 10_000) -> MatroidSpec:
    """Random spec whose ``mu``-sets expand losslessly: every family ``J``
    with ``|J| <= 2 tau`` covers at least ``(1 - eps) mu |J|`` items, with
    ``tau = 2 mu / b_min`` and ``eps = b_min / (4 mu)``.  Targets ``b_i`` are
    uniform integers in ``[b_min, mu]``."""
    if (2 * mu) % b_min:
        raise ValueError("2 mu / b_min must be an integer")
    tau = 2 * mu // b_min
    eps = b_min / (4 * mu)
    L = 2 * tau
    for _ in range(max_tries):
        sets = [int(sum(1 << int(i) for i in rng.choice(n, size=mu, replace=False)))
                for _ in range(N)]
        ok = True
        for size in range(2, min(L, N) + 1):
            for J in itertools.combinations(range(N), size):
                cover = 0
                for j in J:
                    cover |= sets[j]
                if cover.bit_count() < (1 - eps) * mu * size - 1e-12:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            b = tuple(int(x) for x in rng.integers(b_min, mu + 1, size=N))
            return MatroidSpec(n, tuple(sets), b, mu, tau,
                               {"d": mu, "b_min": b_min, "eps": eps, "L": L})
    raise ValueError("no expanding set system found within the budget")


@dataclass(frozen=True)
class LowerBoundInstance:
    D: ValuationDistribution
    p: Pricing
    demand: ExplicitDemand
    mode: str
    sets: tuple[int, ...]
    b: tuple[float, ...]

    @property
    def n(self) -> int:
        return self.p.n

    def target_revenue(self) -> float:
        """``sum(b_i) / (2N)``, what ``p`` collects when every type buys its set."""
        return math.fsum(self.b) / (2 * len(self.b))


def _uniform_demand(n: int, sets) -> ExplicitDemand:
    w = 1.0 / len(sets)
    acc: dict[int, float] = {}
    for s in sets:
        acc[s] = acc.get(s, 0.0) + w
    return ExplicitDemand(n, tuple((x, s) for s, x in acc.items()))


def build_singleminded_instance(n: int, sets, beta: BetaVector | tuple, pricing_mode: str = "cover",
                                matroid_spec: MatroidSpec | None = None) -> LowerBoundInstance:
    """Uniform single-minded types ``(S_i, b_i)`` priced at half of a
    completion of ``S_i -> b_i``: the cheapest cover (``"cover"``) or the
    matroid rank function (``"matroid"``)."""
    b = tuple(beta.values) if isinstance(beta, BetaVector) else tuple(beta)
    sets = tuple(int(s) for s in sets)
    if len(sets) != len(b) or not sets:
        raise ValueError("sets and values must be nonempty and aligned")
    if pricing_mode == "cover":
        base: Pricing = CoverClosure(n, tuple(zip(sets, (float(x) for x in b))))
    elif pricing_mode == "matroid":
        if matroid_spec is None:
            raise ValueError("matroid mode needs a MatroidSpec")
        if matroid_spec.n != n or matroid_spec.sets != sets or tuple(matroid_spec.b) != tuple(b):
            raise ValueError("matroid spec does not match the instance")
        if n > MAX_TABLE_N:
            raise ValueError("matroid mode needs a tabulable ground set")
        if not check_mu_tau_large(matroid_spec):
            raise ValueError("h is not (mu, tau)-large for this spec")
        for i, (s, bi) in enumerate(zip(sets, b)):
            r = matroid_rank(matroid_spec, s)
            if r != bi:
                raise ValueError(f"rank of set {i} is {r}, not its target {bi}")
        table = np.array([matroid_rank(matroid_spec, int(S)) for S in all_masks(n)], dtype=float)
        base = ExplicitPricing(n, table)
    else:
        raise ValueError(f"unknown pricing mode {pricing_mode!r}")
    p = ScaledPricing(0.5, base)
    D = ValuationDistribution.uniform([SingleMinded(n, s, float(x)) for s, x in zip(sets, b)])
    return LowerBoundInstance(D, p, _uniform_demand(n, sets), "single-minded", sets,
                              tuple(float(x) for x in b))


def build_additive_instance(n: int, sets, beta: BetaVector | tuple,
                            tol: ToleranceConfig = DEFAULT_TOL) -> LowerBoundInstance:
    """Uniform additive types valuing each item of ``S_i`` at ``b_i / |S_i|``,
    priced by the cheapest cover with ``S_i`` at ``b_i / 2``."""
    b = tuple(beta.values) if isinstance(beta, BetaVector) else tuple(beta)
    sets = tuple(int(s) for s in sets)
    if len(sets) != len(b) or not sets:
        raise ValueError("sets and values must be nonempty and aligned")
    sizes = {s.bit_count() for s in sets}
    d = min(sizes)
    t = max(((a & c).bit_count() for a, c in itertools.combinations(sets, 2)), default=0)
    if t * max(b) / d > min(b) / 2 + tol.eps_price:
        worst = max(itertools.combinations(range(len(sets)), 2),
                    key=lambda ij: (sets[ij[0]] & sets[ij[1]]).bit_count())
        raise ValueError(
            f"no-arbitrage condition fails: sets {worst[0]} and {worst[1]} share {t} items, "
            f"{t}*{max(b)}/{d} > {min(b)}/2")
    p = CoverClosure(n, tuple((s, x / 2) for s, x in zip(sets, b)))
    types = []
    for s, x in zip(sets, b):
        vec = [0.0] * n
        for i in items_of(s):
            vec[i] = x / s.bit_count()
        types.append(Additive(tuple(vec)))
    D = ValuationDistribution.uniform(types)
    for i, (v, x) in enumerate(zip(types, b)):
        paid = best_response(v, p, tol).price_paid
        if abs(paid - x / 2) > tol.eps_report * max(1.0, x):
            raise ValueError(f"type {i} pays {paid}, not b_i/2 = {x / 2}")
    return LowerBoundInstance(D, p, _uniform_demand(n, sets), "additive", sets,
                              tuple(float(x) for x in b))


def approx_from_below_ratio(q: Pricing, p: Pricing, demand: ExplicitDemand,
                            tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """``E[p(S)] / E[q(S) 1{q(S) <= p(S)}]`` over ``S`` from the demand."""
    num, den = [], []
    for w, s in demand.iter_outcomes():
        ps, qs = p.price(s), q.price(s)
        num.append(w * ps)
        if qs <= ps + tol.eps_price:
            den.append(w * qs)
    top, bottom = math.fsum(num), math.fsum(den)
    if bottom <= 0:
        return math.inf
    return top / bottom


@dataclass(frozen=True)
class AdversaryResult:
    name: str
    revenue: float
    ratio: float
    below_ratio: float


@dataclass(frozen=True)
class GapReport:
    rev_p: float
    adversaries: tuple[AdversaryResult, ...]

    def get(self, name: str) -> AdversaryResult | None:
        for a in self.adversaries:
            if a.name == name:
                return a
        return None

    @property
    def best(self) -> AdversaryResult:
        return max(self.adversaries, key=lambda a: a.revenue)


def _ratio(a: float, b: float) -> float:
    if b > 0:
        return a / b
    return math.inf if a > 0 else 1.0


def gap_report(inst: LowerBoundInstance, scales: int | None = None, grid_levels: int = 16,
               grid_restarts: int = 4, seed: int = 0,
               tol: ToleranceConfig = DEFAULT_TOL) -> GapReport:
    """Exact revenue of ``inst.p`` against simple adversaries: best bundle
    price, item pricings (exact for small single-minded supports, grid
    search otherwise) and scaled copies ``2^-j`` of the singleton prices of
    ``p`` (items no set covers priced 0)."""
    D, p = inst.D, inst.p
    rev_p = revenue(D, p, tol)
    found: list[tuple[str, Pricing, float]] = []
    br = brev_exact(D, tol)
    found.append(("brev", br.best_pricing, br.value))
    if inst.mode == "single-minded" and len(D) <= SREV_EXACT_MAX_SUPPORT:
        sr = srev_exact_singleminded(D, tol)
        found.append(("srev_exact", sr.best_pricing, sr.value))
    sg = srev_grid(D, levels_per_item=grid_levels, seed=seed, restarts=grid_restarts, tol=tol)
    found.append(("srev_grid", sg.best_pricing, sg.value))
    singles = np.array([p.price(1 << i) for i in range(p.n)])
    singles = np.where(np.isfinite(singles), singles, 0.0)
    if scales is None:
        top = max(inst.b) if inst.b else 1.0
        low = singles[singles > 0].min() if (singles > 0).any() else 1.0
        scales = max(1, int(math.ceil(math.log2(max(top / low, 1.0)))) + 1)
    best_scaled: tuple[str, Pricing, float] | None = None
    for j in range(scales + 1):
        q = ItemPricing(tuple(singles * 2.0 ** -j))
        r = revenue(D, q, tol)
        if best_scaled is None or r > best_scaled[2]:
            best_scaled = ("best_scaled", q, r)
    found.append(best_scaled)
    out = []
    for name, q, r in found:
        out.append(AdversaryResult(name, r, _ratio(rev_p, r),
                                   approx_from_below_ratio(q, p, inst.demand, tol)))
    return GapReport(rev_p, tuple(out))


def induced_singleminded(inst: LowerBoundInstance) -> ValuationDistribution:
    """Single-minded types that each want one demanded set at its ``p`` price."""
    return singleminded_from_demand(inst.demand, inst.p)
