"""Checks for correctness, privacy and download cost.

Privacy is checked on exactly what a database sees: the bytes of its query
frames.  Exhaustive mode enumerates the whole randomness space and compares
the per-database count maps across every desired index; any difference is
a violation.  Sampled mode runs two-sample chi-square tests instead.
"""

from __future__ import annotations

import hashlib
import itertools
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from math import comb, prod
from typing import Any, Iterable, Iterator, Sequence

from scipy.stats import chi2_contingency

from pirsim import alphabet as alpha
from pirsim.composite import (
    Segment,
    enumerate_randomness,
    plan_segments,
    randomness_space_size,
    sample_randomness,
    stream,
)
from pirsim.core import (
    KSum,
    MessageStore,
    SchemeParams,
    count_profile,
    count_type,
    optimal_download_cost,
)
from pirsim.errors import BudgetExceeded, ParameterError
from pirsim.qgen import PermutationMap, q_gen
from pirsim.sim.engine import build_queries, execute
from pirsim.sim.protocol import run_protocol
from pirsim.sim.wire import SchemeKind, encode_queries

DEFAULT_BUDGET = 10**6
DEFAULT_TRIALS = 10**4
DEFAULT_SIGNIFICANCE = 1e-3


class PrivacyVerdict(str, Enum):
    EXACT_EQUAL = "EXACT_EQUAL"
    STATISTICALLY_CONSISTENT = "STATISTICALLY_CONSISTENT"
    VIOLATION = "VIOLATION"


# -- schemes as seen by the auditor -----------------------------------------


@dataclass(frozen=True)
class AuditScheme:
    """A query generator reduced to what privacy depends on.

    ``forced`` pins the randomness to one value per segment; that is how the
    negative controls are built.
    """

    name: str
    N: int
    K: int
    alphabet: int
    segments: tuple[Segment, ...]
    forced: tuple | None = None

    def space_size(self) -> int:
        if self.forced is not None:
            return 1
        return prod(randomness_space_size(s, self.K) for s in self.segments)

    def outcomes(self) -> Iterator[tuple]:
        if self.forced is not None:
            return iter([self.forced])
        return itertools.product(*(list(enumerate_randomness(s, self.K)) for s in self.segments))

    def sample(self, rng: random.Random) -> tuple:
        if self.forced is not None:
            return self.forced
        return tuple(sample_randomness(s, self.K, rng) for s in self.segments)

    def database_views(self, theta: int, randomness: Sequence[Any]) -> list[bytes]:
        qs = build_queries(self.segments, self.N, self.K, theta, self.alphabet, randomness)
        return [encode_queries(q) for q in qs]


def scheme_for(params: SchemeParams) -> AuditScheme:
    """The scheme ``run_protocol`` uses for these parameters."""
    L = params.L if params.matched else alpha.transcoded_length(params.L, params.M, params.Mprime)
    segments = plan_segments(SchemeParams(params.N, params.K, L, params.Mprime))
    return AuditScheme("composite", params.N, params.K, params.Mprime, segments)


def capacity_scheme(N: int, K: int, alphabet: int = 2) -> AuditScheme:
    seg = Segment(SchemeKind.CAPACITY, 0, N ** (K - 1), N)
    return AuditScheme("capacity", N, K, alphabet, (seg,))


def srk_scheme(N: int, K: int, alphabet: int = 2) -> AuditScheme:
    seg = Segment(SchemeKind.SRK, 0, N - 1, N)
    return AuditScheme("srk", N, K, alphabet, (seg,))


def negative_control(scheme: AuditScheme) -> AuditScheme:
    """Same scheme with identity permutations and all-zero coins."""
    forced = []
    for seg in scheme.segments:
        if seg.kind == SchemeKind.CAPACITY:
            forced.append(PermutationMap.identity(scheme.K, seg.length))
        elif seg.kind == SchemeKind.SRK:
            forced.append((0,) * ((seg.databases - 1) * scheme.K))
        else:
            forced.append(None)
    return AuditScheme(f"{scheme.name}-broken", scheme.N, scheme.K, scheme.alphabet,
                       scheme.segments, tuple(forced))


# -- privacy ----------------------------------------------------------------


@dataclass
class QueryDistribution:
    support: Counter = field(default_factory=Counter)
    total_outcomes: int = 0

    def add(self, key: bytes, count: int = 1) -> None:
        self.support[key] += count
        self.total_outcomes += count

    def merge(self, other: "QueryDistribution") -> None:
        self.support.update(other.support)
        self.total_outcomes += other.total_outcomes


@dataclass
class PrivacyResult:
    database: int
    verdict: PrivacyVerdict
    witness: dict | None = None
    p_value: float | None = None

    def to_json(self) -> dict:
        doc = {"database": self.database, "verdict": self.verdict.value}
        if self.witness is not None:
            doc["witness"] = self.witness
        if self.p_value is not None:
            doc["p_value"] = self.p_value
        return doc


def _count_chunk(scheme: AuditScheme, chunk: Sequence[tuple]) -> list[list[QueryDistribution]]:
    dists = [[QueryDistribution() for _ in range(scheme.N)] for _ in range(scheme.K)]
    for rnd in chunk:
        for theta in range(1, scheme.K + 1):
            for n, view in enumerate(scheme.database_views(theta, rnd)):
                dists[theta - 1][n].add(view)
    return dists


def _chunks(it: Iterable, size: int) -> Iterator[list]:
    it = iter(it)
    while chunk := list(itertools.islice(it, size)):
        yield chunk


def exhaustive_distributions(
    scheme: AuditScheme, budget: int = DEFAULT_BUDGET, workers: int = 1, chunk_size: int = 4096
) -> list[list[QueryDistribution]]:
    """``dists[theta-1][n]``: exact query distribution of database n+1."""
    size = scheme.space_size()
    if size > budget:
        raise BudgetExceeded(f"{scheme.name}: {size} outcomes exceed budget {budget}")
    merged = [[QueryDistribution() for _ in range(scheme.N)] for _ in range(scheme.K)]
    chunks = _chunks(scheme.outcomes(), chunk_size)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = pool.map(_count_chunk, itertools.repeat(scheme), chunks)
            for part in parts:
                _merge_into(merged, part)
    else:
        for chunk in chunks:
            _merge_into(merged, _count_chunk(scheme, chunk))
    return merged


def _merge_into(merged, part) -> None:
    for row, prow in zip(merged, part):
        for d, p in zip(row, prow):
            d.merge(p)


def _exact_verdict(db: int, per_theta: Sequence[QueryDistribution]) -> PrivacyResult:
    ref = per_theta[0].support
    for t, dist in enumerate(per_theta[1:], start=2):
        if dist.support != ref:
            keys = set(ref) | set(dist.support)
            key = max(sorted(keys), key=lambda k: abs(ref[k] - dist.support[k]))
            witness = {
                "query_hex": key.hex(),
                "theta_a": 1,
                "count_a": ref[key],
                "theta_b": t,
                "count_b": dist.support[key],
            }
            return PrivacyResult(db, PrivacyVerdict.VIOLATION, witness)
    return PrivacyResult(db, PrivacyVerdict.EXACT_EQUAL)


def privacy_audit_exhaustive_all(
    scheme: AuditScheme, budget: int = DEFAULT_BUDGET, workers: int = 1
) -> list[PrivacyResult]:
    dists = exhaustive_distributions(scheme, budget, workers)
    return [
        _exact_verdict(n + 1, [dists[t][n] for t in range(scheme.K)]) for n in range(scheme.N)
    ]


def privacy_audit_exhaustive(
    scheme: AuditScheme | SchemeParams, database: int, budget: int = DEFAULT_BUDGET
) -> PrivacyResult:
    """Exact verdict for one database (1-based)."""
    if isinstance(scheme, SchemeParams):
        scheme = scheme_for(scheme)
    return privacy_audit_exhaustive_all(scheme, budget)[database - 1]


def _bucket(key: bytes, buckets: int) -> int:
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big") % buckets


def pooled_table(a: Counter, b: Counter, min_expected: float = 5.0) -> list[list[int]]:
    """2 x C contingency table with every expected cell count >= ``min_expected``.

    Values seen often enough keep their own column.  The rest are hashed into
    buckets sized for the threshold; undersized buckets are merged.  Hashing
    is fixed, so identical distributions stay identical after pooling.
    """
    na, nb = sum(a.values()), sum(b.values())
    n = na + nb
    # expected count of a cell is column_total * row_total / n
    need = min_expected * n / min(na, nb)
    columns: list[list[int]] = []
    rare_a, rare_b = Counter(), Counter()
    for key in sorted(set(a) | set(b)):
        if a[key] + b[key] >= need:
            columns.append([a[key], b[key]])
        else:
            rare_a[key] = a[key]
            rare_b[key] = b[key]
    rare_total = sum(rare_a.values()) + sum(rare_b.values())
    buckets = max(1, int(rare_total // (2 * need)))
    pooled = [[0, 0] for _ in range(buckets)]
    for key in set(rare_a) | set(rare_b):
        col = pooled[_bucket(key, buckets)]
        col[0] += rare_a[key]
        col[1] += rare_b[key]
    leftover = [0, 0]
    for col in pooled:
        if sum(col) >= need:
            columns.append(col)
        else:
            leftover[0] += col[0]
            leftover[1] += col[1]
    if sum(leftover):
        if sum(leftover) >= need or not columns:
            columns.append(leftover)
        else:
            smallest = min(columns, key=sum)
            smallest[0] += leftover[0]
            smallest[1] += leftover[1]
    return [[c[0] for c in columns], [c[1] for c in columns]]


def sampled_distributions(
    scheme: AuditScheme, trials: int, seed: int = 0
) -> list[list[QueryDistribution]]:
    dists = [[QueryDistribution() for _ in range(scheme.N)] for _ in range(scheme.K)]
    for theta in range(1, scheme.K + 1):
        rng = stream(seed, f"privacy:{theta}")
        row = dists[theta - 1]
        for _ in range(trials):
            for n, view in enumerate(scheme.database_views(theta, scheme.sample(rng))):
                row[n].add(view)
    return dists


def privacy_audit_sampled_all(
    scheme: AuditScheme,
    trials: int = DEFAULT_TRIALS,
    significance: float = DEFAULT_SIGNIFICANCE,
    seed: int = 0,
) -> list[PrivacyResult]:
    """Pairwise chi-square tests per database, Bonferroni-corrected.

    The threshold is ``significance`` divided by the number of (theta pair,
    database) tests.
    """
    dists = sampled_distributions(scheme, trials, seed)
    pairs = list(itertools.combinations(range(scheme.K), 2))
    alpha_level = significance / max(1, len(pairs) * scheme.N)
    results = []
    for n in range(scheme.N):
        result = PrivacyResult(n + 1, PrivacyVerdict.STATISTICALLY_CONSISTENT)
        worst = 1.0
        for ta, tb in pairs:
            a, b = dists[ta][n].support, dists[tb][n].support
            table = pooled_table(a, b)
            if len(table[0]) < 2:
                # degenerate: a single category, so compare what was observed
                if set(a) != set(b):
                    result = PrivacyResult(n + 1, PrivacyVerdict.VIOLATION, _witness(a, b, ta, tb))
                    break
                continue
            p = float(chi2_contingency(table, correction=False).pvalue)
            worst = min(worst, p)
            if p < alpha_level:
                result = PrivacyResult(n + 1, PrivacyVerdict.VIOLATION, _witness(a, b, ta, tb), p)
                break
        if result.verdict != PrivacyVerdict.VIOLATION and pairs:
            result.p_value = worst
        results.append(result)
    return results


def privacy_audit_sampled(
    scheme: AuditScheme | SchemeParams,
    database: int,
    trials: int = DEFAULT_TRIALS,
    significance: float = DEFAULT_SIGNIFICANCE,
    seed: int = 0,
) -> PrivacyResult:
    if isinstance(scheme, SchemeParams):
        scheme = scheme_for(scheme)
    return privacy_audit_sampled_all(scheme, trials, significance, seed)[database - 1]


def _witness(a: Counter, b: Counter, ta: int, tb: int) -> dict:
    key = max(sorted(set(a) | set(b)), key=lambda k: abs(a[k] - b[k]))
    return {
        "query_hex": key.hex(),
        "theta_a": ta + 1,
        "count_a": a[key],
        "theta_b": tb + 1,
        "count_b": b[key],
    }


# -- correctness ------------------------------------------------------------


@dataclass
class CorrectnessResult:
    passed: bool
    trials: int
    mode: str
    counterexample: dict | None = None

    def to_json(self) -> dict:
        doc = {"passed": self.passed, "trials": self.trials, "mode": self.mode}
        if self.counterexample is not None:
            doc["counterexample"] = self.counterexample
        return doc


def _all_stores(K: int, L: int, M: int) -> Iterator[MessageStore]:
    for flat in itertools.product(range(M), repeat=K * L):
        yield MessageStore.from_lists([flat[k * L : (k + 1) * L] for k in range(K)], M)


def correctness_audit(
    params: SchemeParams,
    trials: int = 1000,
    exhaustive: bool = False,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> CorrectnessResult:
    """Decode and compare with the stored message, randomly or over everything.

    Exhaustive mode covers every store, every theta and every randomness
    outcome, and only applies to matched alphabets.
    """
    if exhaustive:
        if not params.matched:
            raise ParameterError("exhaustive correctness needs a matched alphabet")
        scheme = scheme_for(params)
        size = params.M ** (params.K * params.L) * params.K * scheme.space_size()
        if size > budget:
            raise BudgetExceeded(f"{size} correctness cases exceed budget {budget}")
        target = optimal_download_cost(params.N, params.K, params.L)
        outcomes = list(scheme.outcomes())
        count = 0
        for store in _all_stores(params.K, params.L, params.M):
            for theta in range(1, params.K + 1):
                for rnd in outcomes:
                    t = execute(params, theta, store, scheme.segments, rnd, target)
                    count += 1
                    if t.decoded != store.message(theta):
                        return CorrectnessResult(False, count, "exhaustive",
                                                 _counterexample(store, theta, t.decoded))
        return CorrectnessResult(True, count, "exhaustive")

    rng = stream(seed, "correctness")
    for i in range(trials):
        store = MessageStore.random(params.K, params.L, params.M, rng)
        theta = i % params.K + 1
        t = run_protocol(params, theta, store, seed=rng.getrandbits(63))
        if t.decoded != store.message(theta):
            return CorrectnessResult(False, i + 1, "sampled", _counterexample(store, theta, t.decoded))
    return CorrectnessResult(True, trials, "sampled")


def _counterexample(store: MessageStore, theta: int, decoded) -> dict:
    return {
        "theta": theta,
        "store": [list(r) for r in store.rows()],
        "decoded": list(decoded),
    }


# -- structure of the capacity-scheme plans ---------------------------------


@dataclass
class StructureResult:
    N: int
    K: int
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"N": self.N, "K": self.K, "passed": self.passed, "failures": self.failures}


def _shape(qs) -> Counter:
    return Counter((e.block, e.ksum.type) for e in qs)


def structure_audit(N: int, K: int) -> StructureResult:
    """Check every structural property of the plans, for every theta."""
    if N < 2:
        raise ParameterError("structure audit needs N >= 2")
    res = StructureResult(N, K)
    fail = res.failures.append
    L = N ** (K - 1)
    profile = count_profile(N, K)
    shapes = None
    for theta in range(1, K + 1):
        plan = q_gen(SchemeParams(N, K, L), theta)
        desired: list[int] = []
        for db, qs in enumerate(plan.per_database, start=1):
            symbols = qs.symbols()
            if len(set(symbols)) != len(symbols):
                fail(f"theta={theta} DB{db}: a virtual symbol is reused")
            for e in qs:
                if e.ksum.k != e.block:
                    fail(f"theta={theta} DB{db}: {e.ksum} sits in block {e.block}")
                has_theta = theta in e.ksum.type
                if has_theta != (e.partition == "M"):
                    fail(f"theta={theta} DB{db}: {e.ksum} in partition {e.partition}")
                if has_theta:
                    desired.append(e.ksum.position_of(theta))
            for k in range(1, K + 1):
                block = qs.block(k)
                for t in itertools.combinations(range(1, K + 1), k):
                    c = count_type(block, t)
                    if c != profile.v(db, k):
                        fail(f"theta={theta} DB{db} block {k} type {t}: {c} != v={profile.v(db, k)}")
            for i in range(1, K + 1):
                positions = {s.position for s in symbols if s.message == i}
                if len(positions) != profile.symbols_per_message(db):
                    fail(f"theta={theta} DB{db}: {len(positions)} symbols of message {i}, "
                         f"expected {profile.symbols_per_message(db)}")
            _check_side_info(plan, theta, db, qs, fail)
        if sorted(desired) != list(range(1, L + 1)):
            fail(f"theta={theta}: desired positions {sorted(desired)} do not cover 1..{L}")
        total = sum(len(qs) for qs in plan.per_database)
        if total != optimal_download_cost(N, K, L):
            fail(f"theta={theta}: {total} sums, optimum is {optimal_download_cost(N, K, L)}")
        shape = [_shape_by_count(qs) for qs in plan.per_database]
        if shapes is None:
            shapes = shape
        elif shape != shapes:
            fail(f"theta={theta}: per-database shape differs from theta=1")
    return res


def _shape_by_count(qs) -> Counter:
    # multiset of (block, k, count) with types anonymized
    per_type = _shape(qs)
    return Counter((b, len(t), c) for (b, t), c in per_type.items())


def _check_side_info(plan, theta, db, qs, fail) -> None:
    for e in qs:
        if theta not in e.ksum.type or e.block == 1:
            continue
        residual = e.ksum.without(theta)
        found = any(
            residual in other.block(e.block - 1)
            for n, other in enumerate(plan.per_database, start=1)
            if n != db
        )
        if not found:
            fail(f"theta={theta} DB{db}: residual {residual} of {e.ksum} not held elsewhere")


# -- full report ------------------------------------------------------------


@dataclass
class CostResult:
    achieved: int
    optimal: int | None = None
    lower_bound: int | None = None
    achievable: int | None = None

    @property
    def passed(self) -> bool:
        if self.optimal is not None:
            return self.achieved == self.optimal
        return self.achieved == self.achievable

    def to_json(self) -> dict:
        doc = {"achieved": self.achieved, "passed": self.passed}
        for name in ("optimal", "lower_bound", "achievable"):
            if getattr(self, name) is not None:
                doc[name] = getattr(self, name)
        return doc


@dataclass
class AuditReport:
    params: SchemeParams
    mode: str
    privacy: list[PrivacyResult]
    correctness: CorrectnessResult
    cost: CostResult
    structure: StructureResult | None = None
    scheme: str = "composite"
    config: dict = field(default_factory=dict)

    @property
    def privacy_ok(self) -> bool:
        return all(r.verdict != PrivacyVerdict.VIOLATION for r in self.privacy)

    @property
    def passed(self) -> bool:
        ok = self.privacy_ok and self.correctness.passed and self.cost.passed
        return ok and (self.structure is None or self.structure.passed)

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "params": self.params.to_dict(),
            "scheme": self.scheme,
            "mode": self.mode,
            "privacy": [r.to_json() for r in self.privacy],
            "correctness": self.correctness.to_json(),
            "cost": self.cost.to_json(),
            "structure": None if self.structure is None else self.structure.to_json(),
            "passed": self.passed,
        }


def cost_check(params: SchemeParams, seed: int = 0) -> CostResult:
    rng = stream(seed, "cost")
    store = MessageStore.random(params.K, params.L, params.M, rng)
    t = run_protocol(params, 1, store, seed)
    if params.matched:
        return CostResult(t.total_download, optimal=optimal_download_cost(params.N, params.K, params.L))
    return CostResult(t.total_download, lower_bound=t.lower_bound, achievable=t.target_cost)


def run_audit(
    params: SchemeParams,
    budget: int = DEFAULT_BUDGET,
    trials: int = DEFAULT_TRIALS,
    correctness_trials: int = 1000,
    seed: int = 0,
    negative: bool = False,
    significance: float = DEFAULT_SIGNIFICANCE,
    workers: int = 1,
) -> AuditReport:
    """Structure, correctness, cost and privacy; exhaustive where the budget allows."""
    scheme = scheme_for(params)
    if negative:
        scheme = negative_control(scheme)
    structure = structure_audit(params.N, params.K) if params.N >= 2 else None

    if scheme.space_size() <= budget:
        mode = "exhaustive"
        privacy = privacy_audit_exhaustive_all(scheme, budget, workers)
    else:
        mode = "sampled"
        privacy = privacy_audit_sampled_all(scheme, trials, significance, seed)

    try:
        correctness = correctness_audit(params, exhaustive=True, budget=budget)
    except (BudgetExceeded, ParameterError):
        correctness = correctness_audit(params, trials=correctness_trials, seed=seed)

    return AuditReport(
        params=params,
        mode=mode,
        privacy=privacy,
        correctness=correctness,
        cost=cost_check(params, seed),
        structure=structure,
        scheme=scheme.name,
    )


def expected_entries(N: int, K: int) -> int:
    """Sums requested across all databases by one capacity-scheme run."""
    p = count_profile(N, K)
    return sum(p.v(db, k) * comb(K, k) for db in range(1, N + 1) for k in range(1, K + 1))
