"""Acceptance criteria, one test each.

Every test records a ``[PASS]``/``[FAIL]`` line; ``conftest.py`` prints them
at the end of the run.  A criterion passes only if its checks hold *and* it
finishes inside its runtime budget.
"""

import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

from pirsim.alphabet import (
    exact_log,
    mismatched_cost_bounds,
    transcode,
    transcode_back,
    transcoded_length,
)
from pirsim.audit import (
    PrivacyVerdict,
    capacity_scheme,
    negative_control,
    privacy_audit_exhaustive_all,
    scheme_for,
    srk_scheme,
    structure_audit,
)
from pirsim.composite import composite_cost
from pirsim.core import MessageStore, SchemeParams, capacity, optimal_download_cost
from pirsim.sim.protocol import run_protocol

RESULTS: list[str] = []


@contextmanager
def criterion(number: int, title: str, budget_s: float):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        in_time = elapsed < budget_s
        mark = "PASS" if ok and in_time else "FAIL"
        note = "" if in_time else " (over budget)"
        line = f"[{mark}] criterion {number}: {title} ({elapsed:.2f}s, budget {budget_s:g}s){note}"
        RESULTS.append(line)
        print(line)
    assert in_time, line


def test_criterion_1_cost_table():
    cases = [((2, 2, 2), 3), ((2, 3, 4), 7), ((3, 3, 9), 13), ((2, 2, 3), 5), ((3, 3, 16), 24)]
    with criterion(1, "cost table, closed form and measured transcripts", 1.0):
        for (N, K, L), D in cases:
            assert optimal_download_cost(N, K, L) == D
            store = MessageStore.random(K, L, 2, random.Random(L))
            t = run_protocol(SchemeParams(N, K, L, 2), 1, store, seed=1)
            assert t.total_download == D
            assert t.decoded == store.message(1)


def test_criterion_2_capacity_attainment():
    with criterion(2, "capacity attained at L = N^(K-1) and never below", 1.0):
        for N in range(2, 6):
            for K in range(1, 5):
                C = capacity(N, K)
                L = N ** (K - 1)
                store = MessageStore.from_lists([[0] * L] * K, 2)
                D = run_protocol(SchemeParams(N, K, L, 2), K, store).total_download
                assert D * C == L
                for shorter in range(1, L):
                    assert optimal_download_cost(N, K, shorter) > Fraction(shorter) / C


def all_exact(results):
    return all(r.verdict == PrivacyVerdict.EXACT_EQUAL for r in results)


def test_criterion_3_exhaustive_privacy():
    with criterion(3, "exhaustive privacy is exact", 30.0):
        for N, K, size in [(2, 2, 4), (2, 3, 13824)]:
            scheme = capacity_scheme(N, K)
            assert scheme.space_size() == size
            assert all_exact(privacy_audit_exhaustive_all(scheme))
        for N in range(2, 5):
            for K in range(1, 4):
                scheme = srk_scheme(N, K)
                assert scheme.space_size() == 2 ** ((N - 1) * K)
                assert all_exact(privacy_audit_exhaustive_all(scheme))
        composite = scheme_for(SchemeParams(2, 2, 3))
        assert composite.space_size() == 4 * 4
        assert all_exact(privacy_audit_exhaustive_all(composite))


def test_criterion_4_negative_controls():
    with criterion(4, "negative controls are caught with a witness", 1.0):
        for scheme in (negative_control(capacity_scheme(2, 2)), negative_control(srk_scheme(2, 2))):
            results = privacy_audit_exhaustive_all(scheme)
            bad = [r for r in results if r.verdict == PrivacyVerdict.VIOLATION]
            assert bad
            for r in bad:
                w = r.witness
                assert w["query_hex"] and w["count_a"] != w["count_b"]


def sweep_points():
    for N in range(1, 5):
        for K in range(1, 5):
            group = N ** (K - 1)
            for L in sorted({1, N - 1, group, group + 1, 16} - {0}):
                for M in (2, 3, 256):
                    yield N, K, L, M


def test_criterion_5_correctness_sweep():
    trials = 1000
    points = list(sweep_points())
    with criterion(5, f"correctness sweep, {len(points)} points x {trials} trials", 60.0):
        for N, K, L, M in points:
            params = SchemeParams(N, K, L, M)
            rng = random.Random(f"sweep:{N}:{K}:{L}:{M}")
            for i in range(trials):
                store = MessageStore.random(K, L, M, rng)
                theta = i % K + 1
                t = run_protocol(params, theta, store, seed=i)
                assert t.decoded == store.message(theta), (N, K, L, M, theta, i)
                assert t.total_download == optimal_download_cost(N, K, L)


def test_criterion_6_structure():
    with criterion(6, "structure audit over N in 2..4, K in 1..4", 5.0):
        for N in range(2, 5):
            for K in range(1, 5):
                res = structure_audit(N, K)
                assert res.passed, res.failures


def test_criterion_7_composite_closed_form():
    with criterion(7, "composite cost equals ceil(L/C)", 1.0):
        for N in range(2, 6):
            for K in range(1, 5):
                C = capacity(N, K)
                for L in range(1, 201):
                    # independent oracle: ceiling of the exact rational
                    assert composite_cost(SchemeParams(N, K, L)) == math.ceil(Fraction(L) / C)


def lower_bound_oracle(N, K, L, M, Mp):
    C = capacity(N, K)
    r = exact_log(M, Mp)
    if r is not None:
        return math.ceil(L * r / C)
    real = L * math.log(M) / math.log(Mp) / float(C)
    assert abs(real - round(real)) > 1e-9
    return math.ceil(real)


def test_criterion_8_mismatched_alphabet():
    sizes = (2, 3, 4, 8, 9, 16)
    with criterion(8, "mismatched alphabet window and rate-C examples", 5.0):
        for M in sizes:
            for Mp in sizes:
                for N in range(2, 5):
                    for K in (2, 3):
                        C = capacity(N, K)
                        for L in range(1, 51):
                            w = mismatched_cost_bounds(SchemeParams(N, K, L, M, Mp))
                            assert w.achieved_cost == math.ceil(Fraction(w.Lprime) / C)
                            assert w.lower_bound_cost == lower_bound_oracle(N, K, L, M, Mp)
                            assert w.lower_bound_cost <= w.achieved_cost <= w.lower_bound_cost + 2
        for M, Mp, Lp in [(9, 3, 6), (4, 8, 2)]:
            store = MessageStore.random(2, 3, M, random.Random(M))
            t = run_protocol(SchemeParams(2, 2, 3, M, Mp), 2, store)
            assert t.transcoded_length == Lp
            assert t.decoded == store.message(2)
            assert 3 * exact_log(M, Mp) / t.total_download == Fraction(2, 3) == capacity(2, 2)


def test_criterion_9_transcoding_round_trip():
    sizes = (2, 3, 4, 8, 9, 16, 256)
    rng = random.Random("transcode")
    with criterion(9, "transcoding round trip and minimal L'", 5.0):
        for _ in range(10**4):
            M, Mp = rng.choice(sizes), rng.choice(sizes)
            L = rng.randint(1, 50)
            w = [rng.randrange(M) for _ in range(L)]
            digits = transcode(w, M, Mp)
            assert transcode_back(digits, L, M, Mp) == w
            Lp = len(digits)
            assert Mp**Lp >= M**L
            assert Lp == 1 or Mp ** (Lp - 1) < M**L
            assert Lp == transcoded_length(L, M, Mp)
