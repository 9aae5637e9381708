import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from pirsim.composite import (
    composite_cost,
    decompose,
    plan_segments,
    sample_all,
)
from pirsim.core import MessageStore, SchemeParams, optimal_download_cost
from pirsim.errors import ParameterError
from pirsim.sim.protocol import run_protocol
from pirsim.sim.wire import SchemeKind
from pirsim.srk import coin_count, enumerate_coins, sample_coins, srk_answer, srk_decode, srk_queries


def test_srk_single_message_flip():
    assert srk_queries(2, 1, 1, (0,)) == [(0,), (1,)]


def test_srk_flip_positions_follow_database():
    q = srk_queries(3, 2, 2, (0, 0, 0, 0))
    assert q[0] == (0, 0, 0, 0)
    assert q[1] == (0, 0, 1, 0)
    assert q[2] == (0, 0, 0, 1)


def test_srk_rejects_bad_coins():
    with pytest.raises(ParameterError):
        srk_queries(3, 2, 1, (0, 1, 2, 0))
    with pytest.raises(ParameterError):
        srk_queries(3, 2, 1, (0, 1))
    with pytest.raises(ParameterError):
        srk_queries(1, 2, 1, ())


@pytest.mark.parametrize("N,K", [(2, 1), (2, 3), (3, 2), (4, 2)])
def test_each_srk_query_is_uniform_over_coins(N, K):
    for theta in range(1, K + 1):
        counts = [Counter() for _ in range(N)]
        for coins in enumerate_coins(N, K):
            for n, q in enumerate(srk_queries(N, K, theta, coins)):
                counts[n][q] += 1
        for c in counts:
            assert len(c) == 2 ** coin_count(N, K)
            assert set(c.values()) == {1}


def test_srk_answer_examples():
    seg = [[3], [4]]
    assert srk_answer((0, 0), seg, 5) == 0
    assert srk_answer((1, 0), seg, 5) == 3
    assert srk_answer((1, 1), seg, 5) == 2


def test_srk_decode_zero_coins():
    assert srk_decode([0, 5, 6], (0, 0, 0, 0), 1, 7) == [5, 6]


def test_srk_decode_negates_when_own_coin_set():
    # one message, one position, coin 1: A1 = 5, A2 = 0
    assert srk_decode([5, 0], (1,), 1, 7) == [5]


@given(
    st.integers(2, 5), st.integers(1, 4), st.sampled_from([2, 3, 256]), st.integers(0, 2**32), st.data()
)
def test_srk_round_trip(N, K, M, seed, data):
    rng = random.Random(seed)
    theta = data.draw(st.integers(1, K))
    segment = [[rng.randrange(M) for _ in range(N - 1)] for _ in range(K)]
    coins = sample_coins(N, K, rng)
    answers = [srk_answer(q, segment, M) for q in srk_queries(N, K, theta, coins)]
    assert srk_decode(answers, coins, theta, M) == segment[theta - 1]


def lengths(segments):
    return [(s.kind, s.length, s.databases) for s in segments]


def test_decomposition_examples():
    d = decompose(SchemeParams(3, 3, 16))
    assert (d.G1, d.G2, d.L2) == (1, 3, 1)
    C, S = SchemeKind.CAPACITY, SchemeKind.SRK
    assert lengths(d.segments) == [(C, 9, 3), (S, 2, 3), (S, 2, 3), (S, 2, 3), (S, 1, 2)]
    d = decompose(SchemeParams(2, 2, 3))
    assert (d.G1, d.G2, d.L2) == (1, 1, 0)
    d = decompose(SchemeParams(2, 2, 2))
    assert (d.G1, d.G2, d.L2) == (1, 0, 0)


def test_decomposition_rejects_single_database():
    with pytest.raises(ParameterError):
        decompose(SchemeParams(1, 2, 3))
    assert lengths(plan_segments(SchemeParams(1, 2, 3))) == [(SchemeKind.FULL, 3, 1)]


@pytest.mark.parametrize("N,K,L,D", [(3, 3, 16, 24), (2, 2, 3, 5), (2, 2, 2, 3)])
def test_composite_cost_examples(N, K, L, D):
    assert composite_cost(SchemeParams(N, K, L)) == D


@given(st.integers(2, 6), st.integers(1, 5), st.integers(1, 300))
def test_composite_cost_is_optimal(N, K, L):
    p = SchemeParams(N, K, L)
    d = decompose(p)
    assert sum(s.length for s in d.segments) == L
    assert [s.offset for s in d.segments] == [sum(x.length for x in d.segments[:i]) for i in range(len(d.segments))]
    assert composite_cost(p) == optimal_download_cost(N, K, L)


def test_segment_randomness_is_seeded():
    segs = plan_segments(SchemeParams(3, 3, 16))
    assert sample_all(segs, 3, 42) == sample_all(segs, 3, 42)
    assert sample_all(segs, 3, 42) != sample_all(segs, 3, 43)


@pytest.mark.parametrize("N,K,L,D", [(2, 2, 2, 3), (3, 3, 16, 24), (1, 3, 4, 12), (1, 2, 4, 8)])
def test_composite_runs(N, K, L, D):
    rng = random.Random(N * 100 + L)
    store = MessageStore.random(K, L, 256, rng)
    for theta in range(1, K + 1):
        t = run_protocol(SchemeParams(N, K, L, 256), theta, store, seed=theta)
        assert t.total_download == D
        assert t.decoded == store.message(theta)


def test_single_database_queries_ignore_theta():
    store = MessageStore.random(3, 4, 5, random.Random(0))
    p = SchemeParams(1, 3, 4, 5)
    views = {run_protocol(p, theta, store).query_bytes(0) for theta in (1, 2, 3)}
    assert len(views) == 1
