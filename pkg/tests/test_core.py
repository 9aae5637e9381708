import math
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from pirsim.core import (
    KSum,
    MessageStore,
    SchemeParams,
    VirtualSymbol,
    attains_capacity,
    capacity,
    count_profile,
    optimal_download_cost,
    shortest_capacity_length,
)
from pirsim.errors import ParameterError

small_n = st.integers(min_value=2, max_value=6)
small_k = st.integers(min_value=1, max_value=5)
lengths = st.integers(min_value=1, max_value=500)


def brute_optimal(N, K, L):
    # smallest integer D with D >= L / C
    ratio = sum(Fraction(1, N**i) for i in range(K))
    D = 0
    while D < L * ratio:
        D += 1
    return D


@pytest.mark.parametrize(
    "N,K,expected",
    [(2, 2, Fraction(2, 3)), (3, 3, Fraction(9, 13)), (1, 5, Fraction(1, 5)), (2, 1, Fraction(1))],
)
def test_capacity_values(N, K, expected):
    assert capacity(N, K) == expected


@given(small_n, small_k)
def test_capacity_matches_float_geometric_series(N, K):
    assert math.isclose(float(capacity(N, K)), (1 - 1 / N) / (1 - N ** -K), rel_tol=1e-12)


@pytest.mark.parametrize(
    "N,K,L,D", [(2, 2, 2, 3), (3, 3, 16, 24), (2, 2, 3, 5), (2, 3, 4, 7), (3, 3, 9, 13)]
)
def test_optimal_download_cost_examples(N, K, L, D):
    assert optimal_download_cost(N, K, L) == D


@given(small_n, small_k, st.integers(min_value=1, max_value=60))
def test_optimal_cost_matches_brute_force(N, K, L):
    assert optimal_download_cost(N, K, L) == brute_optimal(N, K, L)


@given(st.integers(1, 5), st.integers(1, 40))
def test_single_database_downloads_everything(K, L):
    assert optimal_download_cost(1, K, L) == K * L


@given(small_n, small_k, lengths)
def test_cost_bounds_and_periodicity(N, K, L):
    D = optimal_download_cost(N, K, L)
    assert D * capacity(N, K) >= L
    assert (D - 1) * capacity(N, K) < L
    group = N ** (K - 1)
    assert optimal_download_cost(N, K, L + group) == D + sum(N**i for i in range(K))


@given(small_n, small_k, lengths)
def test_capacity_attained_exactly_on_multiples(N, K, L):
    # 1 + N + ... + N^(K-1) is coprime to N
    assert attains_capacity(N, K, L) == (L % N ** (K - 1) == 0)


def test_attains_capacity_examples():
    assert attains_capacity(2, 2, 2)
    assert not attains_capacity(2, 2, 1)
    assert not attains_capacity(3, 3, 16)


@pytest.mark.parametrize("N,K,L", [(2, 3, 4), (3, 3, 9), (4, 2, 4), (5, 1, 1)])
def test_shortest_capacity_length(N, K, L):
    assert shortest_capacity_length(N, K) == L


def test_shortest_capacity_length_rejects_single_database():
    with pytest.raises(ParameterError):
        shortest_capacity_length(1, 3)


def test_count_profile_examples():
    p = count_profile(3, 3)
    assert p.row(1) == (1, 0, 2)
    assert p.row(2) == p.row(3) == (0, 1, 1)
    p = count_profile(2, 2)
    assert p.row(1) == (1, 0)
    assert p.row(2) == (0, 1)


@given(small_n, small_k)
def test_count_profile_symbol_identity(N, K):
    p = count_profile(N, K)
    total = sum(p.v(db, k) * comb(K - 1, k - 1) for db in range(1, N + 1) for k in range(1, K + 1))
    assert total == N ** (K - 1)


@given(small_n, small_k)
def test_count_profile_recursion_and_cost(N, K):
    p = count_profile(N, K)
    for k in range(2, K + 1):
        for db in range(1, N + 1):
            assert p.v(db, k) == sum(p.v(o, k - 1) for o in range(1, N + 1) if o != db)
    entries = sum(p.entries(db) for db in range(1, N + 1))
    assert entries == optimal_download_cost(N, K, N ** (K - 1))


@pytest.mark.parametrize(
    "kwargs",
    [dict(N=0, K=1, L=1), dict(N=2, K=0, L=1), dict(N=2, K=2, L=0), dict(N=2, K=2, L=2, M=1),
     dict(N=2, K=2, L=2, Mprime=1), dict(N=2.0, K=2, L=2), dict(N=True, K=2, L=2)],
)
def test_scheme_params_validation(kwargs):
    with pytest.raises(ParameterError):
        SchemeParams(**kwargs)


def test_scheme_params_defaults_to_matched():
    p = SchemeParams(2, 2, 3, M=5)
    assert p.Mprime == 5 and p.matched
    assert not SchemeParams(2, 2, 3, M=9, Mprime=3).matched


def test_ksum_is_canonical_and_rejects_repeated_messages():
    assert KSum.of((2, 1), (1, 2)) == KSum.of((1, 2), (2, 1))
    assert KSum.of((2, 1), (1, 2)).type == (1, 2)
    with pytest.raises(ParameterError):
        KSum.of((1, 1), (1, 2))
    s = KSum.of((1, 4), (2, 2), (3, 2))
    assert s.without(1) == KSum.of((2, 2), (3, 2))
    assert s.position_of(1) == 4 and s.position_of(4) is None
    assert KSum.of((2, 2)).plus(VirtualSymbol(1, 3)) == KSum.of((1, 3), (2, 2))


def test_message_store_shape_checks():
    store = MessageStore.from_lists([[1, 2], [3, 4]], 5)
    assert (store.K, store.L, store.alphabet) == (2, 2, 5)
    assert store.message(2) == (3, 4)
    store.check(SchemeParams(2, 2, 2, 5))
    with pytest.raises(ParameterError):
        store.check(SchemeParams(2, 2, 3, 5))
    with pytest.raises(ParameterError):
        MessageStore.from_lists([[1, 2], [3]], 5)
    with pytest.raises(ParameterError):
        MessageStore.from_lists([[5]], 5)
