"""Short-message scheme: length ``N - 1``, download ``N``.

The user draws a uniform {0,1} coefficient vector over every (message,
position) pair.  Database 1 receives the vector unchanged; database ``n + 1``
receives it with the coefficient of ``(theta, n)`` flipped.  Each database
answers with one coefficient-weighted sum modulo M, and the user recovers
``W_theta(n)`` from the difference between answers ``n + 1`` and 1.

Coefficient vectors are flat tuples ordered message-major: the bit for
``(k, i)`` sits at index ``(k - 1) * (N - 1) + (i - 1)``.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterator, Sequence

from pirsim.errors import ParameterError

CoinVector = tuple[int, ...]
SrkQuery = tuple[int, ...]


def _index(N: int, k: int, i: int) -> int:
    return (k - 1) * (N - 1) + (i - 1)


def coin_count(N: int, K: int) -> int:
    return (N - 1) * K


def sample_coins(N: int, K: int, rng: random.Random) -> CoinVector:
    n = coin_count(N, K)
    bits = rng.getrandbits(n)
    return tuple((bits >> i) & 1 for i in range(n))


def enumerate_coins(N: int, K: int) -> Iterator[CoinVector]:
    return itertools.product((0, 1), repeat=coin_count(N, K))


def srk_queries(N: int, K: int, theta: int, coins: Sequence[int]) -> list[SrkQuery]:
    if N < 2:
        raise ParameterError("the short-message scheme needs N >= 2")
    if not 1 <= theta <= K:
        raise ParameterError(f"theta must be in [1, {K}], got {theta}")
    coins = tuple(coins)
    if len(coins) != coin_count(N, K) or any(c not in (0, 1) for c in coins):
        raise ParameterError(f"expected {coin_count(N, K)} coin bits, got {coins}")
    queries = [coins]
    for n in range(1, N):
        q = list(coins)
        q[_index(N, theta, n)] ^= 1
        queries.append(tuple(q))
    return queries


def srk_answer(query: Sequence[int], segment: Sequence[Sequence[int]], M: int) -> int:
    """Coefficient-weighted sum of a ``K x (N-1)`` message segment, modulo M."""
    width = len(segment[0])
    total = 0
    for k, row in enumerate(segment):
        for i, symbol in enumerate(row):
            if query[k * width + i]:
                total += symbol
    return total % M


def srk_decode(answers: Sequence[int], coins: Sequence[int], theta: int, M: int) -> list[int]:
    """Recover the ``N - 1`` desired symbols from the N answers.

    ``A[n+1] - A[1] = W(n) * (1 - 2 h_theta(n))``, so the difference is negated
    when the user's own coin for that position was 1.
    """
    N = len(answers)
    base = answers[0]
    out = []
    for n in range(1, N):
        diff = answers[n] - base
        if coins[_index(N, theta, n)]:
            diff = -diff
        out.append(diff % M)
    return out
