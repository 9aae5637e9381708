"""Mismatched message / download alphabets.

Messages of L base-M symbols are re-encoded as L' base-M' symbols, with L'
the least length satisfying ``M'^L' >= M^L``, and then retrieved with the
matched-alphabet scheme.  All logarithms are settled by comparing exact
integer powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

from pirsim.composite import plan_segments, sample_all
from pirsim.core import Message, MessageStore, SchemeParams, capacity, optimal_download_cost
from pirsim.errors import ParameterError
from pirsim.sim.engine import Transcript, execute


def transcoded_length(L: int, M: int, Mprime: int) -> int:
    """Least x with ``Mprime**x >= M**L``."""
    if L < 1 or M < 2 or Mprime < 2:
        raise ParameterError("need L >= 1, M >= 2, Mprime >= 2")
    target = M**L
    # float estimate, then settle exactly
    x = max(1, math.ceil(L * math.log(M) / math.log(Mprime)))
    while Mprime**x < target:
        x += 1
    while x > 1 and Mprime ** (x - 1) >= target:
        x -= 1
    return x


def transcode(message: Sequence[int], M: int, Mprime: int) -> list[int]:
    """Big-endian radix conversion, zero-padded to the transcoded length."""
    L = len(message)
    value = 0
    for s in message:
        if not 0 <= s < M:
            raise ParameterError(f"symbol {s} outside [0, {M - 1}]")
        value = value * M + s
    return _digits(value, Mprime, transcoded_length(L, M, Mprime))


def transcode_back(digits: Sequence[int], L: int, M: int, Mprime: int) -> list[int]:
    """Inverse of ``transcode``; rejects codewords outside the image."""
    if len(digits) != transcoded_length(L, M, Mprime):
        raise ParameterError(f"expected {transcoded_length(L, M, Mprime)} digits, got {len(digits)}")
    value = 0
    for d in digits:
        if not 0 <= d < Mprime:
            raise ParameterError(f"digit {d} outside [0, {Mprime - 1}]")
        value = value * Mprime + d
    if value >= M**L:
        raise ParameterError(f"value {value} is not the image of any length-{L} message")
    return _digits(value, M, L)


def _digits(value: int, base: int, width: int) -> list[int]:
    out = [0] * width
    for i in range(width - 1, -1, -1):
        value, out[i] = divmod(value, base)
    return out


def transcode_store(store: MessageStore, Mprime: int) -> MessageStore:
    M = store.alphabet
    return MessageStore(tuple(Message(tuple(transcode(r, M, Mprime)), Mprime) for r in store.rows()))


def exact_log(M: int, Mprime: int) -> Fraction | None:
    """``log_{Mprime} M`` as a fraction when it is rational, else None.

    It is rational exactly when both are powers of a common integer.
    """
    for base in range(2, min(M, Mprime) + 1):
        a = _power_of(M, base)
        b = _power_of(Mprime, base)
        if a and b:
            return Fraction(a, b)
    return None


def _power_of(x: int, base: int) -> int:
    e = 0
    while x % base == 0:
        x //= base
        e += 1
    return e if x == 1 else 0


@dataclass(frozen=True)
class TranscodedLength:
    """Cost window for a mismatched-alphabet instance.

    ``lower_bound_cost`` holds for every scheme; ``achieved_cost`` is what the
    transcoding scheme downloads.  They differ by at most 2.
    """

    Lprime: int
    lower_bound_cost: int
    achieved_cost: int

    @property
    def gap(self) -> int:
        return self.achieved_cost - self.lower_bound_cost

    @property
    def exactly_optimal(self) -> bool:
        return self.gap == 0

    def to_json(self) -> dict:
        return {
            "Lprime": self.Lprime,
            "lower_bound_cost": self.lower_bound_cost,
            "achieved_cost": self.achieved_cost,
            "exactly_optimal": self.exactly_optimal,
        }


def lower_bound_cost(N: int, K: int, L: int, M: int, Mprime: int) -> int:
    """Least d with ``d >= L log_{Mprime}(M) / C``.

    With ``C = p/q`` in lowest terms the condition is ``Mprime^(d p) >= M^(L q)``.
    """
    C = capacity(N, K)
    p, q = C.numerator, C.denominator
    rhs = M ** (L * q)
    d = max(1, math.ceil(L * q * math.log(M) / (p * math.log(Mprime))))
    while Mprime ** (d * p) < rhs:
        d += 1
    while d > 1 and Mprime ** ((d - 1) * p) >= rhs:
        d -= 1
    return d


def mismatched_cost_bounds(params: SchemeParams) -> TranscodedLength:
    N, K, L, M, Mp = params.N, params.K, params.L, params.M, params.Mprime
    if N < 2:
        raise ParameterError("cost window needs N >= 2; N = 1 downloads everything")
    Lp = transcoded_length(L, M, Mp)
    achieved = optimal_download_cost(N, K, Lp)
    lower = lower_bound_cost(N, K, L, M, Mp)
    if not 0 <= achieved - lower <= 2:
        raise AssertionError(f"cost window [{lower}, {achieved}] wider than 2")
    return TranscodedLength(Lp, lower, achieved)


def mismatched_run(
    params: SchemeParams, theta: int, store: MessageStore, seed=0, loopback=False
) -> Transcript:
    """Transcode, run the matched scheme over the download alphabet, transcode back."""
    store.check(params)
    Mp = params.Mprime
    Lp = transcoded_length(params.L, params.M, Mp)
    inner = SchemeParams(params.N, params.K, Lp, Mp, Mp)
    segments = plan_segments(inner)
    randomness = sample_all(segments, params.K, seed)
    if params.N == 1:
        target, lower = params.K * Lp, None
    else:
        bounds = mismatched_cost_bounds(params)
        target, lower = bounds.achieved_cost, bounds.lower_bound_cost
    t = execute(inner, theta, transcode_store(store, Mp), segments, randomness, target, lower, loopback)
    decoded = transcode_back(t.decoded, params.L, params.M, Mp)
    return replace(t, params=params, decoded=tuple(decoded), transcoded_length=Lp)
