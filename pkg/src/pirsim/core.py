"""Shared data model and the closed-form capacity / cost formulas.

Indices follow the 1-based convention used throughout the scheme
description: messages are ``1..K``, message positions ``1..L``, databases
``1..N``.  Only the wire format (``pirsim.sim.wire``) is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterator, NamedTuple, Sequence

from pirsim.errors import ParameterError


def _check_positive(**values: int) -> None:
    for name, value in values.items():
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ParameterError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class SchemeParams:
    """Public parameters of one PIR instance.

    ``Mprime`` is the download alphabet; it defaults to the message
    alphabet ``M`` (the matched case).
    """

    N: int
    K: int
    L: int
    M: int = 2
    Mprime: int | None = None

    def __post_init__(self) -> None:
        if self.Mprime is None:
            object.__setattr__(self, "Mprime", self.M)
        _check_positive(N=self.N, K=self.K, L=self.L)
        for name in ("M", "Mprime"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 2:
                raise ParameterError(f"{name} must be an integer >= 2, got {value!r}")

    @property
    def matched(self) -> bool:
        return self.M == self.Mprime

    def with_length(self, L: int, alphabet: int | None = None) -> "SchemeParams":
        """Same databases and messages, different length (and optionally alphabet)."""
        a = self.M if alphabet is None else alphabet
        b = self.Mprime if alphabet is None else alphabet
        return SchemeParams(self.N, self.K, L, a, b)

    def to_dict(self) -> dict:
        return {"N": self.N, "K": self.K, "L": self.L, "M": self.M, "Mprime": self.Mprime}


@dataclass(frozen=True)
class Message:
    symbols: tuple[int, ...]
    alphabet: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if not self.symbols:
            raise ParameterError("a message needs at least one symbol")
        for s in self.symbols:
            if not 0 <= s < self.alphabet:
                raise ParameterError(f"symbol {s} outside [0, {self.alphabet - 1}]")

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class MessageStore:
    """The K messages held (identically) by every database."""

    messages: tuple[Message, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ParameterError("a store needs at least one message")
        lengths = {len(m) for m in self.messages}
        alphabets = {m.alphabet for m in self.messages}
        if len(lengths) != 1:
            raise ParameterError(f"messages have unequal lengths {sorted(lengths)}")
        if len(alphabets) != 1:
            raise ParameterError("messages use different alphabets")

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]], alphabet: int) -> "MessageStore":
        return cls(tuple(Message(tuple(r), alphabet) for r in rows))

    @classmethod
    def random(cls, K: int, L: int, alphabet: int, rng) -> "MessageStore":
        """Uniform store drawn from a ``random.Random``."""
        return cls.from_lists(
            [[rng.randrange(alphabet) for _ in range(L)] for _ in range(K)], alphabet
        )

    @property
    def K(self) -> int:
        return len(self.messages)

    @property
    def L(self) -> int:
        return len(self.messages[0])

    @property
    def alphabet(self) -> int:
        return self.messages[0].alphabet

    def rows(self) -> list[tuple[int, ...]]:
        return [m.symbols for m in self.messages]

    def message(self, k: int) -> tuple[int, ...]:
        """Symbols of message ``k`` (1-based)."""
        return self.messages[k - 1].symbols

    def check(self, params: SchemeParams) -> None:
        if (self.K, self.L, self.alphabet) != (params.K, params.L, params.M):
            raise ParameterError(
                f"store shape K={self.K}, L={self.L}, M={self.alphabet} does not match "
                f"params K={params.K}, L={params.L}, M={params.M}"
            )


class VirtualSymbol(NamedTuple):
    """Placeholder ``U_k(j)``: position ``j`` of message ``k`` before permutation."""

    message: int
    position: int


@dataclass(frozen=True, order=False)
class KSum:
    """Sum of virtual symbols drawn from pairwise-distinct messages.

    Terms are stored sorted by message index, so equal sums compare equal.
    """

    terms: tuple[VirtualSymbol, ...]

    def __post_init__(self) -> None:
        terms = tuple(sorted(VirtualSymbol(*t) for t in self.terms))
        if not terms:
            raise ParameterError("a k-sum needs at least one term")
        messages = [t.message for t in terms]
        if len(set(messages)) != len(messages):
            raise ParameterError(f"k-sum terms must come from distinct messages: {terms}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, *pairs: tuple[int, int]) -> "KSum":
        return cls(tuple(VirtualSymbol(k, j) for k, j in pairs))

    @property
    def k(self) -> int:
        return len(self.terms)

    @property
    def type(self) -> tuple[int, ...]:
        return tuple(t.message for t in self.terms)

    def position_of(self, message: int) -> int | None:
        for t in self.terms:
            if t.message == message:
                return t.position
        return None

    def without(self, message: int) -> "KSum":
        return KSum(tuple(t for t in self.terms if t.message != message))

    def plus(self, symbol: VirtualSymbol) -> "KSum":
        return KSum(self.terms + (symbol,))

    def sort_key(self) -> tuple:
        # by k, then type, then position of the smallest-index term
        return (self.k, self.type, self.terms[0].position)

    def __str__(self) -> str:
        return " + ".join(f"U{t.message}({t.position})" for t in self.terms)


class QueryEntry(NamedTuple):
    ksum: KSum
    block: int
    partition: str  # "I" (no desired symbol) or "M" (contains the desired symbol)


@dataclass(frozen=True)
class QuerySet:
    """All k-sums assigned to one database, tagged with block and partition."""

    entries: tuple[QueryEntry, ...] = ()

    def __iter__(self) -> Iterator[QueryEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def ksums(self) -> list[KSum]:
        return [e.ksum for e in self.entries]

    def block(self, b: int, partition: str | None = None) -> list[KSum]:
        return [
            e.ksum
            for e in self.entries
            if e.block == b and (partition is None or e.partition == partition)
        ]

    def block_of(self, ksum: KSum) -> int:
        for e in self.entries:
            if e.ksum == ksum:
                return e.block
        raise KeyError(ksum)

    def partition_of(self, ksum: KSum) -> str:
        for e in self.entries:
            if e.ksum == ksum:
                return e.partition
        raise KeyError(ksum)

    def symbols(self) -> list[VirtualSymbol]:
        return [t for e in self.entries for t in e.ksum.terms]


def count_type(ksums, type_: tuple[int, ...]) -> int:
    """Number of k-sums in ``ksums`` whose type is ``type_``."""
    return sum(1 for q in ksums if q.type == type_)


@dataclass(frozen=True)
class CountProfile:
    """``v(DB, k)``: instances of every k-sum type in block k of database DB."""

    N: int
    K: int
    table: tuple[tuple[int, ...], ...] = field(repr=False)

    def v(self, db: int, k: int) -> int:
        return self.table[db - 1][k - 1]

    def row(self, db: int) -> tuple[int, ...]:
        return self.table[db - 1]

    def symbols_per_message(self, db: int) -> int:
        """Distinct positions of each message touched by database ``db``."""
        return sum(self.v(db, k) * comb(self.K - 1, k - 1) for k in range(1, self.K + 1))

    def entries(self, db: int) -> int:
        """Number of sums (= answer symbols) requested from database ``db``."""
        return sum(self.v(db, k) * comb(self.K, k) for k in range(1, self.K + 1))


def capacity(N: int, K: int) -> Fraction:
    """Exact PIR capacity ``(1 + 1/N + ... + 1/N^(K-1))^-1``."""
    _check_positive(N=N, K=K)
    return 1 / sum(Fraction(1, N**i) for i in range(K))


def _cost_ratio(N: int, K: int) -> tuple[int, int]:
    """1/C as an integer pair (numerator, denominator), not necessarily reduced."""
    # 1/C = (1 + N + ... + N^(K-1)) / N^(K-1)
    return sum(N**i for i in range(K)), N ** (K - 1)


def optimal_download_cost(N: int, K: int, L: int) -> int:
    """Optimal matched-alphabet download ``ceil(L / C)``, in exact arithmetic."""
    _check_positive(N=N, K=K, L=L)
    if N == 1:
        return K * L
    num, den = _cost_ratio(N, K)
    return -(-L * num // den)


@lru_cache(maxsize=256)
def count_profile(N: int, K: int) -> CountProfile:
    """Solve the block-count recursion for every database and block."""
    _check_positive(N=N, K=K)
    if N < 2:
        raise ParameterError("count profile needs N >= 2; N = 1 uses the full-download scheme")
    cols = [[1] + [0] * (N - 1)]
    for _ in range(2, K + 1):
        prev = cols[-1]
        total = sum(prev)
        cols.append([total - prev[db] for db in range(N)])
    table = tuple(tuple(cols[k][db] for k in range(K)) for db in range(N))
    return CountProfile(N, K, table)


def shortest_capacity_length(N: int, K: int) -> int:
    """Shortest message length whose optimal rate equals capacity: ``N^(K-1)``."""
    _check_positive(N=N, K=K)
    if N < 2:
        raise ParameterError("shortest capacity length is defined for N >= 2")
    return N ** (K - 1)


def attains_capacity(N: int, K: int, L: int) -> bool:
    """True iff ``L / C`` is an integer, i.e. the optimal rate equals capacity."""
    _check_positive(N=N, K=K, L=L)
    num, den = _cost_ratio(N, K)
    return (L * num) % den == 0
