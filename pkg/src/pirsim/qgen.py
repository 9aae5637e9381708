"""Capacity-achieving query generation for messages of length ``N^(K-1)``.

The deterministic part builds symbolic query sets over virtual symbols
``U_k(j)`` by alternating two steps: message symmetrization (``m_sym``) and
side-information exploitation (``exploit_si``).  The random part maps the
virtual symbols to real message positions through K private uniform
permutations (``realize``).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from math import factorial
from typing import Iterable, Iterator, Sequence

from pirsim.core import (
    KSum,
    QueryEntry,
    QuerySet,
    SchemeParams,
    VirtualSymbol,
    count_type,
)
from pirsim.errors import BudgetExceeded, CursorExhausted, ParameterError

DEFAULT_ENUMERATION_BUDGET = 10**6


class FreshSymbolCursor:
    """Hands out ``U_k(1), U_k(2), ...`` in order, independently per message.

    One cursor belongs to exactly one ``q_gen`` run.
    """

    def __init__(self, K: int, limit: int):
        self.K = K
        self.limit = limit
        self.next_index = {k: 1 for k in range(1, K + 1)}

    def new(self, k: int) -> VirtualSymbol:
        j = self.next_index[k]
        if j > self.limit:
            raise CursorExhausted(f"message {k} has only {self.limit} virtual symbols")
        self.next_index[k] = j + 1
        return VirtualSymbol(k, j)


def ordered(ksums: Iterable[KSum]) -> list[KSum]:
    """Canonical access order: by k, then type, then smallest-index position."""
    return sorted(ksums, key=KSum.sort_key)


def m_sym(Q: Sequence[KSum], cursor: FreshSymbolCursor) -> list[KSum]:
    """Return the extra k-sums that make ``Q`` message symmetric.

    For every k, each type in ``T_k`` is topped up with fresh symbols until it
    occurs as often as the most frequent k-sum type already in ``Q``.
    """
    K = cursor.K
    out: list[KSum] = []
    for k in range(1, K + 1):
        types = list(itertools.combinations(range(1, K + 1), k))
        counts = {t: count_type(Q, t) for t in types}
        most = max(counts.values())
        for t in types:
            for _ in range(most - counts[t]):
                out.append(KSum(tuple(cursor.new(i) for i in t)))
    return out


def exploit_si(
    side_info: Sequence[Sequence[KSum]], theta: int, cursor: FreshSymbolCursor
) -> list[list[KSum]]:
    """Pair every side-information sum held by other databases with a new desired symbol.

    Output ``n`` collects ``new(U_theta) + q`` for each ``q`` of every other
    database, visiting databases in increasing order and each one's sums in
    canonical order.
    """
    for q in itertools.chain.from_iterable(side_info):
        if theta in q.type:
            raise ParameterError(f"side information {q} already contains message {theta}")
    N = len(side_info)
    out: list[list[KSum]] = [[] for _ in range(N)]
    for n in range(N):
        for other in range(N):
            if other == n:
                continue
            for q in ordered(side_info[other]):
                out[n].append(q.plus(cursor.new(theta)))
    return out


@dataclass(frozen=True)
class QueryPlan:
    """Symbolic queries ``Q(DB, theta)`` for all N databases."""

    per_database: tuple[QuerySet, ...]
    theta: int
    params: SchemeParams

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def K(self) -> int:
        return self.params.K

    @cached_property
    def raw(self) -> tuple[tuple[tuple[tuple[int, int], ...], ...], ...]:
        """Per database, each entry as a tuple of plain ``(k, j)`` pairs."""
        return tuple(
            tuple(tuple((t.message, t.position) for t in e.ksum.terms) for e in qs)
            for qs in self.per_database
        )

    @cached_property
    def peel_schedule(self) -> tuple[tuple[int, int, int, int | None, int | None], ...]:
        """How each desired symbol is recovered.

        One row per ``U_theta(j)``: ``(j, db, entry, side_db, side_entry)``,
        0-based database/entry indices.  ``side_db`` is ``None`` for symbols
        downloaded without interference.
        """
        where: dict[KSum, tuple[int, int]] = {}
        for db, qs in enumerate(self.per_database):
            for idx, e in enumerate(qs.entries):
                if e.partition == "I":
                    where[e.ksum] = (db, idx)
        rows = []
        for db, qs in enumerate(self.per_database):
            for idx, e in enumerate(qs.entries):
                j = e.ksum.position_of(self.theta)
                if j is None:
                    continue
                if e.ksum.k == 1:
                    rows.append((j, db, idx, None, None))
                    continue
                residual = e.ksum.without(self.theta)
                side = where.get(residual)
                if side is None or side[0] == db:
                    raise AssertionError(f"no side information for {e.ksum} at database {db + 1}")
                rows.append((j, db, idx) + side)
        rows.sort()
        return tuple(rows)


def q_gen(params: SchemeParams, theta: int) -> QueryPlan:
    """Deterministic query sets for ``L = N^(K-1)``; cached per ``(N, K, theta)``."""
    N, K, L = params.N, params.K, params.L
    if N < 2:
        raise ParameterError("query generation needs N >= 2")
    if L != N ** (K - 1):
        raise ParameterError(f"query generation needs L = N^(K-1) = {N ** (K - 1)}, got L={L}")
    if not 1 <= theta <= K:
        raise ParameterError(f"theta must be in [1, {K}], got {theta}")
    return plan_for(N, K, theta)


@lru_cache(maxsize=256)
def plan_for(N: int, K: int, theta: int) -> QueryPlan:
    """Cached plan for already-validated ``N >= 2`` and ``theta``."""
    L = N ** (K - 1)
    cursor = FreshSymbolCursor(K, L)
    # blocks[db][b] = (M partition, I partition)
    blocks: list[dict[int, tuple[list[KSum], list[KSum]]]] = [{} for _ in range(N)]

    first = [KSum((cursor.new(theta),))]
    blocks[0][1] = (first, m_sym(first, cursor))
    for db in range(1, N):
        blocks[db][1] = ([], [])

    for b in range(2, K + 1):
        prev_side = [blocks[db][b - 1][1] for db in range(N)]
        desired = exploit_si(prev_side, theta, cursor)
        for db in range(N):
            blocks[db][b] = (desired[db], m_sym(desired[db], cursor))

    per_db = []
    for db in range(N):
        entries = []
        for b in range(1, K + 1):
            m_part, i_part = blocks[db][b]
            entries.extend(QueryEntry(q, b, "M") for q in m_part)
            entries.extend(QueryEntry(q, b, "I") for q in i_part)
        per_db.append(QuerySet(tuple(entries)))
    return QueryPlan(tuple(per_db), theta, SchemeParams(N, K, L))


@dataclass(frozen=True)
class PermutationMap:
    """``gamma[k-1][j-1]`` is the real position that ``U_k(j)`` maps to (1-based)."""

    gamma: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        gamma = tuple(tuple(g) for g in self.gamma)
        for g in gamma:
            if sorted(g) != list(range(1, len(g) + 1)):
                raise ParameterError(f"not a permutation of 1..{len(g)}: {g}")
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def identity(cls, K: int, L: int) -> "PermutationMap":
        return cls(tuple(tuple(range(1, L + 1)) for _ in range(K)))

    def __call__(self, k: int, j: int) -> int:
        return self.gamma[k - 1][j - 1]


def sample_permutations(N: int, K: int, rng: random.Random) -> PermutationMap:
    """K independent uniform permutations of ``1..N^(K-1)``."""
    L = N ** (K - 1)
    gamma = []
    for _ in range(K):
        g = list(range(1, L + 1))
        rng.shuffle(g)
        gamma.append(tuple(g))
    return PermutationMap(tuple(gamma))


def permutation_space_size(N: int, K: int) -> int:
    return factorial(N ** (K - 1)) ** K


def enumerate_permutations(
    N: int, K: int, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> Iterator[PermutationMap]:
    """Every permutation tuple exactly once, in lexicographic order."""
    size = permutation_space_size(N, K)
    if size > budget:
        raise BudgetExceeded(f"{size} permutation tuples exceed budget {budget}")
    perms = list(itertools.permutations(range(1, N ** (K - 1) + 1)))
    for combo in itertools.product(perms, repeat=K):
        yield PermutationMap(combo)


@dataclass(frozen=True)
class RealizedQuery:
    """Query actually sent to one database: sums of ``(k, position)`` pairs.

    Entries are in canonical order (term count, then sorted pairs), which is a
    function of the content alone.
    """

    entries: tuple[tuple[tuple[int, int], ...], ...] = field(default=())

    def __len__(self) -> int:
        return len(self.entries)


def canonical_entry_key(entry: tuple[tuple[int, int], ...]) -> tuple:
    return (len(entry), entry)


def realize_entries(
    raw_db: Sequence[tuple[tuple[int, int], ...]], gamma: Sequence[Sequence[int]]
) -> tuple[tuple[tuple[int, int], ...], ...]:
    # terms keep message order, so each realized entry is already canonical
    out = [tuple((k, gamma[k - 1][j - 1]) for k, j in entry) for entry in raw_db]
    out.sort(key=canonical_entry_key)
    return tuple(out)


def realize(plan: QueryPlan, perm: PermutationMap) -> list[RealizedQuery]:
    """Rewrite ``U_k(j)`` to position ``gamma_k(j)`` of message k, per database."""
    if len(perm.gamma) != plan.K or any(len(g) != plan.params.L for g in perm.gamma):
        raise ParameterError("permutation map does not match the plan's parameters")
    return [RealizedQuery(realize_entries(raw, perm.gamma)) for raw in plan.raw]
