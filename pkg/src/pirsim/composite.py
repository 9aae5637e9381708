"""Symbol sharing: split each message into independently retrieved segments.

Positions ``1..G1*N^(K-1)`` go to capacity-scheme groups, the next
``G2*(N-1)`` to short-message groups on all N databases, and a final
residual of ``L2 < N - 1`` symbols to a short-message instance on the first
``L2 + 1`` databases.  The split depends only on ``(N, K, L)``.
"""

from __future__ import annotations

from dataclasses import dataclass
import random
from math import prod
from typing import Any, Iterator, Sequence

from pirsim import qgen, srk
from pirsim.core import MessageStore, SchemeParams, count_profile, optimal_download_cost
from pirsim.errors import BudgetExceeded, ParameterError
from pirsim.sim.wire import SchemeKind, WireQuery


@dataclass(frozen=True)
class Segment:
    """A contiguous run of positions retrieved by one scheme instance.

    ``offset`` is the 0-based first position; ``databases`` is the size of the
    contacted prefix ``1..databases``.
    """

    kind: SchemeKind
    offset: int
    length: int
    databases: int

    def to_json(self) -> dict:
        return {
            "kind": self.kind.name.lower(),
            "offset": self.offset,
            "length": self.length,
            "databases": self.databases,
        }


@dataclass(frozen=True)
class Decomposition:
    G1: int
    G2: int
    L2: int
    segments: tuple[Segment, ...]

    def to_json(self) -> dict:
        return {"G1": self.G1, "G2": self.G2, "L2": self.L2}


def decompose(params: SchemeParams) -> Decomposition:
    N, K, L = params.N, params.K, params.L
    if N < 2:
        raise ParameterError("decomposition needs N >= 2; N = 1 downloads everything")
    group = N ** (K - 1)
    G1, L1 = divmod(L, group)
    G2, L2 = divmod(L1, N - 1)
    segments = []
    offset = 0
    for _ in range(G1):
        segments.append(Segment(SchemeKind.CAPACITY, offset, group, N))
        offset += group
    for _ in range(G2):
        segments.append(Segment(SchemeKind.SRK, offset, N - 1, N))
        offset += N - 1
    if L2:
        segments.append(Segment(SchemeKind.SRK, offset, L2, L2 + 1))
    return Decomposition(G1, G2, L2, tuple(segments))


def composite_cost(params: SchemeParams) -> int:
    """Download of the greedy composition, in exact integers."""
    d = decompose(params)
    N, K = params.N, params.K
    # N^(K-1) / C = 1 + N + ... + N^(K-1)
    cost = d.G1 * sum(N**i for i in range(K)) + d.G2 * N
    if d.L2:
        cost += d.L2 + 1
    return cost


def plan_segments(params: SchemeParams) -> tuple[Segment, ...]:
    """Segments for any parameters, including the full-download case ``N = 1``."""
    if params.N == 1:
        return (Segment(SchemeKind.FULL, 0, params.L, 1),)
    return decompose(params).segments


# -- per-segment randomness -------------------------------------------------


def sample_randomness(seg: Segment, K: int, rng: random.Random) -> Any:
    if seg.kind == SchemeKind.CAPACITY:
        return qgen.sample_permutations(seg.databases, K, rng)
    if seg.kind == SchemeKind.SRK:
        return srk.sample_coins(seg.databases, K, rng)
    return None


def randomness_space_size(seg: Segment, K: int) -> int:
    if seg.kind == SchemeKind.CAPACITY:
        return qgen.permutation_space_size(seg.databases, K)
    if seg.kind == SchemeKind.SRK:
        return 2 ** srk.coin_count(seg.databases, K)
    return 1


def enumerate_randomness(seg: Segment, K: int) -> Iterator[Any]:
    if seg.kind == SchemeKind.CAPACITY:
        return qgen.enumerate_permutations(seg.databases, K, budget=float("inf"))
    if seg.kind == SchemeKind.SRK:
        return srk.enumerate_coins(seg.databases, K)
    return iter([None])


def product_space_size(segments: Sequence[Segment], K: int) -> int:
    return prod(randomness_space_size(s, K) for s in segments)


def check_budget(segments: Sequence[Segment], K: int, budget: int) -> int:
    size = product_space_size(segments, K)
    if size > budget:
        raise BudgetExceeded(f"randomness space of {size} outcomes exceeds budget {budget}")
    return size


def stream(seed: int, index: int | str) -> random.Random:
    """Generator for stream ``index`` under master ``seed``.

    String seeds are hashed with SHA-512 by ``random.Random``, so streams are
    reproducible across processes and well separated.
    """
    return random.Random(f"pirsim:{seed}:{index}")


def sample_all(segments: Sequence[Segment], K: int, seed: int) -> list[Any]:
    """Randomness for every segment, drawn in order from one stream of ``seed``.

    Successive draws are independent, so the segments are too.
    """
    rng = stream(seed, "query")
    return [sample_randomness(s, K, rng) for s in segments]


# -- query construction -----------------------------------------------------


def _entry_key(entry):
    return (len(entry), entry)


def segment_queries(
    seg: Segment, K: int, theta: int, alphabet: int, randomness: Any
) -> list[WireQuery]:
    """Wire queries for databases ``1..seg.databases`` (0-based global positions)."""
    off = seg.offset
    if seg.kind == SchemeKind.CAPACITY:
        plan = qgen.plan_for(seg.databases, K, theta)
        gamma = randomness.gamma
        out = []
        for raw_db in plan.raw:
            entries = [tuple((k - 1, off + gamma[k - 1][j - 1] - 1) for k, j in e) for e in raw_db]
            entries.sort(key=_entry_key)
            out.append(WireQuery.trusted(SchemeKind.CAPACITY, alphabet, tuple(entries)))
        return out
    if seg.kind == SchemeKind.SRK:
        width = seg.length
        out = []
        for q in srk.srk_queries(seg.databases, K, theta, randomness):
            entry = tuple(
                (k, off + i) for k in range(K) for i in range(width) if q[k * width + i]
            )
            out.append(WireQuery.trusted(SchemeKind.SRK, alphabet, (entry,)))
        return out
    entries = tuple(((k, off + p),) for k in range(K) for p in range(seg.length))
    return [WireQuery.trusted(SchemeKind.FULL, alphabet, entries)]


def expected_answer_length(seg: Segment, K: int, db: int) -> int:
    """Symbols database ``db`` (0-based) returns for this segment."""
    if db >= seg.databases:
        return 0
    if seg.kind == SchemeKind.CAPACITY:
        return count_profile(seg.databases, K).entries(db + 1)
    if seg.kind == SchemeKind.SRK:
        return 1
    return K * seg.length


def composite_run(params: SchemeParams, theta: int, store: MessageStore, seed=0, loopback=False):
    """Run the composed scheme end to end and return its transcript."""
    from pirsim.sim.engine import execute

    segments = plan_segments(params)
    randomness = sample_all(segments, params.K, seed)
    target = optimal_download_cost(params.N, params.K, params.L)
    return execute(params, theta, store, segments, randomness, target_cost=target, loopback=loopback)
