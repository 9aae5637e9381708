"""Protocol engine: build queries, ship bytes to each replica, decode answers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from pirsim.composite import Segment, expected_answer_length, segment_queries
from pirsim.core import MessageStore, SchemeParams
from pirsim.errors import IntegrityError, ParameterError, ProtocolError
from pirsim.sim.client import decode_segment
from pirsim.sim.server import Database
from pirsim.sim.transport import LoopbackReplica
from pirsim.sim.wire import AnswerString, WireQuery, encode_queries, symbol_width


def read_answers(data: bytes, alphabet: int) -> list[AnswerString]:
    """Split a concatenation of answer frames."""
    w = symbol_width(alphabet)
    out, off = [], 0
    while off < len(data):
        if off + 4 > len(data):
            raise ProtocolError("truncated answer frame")
        count = int.from_bytes(data[off : off + 4], "big")
        end = off + 4 + count * w
        if end > len(data):
            raise ProtocolError("truncated answer frame")
        out.append(AnswerString.from_bytes(data[off:end], alphabet))
        off = end
    return out


@dataclass(frozen=True)
class Transcript:
    """Everything exchanged in one protocol run.

    ``total_download`` counts download-alphabet symbols.  ``target_cost`` is
    the optimum for matched alphabets and the achievable cost otherwise;
    ``lower_bound`` is only set for mismatched alphabets.
    """

    params: SchemeParams
    theta: int
    alphabet: int
    segments: tuple[Segment, ...]
    queries: tuple[tuple[WireQuery, ...], ...]
    answers: tuple[tuple[AnswerString, ...], ...]
    decoded: tuple[int, ...]
    per_db_symbol_count: tuple[int, ...]
    total_download: int
    target_cost: int
    lower_bound: int | None = None
    transcoded_length: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def optimal(self) -> bool:
        return self.total_download == self.target_cost

    def query_bytes(self, db: int) -> bytes:
        return encode_queries(self.queries[db])

    def to_json(self) -> dict:
        dbs = []
        for n in range(self.params.N):
            dbs.append(
                {
                    "database": n + 1,
                    "query_hex": self.query_bytes(n).hex(),
                    "answer_hex": b"".join(a.to_bytes() for a in self.answers[n]).hex(),
                    "queries": [q.to_json() for q in self.queries[n]],
                    "answers": [list(a.symbols) for a in self.answers[n]],
                    "symbols": self.per_db_symbol_count[n],
                }
            )
        verdict = {"target_cost": self.target_cost, "optimal": self.optimal}
        if self.lower_bound is not None:
            verdict["lower_bound"] = self.lower_bound
            verdict["gap"] = self.target_cost - self.lower_bound
        doc = {
            "params": self.params.to_dict(),
            "theta": self.theta,
            "download_alphabet": self.alphabet,
            "segments": [s.to_json() for s in self.segments],
            "databases": dbs,
            "per_db_symbol_count": list(self.per_db_symbol_count),
            "total_download": self.total_download,
            "decoded": list(self.decoded),
            "verdict": verdict,
        }
        if self.transcoded_length is not None:
            doc["transcoded_length"] = self.transcoded_length
        return doc


def build_queries(
    segments: Sequence[Segment], N: int, K: int, theta: int, alphabet: int,
    randomness: Sequence[Any],
) -> list[list[WireQuery]]:
    """Per database, its frames in segment order (segments that skip it send nothing)."""
    per_seg = [
        segment_queries(seg, K, theta, alphabet, rnd) for seg, rnd in zip(segments, randomness)
    ]
    return [
        [qs[db] for seg, qs in zip(segments, per_seg) if db < seg.databases] for db in range(N)
    ]


def execute(
    params: SchemeParams,
    theta: int,
    store: MessageStore,
    segments: Sequence[Segment],
    randomness: Sequence[Any],
    target_cost: int,
    lower_bound: int | None = None,
    loopback: bool = False,
) -> Transcript:
    """Run one retrieval with explicit randomness.

    With ``loopback`` each replica is reached through a local socket instead
    of a direct call; the bytes exchanged are identical.
    """
    N, K, alphabet = params.N, store.K, store.alphabet
    if K != params.K:
        raise ParameterError(f"store has {K} messages, params say {params.K}")
    if not 1 <= theta <= K:
        raise ParameterError(f"theta must be in [1, {K}], got {theta}")
    if sum(s.length for s in segments) != store.L:
        raise ParameterError("segments do not cover the stored messages")

    queries = build_queries(segments, N, K, theta, alphabet, randomness)
    replicas = [Database(n, store) for n in range(N)]
    answers: list[list[AnswerString]] = []
    for n, replica in enumerate(replicas):
        request = encode_queries(queries[n])
        if loopback:
            with LoopbackReplica(replica) as remote:
                reply = remote.request(request)
        else:
            reply = replica.answer_bytes(request)
        got = read_answers(reply, alphabet)
        if len(got) != len(queries[n]):
            raise ProtocolError(f"database {n + 1} sent {len(got)} answers for {len(queries[n])} frames")
        answers.append(got)

    # answer sizes are fixed by (params, database): assert rather than maximize
    counts = []
    for n in range(N):
        expected = sum(expected_answer_length(s, K, n) for s in segments)
        got = sum(len(a) for a in answers[n])
        if got != expected:
            raise IntegrityError(f"database {n + 1} returned {got} symbols, expected {expected}")
        counts.append(got)

    decoded: list[int] = []
    cursor = [0] * N
    for seg, rnd in zip(segments, randomness):
        seg_q, seg_a = [], []
        for n in range(seg.databases):
            seg_q.append(queries[n][cursor[n]])
            seg_a.append(answers[n][cursor[n]])
            cursor[n] += 1
        decoded.extend(decode_segment(seg, K, theta, alphabet, rnd, seg_q, seg_a))

    return Transcript(
        params=params,
        theta=theta,
        alphabet=alphabet,
        segments=tuple(segments),
        queries=tuple(tuple(q) for q in queries),
        answers=tuple(tuple(a) for a in answers),
        decoded=tuple(decoded),
        per_db_symbol_count=tuple(counts),
        total_download=sum(counts),
        target_cost=target_cost,
        lower_bound=lower_bound,
    )
