"""Simulated databases.

A database sees only query frames; nothing on the wire names the desired
message, so answers cannot depend on it.
"""

from __future__ import annotations

from pirsim.core import MessageStore
from pirsim.errors import ProtocolError
from pirsim.sim.wire import AnswerString, WireQuery, read_bundle


def answer_query(query: WireQuery, store: MessageStore, Mprime: int | None = None) -> AnswerString:
    """Sum of the referenced symbols modulo the alphabet, one symbol per entry.

    SRK frames hold a single entry listing the coefficient-1 positions, so
    the same rule yields the coefficient-weighted sum.
    """
    alphabet = query.alphabet if Mprime is None else Mprime
    if query.alphabet != alphabet or store.alphabet != alphabet:
        raise ProtocolError(
            f"alphabet mismatch: query {query.alphabet}, store {store.alphabet}, expected {alphabet}"
        )
    rows = store.rows()
    K, L = len(rows), len(rows[0])
    out = []
    for entry in query.entries:
        total = 0
        for k, pos in entry:
            if not (0 <= k < K and 0 <= pos < L):
                raise ProtocolError(f"term ({k}, {pos}) outside a {K} x {L} store")
            total += rows[k][pos]
        out.append(total % alphabet)
    return AnswerString(tuple(out), alphabet)


class Database:
    """One replica answering query frames.

    ``MessageStore`` is immutable, so replicas may share one instance.
    """

    def __init__(self, index: int, store: MessageStore):
        self.index = index
        self.store = store

    def answer(self, query: WireQuery) -> AnswerString:
        return answer_query(query, self.store)

    def answer_bytes(self, data: bytes) -> bytes:
        """Answer a concatenation of query frames with a concatenation of answer frames."""
        return b"".join(self.answer(q).to_bytes() for q in read_bundle(data))
