"""User-side decoding of answers back into the desired message."""

from __future__ import annotations

from typing import Any, Sequence

from pirsim import qgen, srk
from pirsim.errors import IntegrityError
from pirsim.sim.wire import AnswerString, SchemeKind, WireQuery


def _lookup(table: dict, entry, db: int):
    try:
        return table[entry]
    except KeyError:
        raise IntegrityError(f"no answer for {entry} from database {db + 1}") from None


def decode_capacity(
    seg, K: int, theta: int, alphabet: int, perm: qgen.PermutationMap,
    queries: Sequence[WireQuery], answers: Sequence[AnswerString],
) -> list[int]:
    """Peel desired symbols out of a capacity-scheme segment.

    A block-1 desired symbol is read directly; a block-k one is its sum minus
    the block-(k-1) side-information sum answered by another database.
    """
    plan = qgen.plan_for(seg.databases, K, theta)
    gamma = perm.gamma
    off = seg.offset
    tables = []
    for db, (q, a) in enumerate(zip(queries, answers)):
        if len(q.entries) != len(a.symbols):
            raise IntegrityError(f"database {db + 1} answered {len(a)} of {len(q.entries)} sums")
        tables.append(dict(zip(q.entries, a.symbols)))

    def value(db: int, idx: int) -> int:
        raw = plan.raw[db][idx]
        entry = tuple((k - 1, off + gamma[k - 1][j - 1] - 1) for k, j in raw)
        return _lookup(tables[db], entry, db)

    out = [0] * seg.length
    row_theta = gamma[theta - 1]
    for j, db, idx, side_db, side_idx in plan.peel_schedule:
        v = value(db, idx)
        if side_db is not None:
            v -= value(side_db, side_idx)
        out[row_theta[j - 1] - 1] = v % alphabet
    return out


def decode_segment(
    seg, K: int, theta: int, alphabet: int, randomness: Any,
    queries: Sequence[WireQuery], answers: Sequence[AnswerString],
) -> list[int]:
    if len(answers) < seg.databases:
        raise IntegrityError(f"segment needs {seg.databases} answers, got {len(answers)}")
    if seg.kind == SchemeKind.CAPACITY:
        return decode_capacity(seg, K, theta, alphabet, randomness, queries, answers)
    if seg.kind == SchemeKind.SRK:
        flat = []
        for db, a in enumerate(answers):
            if len(a.symbols) != 1:
                raise IntegrityError(f"SRK answer from database {db + 1} has {len(a)} symbols")
            flat.append(a.symbols[0])
        return srk.srk_decode(flat, randomness, theta, alphabet)
    (full,) = answers
    start = (theta - 1) * seg.length
    return list(full.symbols[start : start + seg.length])
