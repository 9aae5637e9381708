"""Binary wire format for queries and answers.

Query frame (all integers big-endian)::

    "PIRQ" | version:u8 | kind:u8 | alphabet:u32 | entries:u32
    then per entry:  terms:u8 (u32 for SRK frames) | (message:u32, position:u32) * terms

Message indices and positions are 0-based on the wire.  Within an entry the
terms are strictly increasing; entries appear in canonical order
(term count, then term tuple).  An SRK frame carries exactly one entry: the
pairs whose coefficient is 1.

Answer frame::

    count:u32 | symbol * count     (each symbol in ceil(log2(alphabet) / 8) bytes, min 1)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from typing import Sequence

from pirsim.errors import ProtocolError

MAGIC = b"PIRQ"
VERSION = 1
_HEADER = struct.Struct(">4sBBII")
_U32 = struct.Struct(">I")


class SchemeKind(IntEnum):
    CAPACITY = 1
    SRK = 2
    FULL = 3


@lru_cache(maxsize=None)
def _terms_struct(n: int) -> struct.Struct:
    return struct.Struct(">%dI" % (2 * n))


@lru_cache(maxsize=None)
def symbol_width(alphabet: int) -> int:
    """Bytes per answer symbol."""
    return max(1, ((alphabet - 1).bit_length() + 7) // 8)


Entry = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class WireQuery:
    kind: SchemeKind
    alphabet: int
    entries: tuple[Entry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        _validate(self)

    @classmethod
    def trusted(cls, kind: SchemeKind, alphabet: int, entries: tuple[Entry, ...]) -> "WireQuery":
        """Build without validation; for frames the client constructs itself."""
        q = object.__new__(cls)
        object.__setattr__(q, "kind", kind)
        object.__setattr__(q, "alphabet", alphabet)
        object.__setattr__(q, "entries", entries)
        return q

    def to_bytes(self) -> bytes:
        wide = self.kind == SchemeKind.SRK
        parts = [_HEADER.pack(MAGIC, VERSION, self.kind, self.alphabet, len(self.entries))]
        for entry in self.entries:
            n = len(entry)
            parts.append(_U32.pack(n) if wide else bytes((n,)))
            parts.append(_terms_struct(n).pack(*[x for term in entry for x in term]))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "WireQuery":
        query, end = cls.read(data, 0)
        if end != len(data):
            raise ProtocolError(f"{len(data) - end} trailing bytes after query frame")
        return query

    @classmethod
    def read(cls, data: bytes, offset: int) -> tuple["WireQuery", int]:
        """Parse one frame starting at ``offset``; return it and the end offset."""
        try:
            magic, version, kind, alphabet, count = _HEADER.unpack_from(data, offset)
        except struct.error as exc:
            raise ProtocolError("truncated query header") from exc
        if magic != MAGIC:
            raise ProtocolError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ProtocolError(f"unsupported wire version {version}")
        try:
            kind = SchemeKind(kind)
        except ValueError as exc:
            raise ProtocolError(f"unknown scheme kind {kind}") from exc
        off = offset + _HEADER.size
        entries = []
        try:
            for _ in range(count):
                if kind == SchemeKind.SRK:
                    (n,) = _U32.unpack_from(data, off)
                    off += 4
                else:
                    n = data[off]
                    off += 1
                flat = _terms_struct(n).unpack_from(data, off)
                off += 8 * n
                entries.append(tuple(zip(flat[0::2], flat[1::2])))
        except (struct.error, IndexError) as exc:
            raise ProtocolError("truncated query body") from exc
        try:
            return cls(kind, alphabet, tuple(entries)), off
        except ValueError as exc:
            raise ProtocolError(str(exc)) from exc

    def to_json(self) -> dict:
        return {
            "kind": self.kind.name.lower(),
            "alphabet": self.alphabet,
            "entries": [[list(t) for t in e] for e in self.entries],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "WireQuery":
        return cls(
            SchemeKind[doc["kind"].upper()],
            doc["alphabet"],
            tuple(tuple((m, p) for m, p in e) for e in doc["entries"]),
        )


def _validate(q: WireQuery) -> None:
    if q.alphabet < 2:
        raise ProtocolError(f"alphabet must be >= 2, got {q.alphabet}")
    if q.kind == SchemeKind.SRK and len(q.entries) != 1:
        raise ProtocolError("an SRK frame carries exactly one entry")
    prev = None
    for entry in q.entries:
        if q.kind != SchemeKind.SRK:
            if not entry or len(entry) > 255:
                raise ProtocolError(f"entry needs 1..255 terms, has {len(entry)}")
            if any(a[0] >= b[0] for a, b in zip(entry, entry[1:])):
                raise ProtocolError(f"message indexes not strictly increasing in {entry}")
            key = (len(entry), entry)
            if prev is not None and key <= prev:
                raise ProtocolError("entries are not in canonical order")
            prev = key
        elif any(a >= b for a, b in zip(entry, entry[1:])):
            raise ProtocolError("SRK terms not strictly increasing")


def read_bundle(data: bytes) -> list[WireQuery]:
    """Split a concatenation of query frames."""
    frames, off = [], 0
    while off < len(data):
        frame, off = WireQuery.read(data, off)
        frames.append(frame)
    return frames


@dataclass(frozen=True)
class AnswerString:
    symbols: tuple[int, ...]
    alphabet: int

    def __len__(self) -> int:
        return len(self.symbols)

    def to_bytes(self) -> bytes:
        w = symbol_width(self.alphabet)
        body = b"".join(s.to_bytes(w, "big") for s in self.symbols) if w > 1 else bytes(self.symbols)
        return _U32.pack(len(self.symbols)) + body

    @classmethod
    def from_bytes(cls, data: bytes, alphabet: int) -> "AnswerString":
        if len(data) < 4:
            raise ProtocolError("truncated answer header")
        (count,) = _U32.unpack_from(data, 0)
        w = symbol_width(alphabet)
        if len(data) != 4 + count * w:
            raise ProtocolError(f"answer length {len(data)} does not match {count} symbols")
        body = data[4:]
        if w == 1:
            symbols = tuple(body)
        else:
            symbols = tuple(int.from_bytes(body[i : i + w], "big") for i in range(0, len(body), w))
        if any(s >= alphabet for s in symbols):
            raise ProtocolError("answer symbol outside the alphabet")
        return cls(symbols, alphabet)


def encode_queries(queries: Sequence[WireQuery]) -> bytes:
    return b"".join(q.to_bytes() for q in queries)
