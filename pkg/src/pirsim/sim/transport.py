"""Loopback socket transport carrying the same query and answer bytes.

Each replica runs in its own thread behind one end of a ``socketpair``.
Messages are framed with a 4-byte big-endian length.
"""

from __future__ import annotations

import socket
import struct
import threading

from pirsim.errors import ProtocolError
from pirsim.sim.server import Database

_LEN = struct.Struct(">I")


def _send(sock: socket.socket, data: bytes) -> None:
    sock.sendall(_LEN.pack(len(data)) + data)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ProtocolError("connection closed mid-message")
        buf.extend(chunk)
    return bytes(buf)


def _recv(sock: socket.socket) -> bytes | None:
    head = sock.recv(_LEN.size, socket.MSG_WAITALL)
    if not head:
        return None
    if len(head) < _LEN.size:
        raise ProtocolError("truncated length prefix")
    (n,) = _LEN.unpack(head)
    return _recv_exact(sock, n)


class LoopbackReplica:
    """A database served over a local socket pair; use as a context manager."""

    def __init__(self, database: Database):
        self.database = database
        self._client, self._server = socket.socketpair()
        self._thread = threading.Thread(target=self._serve, daemon=True)
        self._thread.start()

    def _serve(self) -> None:
        with self._server:
            while (request := _recv(self._server)) is not None:
                try:
                    reply = b"\x00" + self.database.answer_bytes(request)
                except ProtocolError as exc:
                    reply = b"\x01" + str(exc).encode()
                _send(self._server, reply)

    def request(self, data: bytes) -> bytes:
        _send(self._client, data)
        reply = _recv(self._client)
        if reply is None:
            raise ProtocolError("replica closed the connection")
        if reply[:1] != b"\x00":
            raise ProtocolError(f"replica rejected query: {reply[1:].decode()}")
        return reply[1:]

    def close(self) -> None:
        self._client.close()
        self._thread.join()

    def __enter__(self) -> "LoopbackReplica":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
