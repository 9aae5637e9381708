"""Protocol simulation: wire format, replicas, decoding and full runs."""

from pirsim.sim.wire import AnswerString, SchemeKind, WireQuery
from pirsim.sim.server import Database, answer_query
from pirsim.sim.engine import Transcript, execute
from pirsim.sim.protocol import run_protocol

__all__ = [
    "AnswerString",
    "Database",
    "SchemeKind",
    "Transcript",
    "WireQuery",
    "answer_query",
    "execute",
    "run_protocol",
]
