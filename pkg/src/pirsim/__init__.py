"""Download-optimal private information retrieval for arbitrary message length."""

from pirsim.core import (
    SchemeParams,
    Message,
    MessageStore,
    capacity,
    optimal_download_cost,
    count_profile,
    shortest_capacity_length,
    attains_capacity,
)
from pirsim.sim import Transcript, run_protocol

__version__ = "0.1.0"

__all__ = [
    "SchemeParams",
    "Message",
    "MessageStore",
    "Transcript",
    "attains_capacity",
    "capacity",
    "count_profile",
    "optimal_download_cost",
    "run_protocol",
    "shortest_capacity_length",
]
