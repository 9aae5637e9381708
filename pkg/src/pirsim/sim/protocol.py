"""Top-level protocol run: pick the scheme the parameters call for."""

from __future__ import annotations

from pirsim.alphabet import mismatched_run
from pirsim.composite import composite_run
from pirsim.core import MessageStore, SchemeParams
from pirsim.sim.engine import Transcript


def run_protocol(
    params: SchemeParams, theta: int, store: MessageStore, seed=0, loopback=False
) -> Transcript:
    """One full retrieval of message ``theta``; deterministic given ``seed``."""
    store.check(params)
    if params.matched:
        return composite_run(params, theta, store, seed, loopback)
    return mismatched_run(params, theta, store, seed, loopback)
