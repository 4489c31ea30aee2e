from __future__ import annotations

import dataclasses
from typing import Any, NamedTuple


class AutomatonError(RuntimeError):
    """A client automaton reached a state its algorithm forbids."""


class Trigger(NamedTuple):
    object: int
    op: tuple
    tag: Any = None


class Step(NamedTuple):
    state: Any
    triggers: tuple = ()
    returned: bool = False
    result: Any = None


class Emulation:
    """Client-side automaton.  Transitions are pure; the simulator owns all interleaving.

    Subclasses set ``name`` and ``object_kind`` and implement ``initial_state``,
    ``on_invoke`` and ``on_respond``.
    """

    name = "emulation"
    object_kind = "register"

    def __init__(self, cfg, placement):
        self.cfg = cfg
        self.placement = placement

    def initial_object_state(self, obj: int):
        return None

    def initial_state(self, client: int):
        raise NotImplementedError

    def on_invoke(self, client: int, state, op: tuple) -> Step:
        raise NotImplementedError

    def on_respond(self, client: int, state, tag, obj: int, value) -> Step:
        raise NotImplementedError

    def is_quiescent(self, state) -> bool:
        return getattr(state, "phase", "idle") == "idle"


def state_to_json(state) -> dict:
    """JSON-friendly dump of an automaton state, for debugging output."""

    def conv(v):
        if isinstance(v, (set, frozenset)):
            return sorted((conv(x) for x in v), key=repr)
        if isinstance(v, tuple):
            return [conv(x) for x in v]
        if isinstance(v, dict):
            return {str(k): conv(x) for k, x in v.items()}
        return v

    return {f.name: conv(getattr(state, f.name)) for f in dataclasses.fields(state)}
