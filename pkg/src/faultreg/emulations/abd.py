"""Multi-writer ABD with each server's logic folded into a max-register.

Every max-register holds ``((seq, writer), value)`` pairs and keeps the
largest.  A write reads-max from a quorum, picks ``seq + 1`` and writes-max the
new pair to a quorum; a read reads-max from a quorum and returns the largest
value.  There is no read write-back, so the register is regular, not atomic.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..model import INITIAL_TSVAL, MAX_REGISTER, Timestamp, TSVal, max_register_placement
from .base import AutomatonError, Emulation, Step, Trigger


@dataclass(frozen=True)
class AbdClientState:
    phase: str = "idle"  # idle | query | update
    op: str | None = None
    value: object = None
    opno: int = 0
    acks: int = 0
    best: TSVal = INITIAL_TSVAL


class AbdMax(Emulation):
    name = "abd-max"
    object_kind = MAX_REGISTER

    def __init__(self, cfg, placement=None):
        super().__init__(cfg, placement or max_register_placement(cfg))
        self.quorum = len(self.placement.objects) - cfg.f

    def initial_object_state(self, obj):
        return INITIAL_TSVAL

    def initial_state(self, client):
        return AbdClientState()

    def _broadcast(self, op, opno, kind):
        return tuple(Trigger(b, op, (kind, opno)) for b in self.placement.objects)

    def on_invoke(self, client, state, op):
        if state.phase != "idle":
            raise AutomatonError(f"client {client} invoked {op} while {state.phase}")
        name = op[0]
        if name == "write" and not self.cfg.is_writer(client):
            raise AutomatonError(f"client {client} is not one of the {self.cfg.k} writers")
        if name not in ("write", "read"):
            raise AutomatonError(f"unsupported operation {op!r}")
        opno = state.opno + 1
        state = AbdClientState("query", name, op[1] if name == "write" else None, opno)
        return Step(state, self._broadcast(("read-max",), opno, "q"))

    def on_respond(self, client, state, tag, obj, value):
        kind, opno = tag
        if opno != state.opno or state.phase == "idle":
            return Step(state)
        if kind == "q" and state.phase == "query":
            state = replace(state, acks=state.acks + 1, best=max(state.best, value, key=lambda tv: tv.ts))
            if state.acks < self.quorum:
                return Step(state)
            if state.op == "read":
                return Step(replace(state, phase="idle", op=None), (), True, state.best.val)
            tsval = TSVal(Timestamp(state.best.ts.seq + 1, client), state.value)
            state = replace(state, phase="update", acks=0)
            return Step(state, self._broadcast(("write-max", tsval), opno, "u"))
        if kind == "u" and state.phase == "update":
            state = replace(state, acks=state.acks + 1)
            if state.acks >= self.quorum:
                return Step(replace(state, phase="idle", op=None), (), True, "ack")
            return Step(state)
        return Step(state)
