"""k-writer register from read/write registers laid out in rows.

A write first collects from ``n - f`` servers, then writes ``(ts, v)`` to its
row, skipping registers that still carry a pending write of the same client
(its cover set).  When a covered register finally responds, the client writes
its current value there.  The write returns once ``|R_j| - f`` registers of
the row acknowledged.  Reads only collect.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..model import INITIAL_TSVAL, REGISTER, Timestamp, TSVal, build_placement, layout_params
from .base import AutomatonError, Emulation, Step, Trigger

IDLE, COLLECTING, WRITING = "idle", "collecting", "writing"


@dataclass(frozen=True)
class RwClientState:
    tsval: TSVal = INITIAL_TSVAL
    rdset: frozenset = frozenset()
    wrset: frozenset = frozenset()
    coverset: frozenset = frozenset()
    phase: str = IDLE
    op: str | None = None
    value: object = None
    collect_id: int = 0
    # next object index per server during a collect; -1 once that scan is done
    scan_pos: tuple = ()


class RwRegister(Emulation):
    name = "rw-register"
    object_kind = REGISTER

    def __init__(self, cfg, placement=None):
        super().__init__(cfg, placement or build_placement(cfg))
        self.layout = layout_params(cfg)
        if len(self.placement.rows) != self.layout.m:
            raise ValueError("placement rows do not match the layout")

    def initial_object_state(self, obj):
        return INITIAL_TSVAL

    def row_of(self, client: int) -> tuple[int, ...]:
        return self.placement.rows[client // self.layout.z]

    def initial_state(self, client):
        # a writer starts as if its whole row had acknowledged
        wrset = frozenset(self.row_of(client)) if self.cfg.is_writer(client) else frozenset()
        return RwClientState(wrset=wrset)

    # -- collect ---------------------------------------------------------

    def _start_collect(self, client, state, op, value):
        cid = state.collect_id + 1
        triggers = []
        pos = []
        for s in self.cfg.servers:
            objs = self.placement.objects_on(s)
            if objs:
                triggers.append(Trigger(objs[0], ("read",), (cid, s, 0)))
                pos.append(0)
            else:
                pos.append(-1)
        state = replace(state, rdset=frozenset(), phase=COLLECTING, op=op, value=value,
                        collect_id=cid, scan_pos=tuple(pos))
        if pos.count(-1) >= self.cfg.n - self.cfg.f:
            return self._finish_collect(client, state, tuple(triggers))
        return Step(state, tuple(triggers))

    def _finish_collect(self, client, state, triggers=()):
        best = max(state.rdset, key=lambda tv: tv.ts, default=INITIAL_TSVAL)
        if state.op == "read":
            return Step(replace(state, phase=IDLE, op=None), triggers, True, best.val)
        return self._start_writes(client, state, best, triggers)

    # -- write phase -----------------------------------------------------

    def _start_writes(self, client, state, best, triggers):
        row = self.row_of(client)
        tsval = TSVal(Timestamp(best.ts.seq + 1, client), state.value)
        coverset = frozenset(row) - state.wrset
        out = list(triggers)
        for b in row:
            if b not in coverset:
                out.append(Trigger(b, ("write", tsval), "w"))
        state = replace(state, tsval=tsval, coverset=coverset, wrset=frozenset(), phase=WRITING)
        return Step(state, tuple(out))

    # -- transitions -----------------------------------------------------

    def on_invoke(self, client, state, op):
        if state.phase != IDLE:
            raise AutomatonError(f"client {client} invoked {op} while {state.phase}")
        name = op[0]
        if name == "write":
            if not self.cfg.is_writer(client):
                raise AutomatonError(f"client {client} is not one of the {self.cfg.k} writers")
            return self._start_collect(client, state, "write", op[1])
        if name == "read":
            return self._start_collect(client, state, "read", None)
        raise AutomatonError(f"unsupported operation {op!r}")

    def on_respond(self, client, state, tag, obj, value):
        if tag == "w":
            return self._on_write_ack(client, state, obj)
        cid, server, idx = tag
        if state.phase != COLLECTING or cid != state.collect_id:
            return Step(state)  # stale read from an abandoned scan
        state = replace(state, rdset=state.rdset | {value})
        objs = self.placement.objects_on(server)
        pos = list(state.scan_pos)
        if idx + 1 < len(objs):
            pos[server] = idx + 1
            return Step(replace(state, scan_pos=tuple(pos)), (Trigger(objs[idx + 1], ("read",), (cid, server, idx + 1)),))
        pos[server] = -1
        state = replace(state, scan_pos=tuple(pos))
        if pos.count(-1) >= self.cfg.n - self.cfg.f:
            return self._finish_collect(client, state)
        return Step(state)

    def _on_write_ack(self, client, state, obj):
        if obj in state.coverset:
            state = replace(state, coverset=state.coverset - {obj})
            return Step(state, (Trigger(obj, ("write", state.tsval), "w"),))
        state = replace(state, wrset=state.wrset | {obj})
        row = self.row_of(client)
        if state.phase == WRITING and len(state.wrset) >= len(row) - self.cfg.f:
            return Step(replace(state, phase=IDLE, op=None), (), True, "ack")
        return Step(state)
