"""Wait-free max-register from a single CAS object.

``read-max`` is one ``CAS(v0, v0)``.  ``write-max(v)`` loops: probe with
``CAS(v0, v0)``; stop once the probe is at least ``v``, otherwise try
``CAS(probe, v)`` and probe again.  The CAS value only ever grows because every
swap installs a value larger than the one it expects.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..history import History
from ..model import CAS, V0, single_object_placement
from .base import AutomatonError, Emulation, Step, Trigger

PROBE = ("cas", V0, V0)


@dataclass(frozen=True)
class CasMaxState:
    phase: str = "idle"  # idle | probe | swap
    op: str | None = None
    value: object = None
    tmp: object = V0
    iterations: int = 0


class CasMax(Emulation):
    name = "cas-max"
    object_kind = CAS

    def __init__(self, cfg=None, placement=None):
        super().__init__(cfg, placement or single_object_placement())
        (self.obj,) = self.placement.objects

    def initial_object_state(self, obj):
        return V0

    def initial_state(self, client):
        return CasMaxState()

    def on_invoke(self, client, state, op):
        if state.phase != "idle":
            raise AutomatonError(f"client {client} invoked {op} while {state.phase}")
        if op[0] == "write-max":
            state = CasMaxState("probe", "write-max", op[1], V0, 1)
        elif op[0] == "read-max":
            state = CasMaxState("probe", "read-max")
        else:
            raise AutomatonError(f"unsupported operation {op!r}")
        return Step(state, (Trigger(self.obj, PROBE, "probe"),))

    def on_respond(self, client, state, tag, obj, value):
        if tag == "probe":
            if value < state.tmp:
                raise AutomatonError(f"CAS value went down from {state.tmp} to {value}")
            if state.op == "read-max":
                return Step(CasMaxState(), (), True, value)
            if value >= state.value:
                return Step(CasMaxState(), (), True, "ok")
            state = replace(state, phase="swap", tmp=value)
            return Step(state, (Trigger(self.obj, ("cas", value, state.value), "swap"),))
        state = replace(state, phase="probe", iterations=state.iterations + 1)
        return Step(state, (Trigger(self.obj, PROBE, "probe"),))


def casmax_iterations(history: History) -> list[dict]:
    """Loop iterations of every write-max, read off the history.

    An iteration begins with each probe ``CAS(v0, v0)``.  The bound is the
    number of domain values strictly between the first probe result and the
    target, plus two; integer domain assumed.
    """
    out = []
    current: dict[int, dict] = {}
    probes: dict[int, int] = {}
    for ev in history:
        if ev.kind == "invoke" and ev.op[0] == "write-max":
            current[ev.client] = {"client": ev.client, "value": ev.op[1], "invoke": ev.t,
                                  "iterations": 0, "first": None}
        elif ev.kind == "trigger" and ev.client in current and ev.op == PROBE:
            current[ev.client]["iterations"] += 1
            probes[ev.op_id] = ev.client
        elif ev.kind == "respond" and ev.op_id in probes:
            rec = current.get(probes.pop(ev.op_id))
            if rec is not None and rec["first"] is None:
                rec["first"] = ev.value
        elif ev.kind == "return" and ev.client in current:
            rec = current.pop(ev.client)
            between = max(0, rec["value"] - rec["first"] - 1)
            rec["bound"] = between + 2
            rec["ok"] = rec["iterations"] <= rec["bound"]
            out.append(rec)
    return out


def casmax_iteration_bound(history: History) -> bool:
    """True when every completed write-max stayed within its iteration bound."""
    return all(rec["ok"] for rec in casmax_iterations(history))


def exhaustive_check(max_ops: int = 2, domain=range(5), symmetric: bool = True, reduce: bool = True) -> dict:
    """Run every interleaving of two clients' max-register workloads through the checkers.

    Returns counts and the first failing history, if any.
    """
    from ..checkers import MaxRegister, check_high_level
    from ..simulator import explore
    from ..workloads import two_client_workloads

    emu = CasMax()
    spec = MaxRegister()
    out = {"workloads": 0, "histories": 0, "atomic_failures": 0, "bound_failures": 0, "first_failure": None}
    for workload in two_client_workloads(max_ops, domain, symmetric):
        out["workloads"] += 1
        for history in explore(None, emu.placement, emu, workload, reduce=reduce):
            out["histories"] += 1
            atomic = check_high_level(history, spec).passed
            bounded = casmax_iteration_bound(history)
            out["atomic_failures"] += not atomic
            out["bound_failures"] += not bounded
            if not (atomic and bounded) and out["first_failure"] is None:
                out["first_failure"] = history
    return out
