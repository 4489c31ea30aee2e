"""Deterministic event engine for the fault-prone shared-memory model.

A scheduler picks one enabled action at a time: the invocation of the next
workload item of an idle client, or the response of a pending low-level
operation on a live object.  The client's handler then runs atomically; each
trigger it issues and its return (if any) are logged as separate events right
after the action.  A low-level operation takes effect on its object exactly at
its respond step, so reads see the state at that step and pending writes are
invisible.
"""

from __future__ import annotations

import copy
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from .emulations.base import AutomatonError, Emulation, state_to_json
from .history import CRASH_CLIENT, CRASH_SERVER, INVOKE, RESPOND, RETURN, TRIGGER, History
from .model import BaseObject, Placement, SystemConfig, apply_base_op
from .rng import stream

DEFAULT_STEP_CAP = 10**6


class SimulationError(RuntimeError):
    pass


class Deadlock(SimulationError):
    """No enabled action is left but some invoked or queued operation never returned."""

    def __init__(self, message: str, snapshot: dict):
        super().__init__(message)
        self.snapshot = snapshot


class StepCapExceeded(SimulationError):
    pass


class EmulationFailure(SimulationError):
    def __init__(self, client: int, state, cause: Exception):
        super().__init__(f"client {client}: {cause}")
        self.client = client
        self.state = state
        self.cause = cause


@dataclass(frozen=True)
class WorkloadItem:
    """One high-level operation for ``client``.

    It may not be invoked before time ``at`` (unless nothing else can happen)
    nor before every workload item listed in ``after`` has returned.
    """

    client: int
    op: tuple
    at: int = 0
    after: tuple[int, ...] = ()


@dataclass(frozen=True)
class FaultPlan:
    server_crashes: tuple[tuple[int, int], ...] = ()  # (server, time)
    client_crashes: tuple[tuple[int, int], ...] = ()  # (client, time)

    @classmethod
    def parse(cls, specs: Sequence[str]) -> "FaultPlan":
        """Build from ``"s@t"`` strings (crash server ``s`` once ``t`` events happened)."""
        crashes = []
        for spec in specs:
            try:
                s, t = spec.split("@")
                crashes.append((int(s), int(t)))
            except ValueError:
                raise ValueError(f"bad crash spec {spec!r}, expected SERVER@TIME") from None
        return cls(tuple(crashes))

    @property
    def servers(self) -> frozenset[int]:
        return frozenset(s for s, _ in self.server_crashes)


class Action(NamedTuple):
    kind: str  # "invoke" or "respond"
    ref: int  # workload index for invoke, op id for respond
    client: int
    object: int | None = None


class PendingOp(NamedTuple):
    op_id: int
    client: int
    object: int
    op: tuple
    tag: object
    trigger_t: int


class Scheduler:
    """Picks the next action; may return ``None`` to stop the run."""

    def attach(self, sim: "Simulation") -> None:
        pass

    def choose(self, sim: "Simulation", enabled: list[Action], rng):
        raise NotImplementedError


class FairRandomScheduler(Scheduler):
    """Uniform choice among enabled actions; fair with probability one."""

    def choose(self, sim, enabled, rng):
        return enabled[int(rng.integers(len(enabled)))]


class FifoScheduler(Scheduler):
    """Always the oldest enabled action: queued invocations first, then responds by op id."""

    def choose(self, sim, enabled, rng):
        return enabled[0]


class BlockingScheduler(Scheduler):
    """Fair random, except that responds of ops matching ``blocked`` are withheld forever."""

    def __init__(self, blocked: Callable[[PendingOp], bool]):
        self.blocked = blocked

    def choose(self, sim, enabled, rng):
        allowed = [a for a in enabled if a.kind != "respond" or not self.blocked(sim.pending[a.ref])]
        if not allowed:
            return None
        return allowed[int(rng.integers(len(allowed)))]


class Simulation:
    def __init__(
        self,
        cfg: SystemConfig,
        placement: Placement,
        emulation: Emulation,
        workload: Sequence[WorkloadItem] = (),
        scheduler: Scheduler | None = None,
        fault_plan: FaultPlan | None = None,
        seed: int = 0,
        step_cap: int = DEFAULT_STEP_CAP,
    ):
        self.cfg = cfg
        self.placement = placement
        self.emulation = emulation
        self.workload = tuple(workload)
        self.scheduler = scheduler or FairRandomScheduler()
        self.fault_plan = fault_plan or FaultPlan()
        self.rng = stream(seed, "scheduler")
        self.step_cap = step_cap

        self.objects = {b: BaseObject.fresh(emulation.object_kind, emulation.initial_object_state(b))
                        for b in placement.objects}
        self.history = History()
        self.states: dict[int, object] = {}
        self.pending: dict[int, PendingOp] = {}
        self.next_op_id = 0
        self.queues: dict[int, deque] = {}
        for idx, item in enumerate(self.workload):
            self.queues.setdefault(item.client, deque()).append(idx)
        self.active: dict[int, int] = {}
        self.returned: set[int] = set()
        self.crashed_servers: set[int] = set()
        self.crashed_clients: set[int] = set()
        self._crash_queue = sorted([(t, 0, s) for s, t in self.fault_plan.server_crashes]
                                   + [(t, 1, c) for c, t in self.fault_plan.client_crashes])
        self.decisions = 0
        self.halted = False
        self.listeners: list[Callable] = []
        self.scheduler.attach(self)

    # -- configuration views ------------------------------------------

    @property
    def now(self) -> int:
        return len(self.history)

    def state_of(self, client: int):
        if client not in self.states:
            self.states[client] = self.emulation.initial_state(client)
        return self.states[client]

    def server_of(self, obj: int) -> int:
        return self.placement.delta[obj]

    def enabled_actions(self) -> list[Action]:
        ready, early = [], []
        for client, queue in self.queues.items():
            if not queue or client in self.active or client in self.crashed_clients:
                continue
            item = self.workload[queue[0]]
            if all(d in self.returned for d in item.after):
                (ready if item.at <= self.now else early).append(Action("invoke", queue[0], client))
        ready.sort()
        responds = [Action("respond", p.op_id, p.client, p.object)
                    for p in self.pending.values() if not self.objects[p.object].crashed]
        acts = ready + responds
        if not acts and early:
            acts = sorted(early)
        return acts

    def unfinished(self) -> list[int]:
        """Workload items that have not returned and whose client is still correct."""
        return [i for i, item in enumerate(self.workload)
                if i not in self.returned and item.client not in self.crashed_clients]

    def snapshot(self) -> dict:
        return {
            "t": self.now,
            "pending": [{"op_id": p.op_id, "client": p.client, "object": p.object,
                         "crashed": self.objects[p.object].crashed} for p in self.pending.values()],
            "unfinished": self.unfinished(),
            "crashed_servers": sorted(self.crashed_servers),
            "clients": {c: state_to_json(s) for c, s in sorted(self.states.items())},
        }

    # -- actions -------------------------------------------------------

    def _emit(self, kind, **fields):
        ev = self.history.append(kind, **fields)
        for listener in self.listeners:
            listener(ev, self)
        return ev

    def crash_server(self, server: int) -> "Simulation":
        if server in self.crashed_servers:
            raise ValueError(f"server {server} already crashed")
        if not 0 <= server < self.cfg.n:
            raise ValueError(f"no server {server}")
        self.crashed_servers.add(server)
        for b in self.placement.objects_on(server):
            self.objects[b] = self.objects[b].crash()
        self._emit(CRASH_SERVER, server=server)
        return self

    def crash_client(self, client: int) -> "Simulation":
        self.crashed_clients.add(client)
        self._emit(CRASH_CLIENT, client=client)
        return self

    def _fire_due_crashes(self, force=False):
        while self._crash_queue and (force or self._crash_queue[0][0] <= self.now):
            _, what, who = self._crash_queue.pop(0)
            if what == 0:
                if who not in self.crashed_servers:
                    self.crash_server(who)
            elif who not in self.crashed_clients:
                self.crash_client(who)

    def _run_handler(self, client, fn):
        try:
            step = fn()
        except AutomatonError as exc:
            raise EmulationFailure(client, state_to_json(self.states[client]), exc) from exc
        self.states[client] = step.state
        for trig in step.triggers:
            op_id = self.next_op_id
            self.next_op_id += 1
            self.pending[op_id] = PendingOp(op_id, client, trig.object, trig.op, trig.tag, self.now + 1)
            self._emit(TRIGGER, client=client, server=self.server_of(trig.object), object=trig.object,
                       op=trig.op, op_id=op_id)
        if step.returned:
            self.returned.add(self.active.pop(client))
            self._emit(RETURN, client=client, value=step.result)

    def apply(self, action: Action) -> None:
        self.decisions += 1
        if action.kind == "invoke":
            item = self.workload[action.ref]
            client = item.client
            self.queues[client].popleft()
            self.active[client] = action.ref
            state = self.state_of(client)
            self._emit(INVOKE, client=client, op=item.op)
            self._run_handler(client, lambda: self.emulation.on_invoke(client, state, item.op))
            return
        p = self.pending.pop(action.ref)
        obj, response = apply_base_op(self.objects[p.object], p.op)
        self.objects[p.object] = obj
        self._emit(RESPOND, client=p.client, server=self.server_of(p.object), object=p.object,
                   value=response, op_id=p.op_id)
        if p.client not in self.crashed_clients:
            state = self.state_of(p.client)
            self._run_handler(p.client, lambda: self.emulation.on_respond(p.client, state, p.tag, p.object, response))

    def step(self) -> bool:
        """Take one scheduling decision; False once nothing more will happen."""
        self._fire_due_crashes()
        enabled = self.enabled_actions()
        if not enabled:
            return False
        if self.decisions >= self.step_cap:
            raise StepCapExceeded(f"step cap {self.step_cap} reached at t={self.now}")
        action = self.scheduler.choose(self, enabled, self.rng)
        if action is None:
            self.halted = True
            return False
        self.apply(action)
        return True

    def run(self) -> History:
        while self.step():
            pass
        self._fire_due_crashes(force=True)
        if not self.halted and self.unfinished():
            raise Deadlock(f"run stuck at t={self.now} with unfinished items {self.unfinished()}",
                           self.snapshot())
        return self.history

    def clone(self) -> "Simulation":
        other = copy.copy(self)
        other.objects = dict(self.objects)
        other.history = History(self.history.events)
        other.states = dict(self.states)
        other.pending = dict(self.pending)
        other.queues = {c: deque(q) for c, q in self.queues.items()}
        other.active = dict(self.active)
        other.returned = set(self.returned)
        other.crashed_servers = set(self.crashed_servers)
        other.crashed_clients = set(self.crashed_clients)
        other._crash_queue = list(self._crash_queue)
        other.listeners = []
        return other


def run(cfg, placement, emulation, workload=(), scheduler=None, fault_plan=None, seed=0,
        step_cap=DEFAULT_STEP_CAP) -> History:
    """Execute a workload to quiescence and return its history."""
    return Simulation(cfg, placement, emulation, workload, scheduler, fault_plan, seed, step_cap).run()


def crash_server(sim: Simulation, server: int) -> Simulation:
    return sim.crash_server(server)


def _returns_on(sim: Simulation, action: Action) -> bool:
    """Would delivering this respond make its client return?  Evaluated without side effects."""
    p = sim.pending[action.ref]
    _, response = apply_base_op(sim.objects[p.object], p.op)
    state = sim.state_of(p.client)
    return sim.emulation.on_respond(p.client, state, p.tag, p.object, response).returned


def _commute(sim: Simulation, p: PendingOp, q: PendingOp) -> bool:
    """Both orders of the two low-level ops give the same object state and responses."""
    if p.object != q.object:
        return True
    obj = sim.objects[p.object]
    o1, rp1 = apply_base_op(obj, p.op)
    o1, rq1 = apply_base_op(o1, q.op)
    o2, rq2 = apply_base_op(obj, q.op)
    o2, rp2 = apply_base_op(o2, p.op)
    return o1 == o2 and rp1 == rp2 and rq1 == rq2


def _independent(sim: Simulation, a: Action, b: Action) -> bool:
    # Swapping these two leaves object states, responses and the real-time
    # order of every return against every invoke unchanged.  Two responds may
    # trade places even if one returns: precedence only compares returns with
    # invokes.
    if a.client == b.client:
        return False
    if a.kind == "invoke" and b.kind == "invoke":
        return True
    if a.kind == "respond" and b.kind == "respond":
        return _commute(sim, sim.pending[a.ref], sim.pending[b.ref])
    respond = a if a.kind == "respond" else b
    return not _returns_on(sim, respond)


def explore(cfg, placement, emulation, workload, reduce: bool = True):
    """Yield the history of every interleaving of ``workload`` (no faults).

    With ``reduce`` a sleep-set search yields one interleaving per class of
    histories that differ only by swapping independent neighbouring actions
    (see ``_independent``).  Such histories have the same high-level
    precedence order and the same responses, so any check on them gives the
    same verdict.
    """
    stack = [(Simulation(cfg, placement, emulation, workload, FifoScheduler()), frozenset())]
    while stack:
        sim, sleep = stack.pop()
        enabled = sim.enabled_actions()
        if not enabled:
            if sim.unfinished():
                raise Deadlock("interleaving got stuck", sim.snapshot())
            yield sim.history
            continue
        todo = [a for a in enabled if a not in sleep] if reduce else enabled
        children = []
        done: list[Action] = []
        for action in todo:
            if reduce:
                asleep = frozenset(b for b in itertools.chain(sleep, done) if _independent(sim, action, b))
            else:
                asleep = frozenset()
            children.append((action, asleep))
            done.append(action)
        for i, (action, asleep) in reversed(list(enumerate(children))):
            branch = sim if i == 0 else sim.clone()
            branch.apply(action)
            stack.append((branch, asleep))
