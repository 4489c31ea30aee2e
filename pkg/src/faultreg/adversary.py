"""Respond-blocking adversary that forces a register emulation to leave covered writes behind.

The experiment runs ``k`` sequential high-level writes by the clients
``0..k-1``, one per phase.  A fixed set ``F`` of ``f + 1`` servers plays the
role of the servers that could crash.  During phase ``i`` (which starts at time
``t_start``) the adversary tracks, after every event:

``tr``
    objects with a low-level write triggered during the phase
``rr``
    objects whose low-level write, triggered during the phase, already responded
``cov_i``
    objects covered now but not at ``t_start``
``q``
    ``servers(cov_i) - F`` while that set has at most ``f`` servers; frozen otherwise
``fi``
    servers of ``F`` holding an object in ``rr``
``m``
    ``servers(cov_i) & (F - fi)``
``g``
    ``m`` while ``|q| < |fi|``, else empty

A pending write is blocked when its client completed a write before the phase
began, or when its object sits on a server in ``q | g``.  Blocked writes never
respond.  Everything else is delivered in seeded random order.  Once the
phase's write returns, pending responds on ``F`` are drained until no newly
covered object remains on ``F``; that instant closes the phase.

This exercises the implemented emulations only; it is an empirical check of
the covering behaviour, not a proof about all algorithms.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field

from .emulations import Emulation, make_emulation
from .history import INVOKE, RESPOND, RETURN, TRIGGER, Event, History, count_resources
from .model import CAS, WRITE_OPS, Placement, SystemConfig
from .rng import stream
from .simulator import Deadlock, Scheduler, Simulation, WorkloadItem

FACT_ITEMS = "abcdefghijk"
CLAIM_ITEMS = ("returns", "a", "b", "c", "d", "e")

SCOPE = ("adversarial schedule realized against one concrete emulation; "
         "holding claims are evidence for that emulation, not a general bound")


class ClaimViolation(AssertionError):
    def __init__(self, item: str, phase: int, t: int, detail: str = ""):
        super().__init__(f"{item} violated in phase {phase} at t={t}" + (f": {detail}" if detail else ""))
        self.item = item
        self.phase = phase
        self.t = t
        self.detail = detail


@dataclass
class AdversaryState:
    placement: Placement
    f: int
    F: frozenset
    phase: int = 0
    t_start: int = 0
    t: int = 0
    cov_start: frozenset = frozenset()
    c_prev: frozenset = frozenset()
    tr: set = field(default_factory=set)
    rr: set = field(default_factory=set)
    q: frozenset = frozenset()
    fi: frozenset = frozenset()
    m: frozenset = frozenset()
    g: frozenset = frozenset()
    prev_q: frozenset = frozenset()
    prev_fi: frozenset = frozenset()
    prev_m: frozenset = frozenset()
    pending_writes: dict = field(default_factory=dict)  # op_id -> (object, client)
    phase_ops: set = field(default_factory=set)  # write op ids triggered in this phase
    cov_counts: Counter = field(default_factory=Counter)
    completed: set = field(default_factory=set)
    open_ops: dict = field(default_factory=dict)  # client -> name of its open high-level op
    writer: int | None = None
    writer_returned: bool = False

    # -- derived sets ------------------------------------------------------

    def servers(self, objs) -> frozenset:
        return self.placement.servers_of(objs)

    @property
    def cov(self) -> frozenset:
        return frozenset(b for b, c in self.cov_counts.items() if c > 0)

    @property
    def cov_i(self) -> frozenset:
        return self.cov - self.cov_start

    def blocked_writes(self) -> frozenset:
        silent = self.q | self.g
        return frozenset(op for op, (b, c) in self.pending_writes.items()
                         if c in self.c_prev or self.placement.delta[b] in silent)

    def is_blocked(self, op_id: int) -> bool:
        if op_id not in self.pending_writes:
            return False
        b, c = self.pending_writes[op_id]
        return c in self.c_prev or self.placement.delta[b] in (self.q | self.g)

    # -- updates -----------------------------------------------------------

    def start_phase(self, i: int, t: int, writer: int) -> None:
        self.phase = i
        self.t_start = self.t = t
        self.cov_start = self.cov
        self.c_prev = frozenset(self.completed)
        self.tr, self.rr = set(), set()
        self.q = self.fi = self.m = self.g = frozenset()
        self.prev_q = self.prev_fi = self.prev_m = frozenset()
        self.phase_ops = set()
        self.writer = writer
        self.writer_returned = False

    def observe(self, ev: Event) -> None:
        self.t = ev.t
        if ev.kind == TRIGGER and ev.op[0] in WRITE_OPS:
            self.pending_writes[ev.op_id] = (ev.object, ev.client)
            self.cov_counts[ev.object] += 1
            if self.phase:
                self.tr.add(ev.object)
                self.phase_ops.add(ev.op_id)
        elif ev.kind == RESPOND and ev.op_id in self.pending_writes:
            b, _ = self.pending_writes.pop(ev.op_id)
            self.cov_counts[b] -= 1
            if ev.op_id in self.phase_ops:
                self.rr.add(b)
        elif ev.kind == INVOKE:
            self.open_ops[ev.client] = ev.op[0]
        elif ev.kind == RETURN:
            name = self.open_ops.pop(ev.client, None)
            if name in ("write", "write-max"):
                self.completed.add(ev.client)
            if ev.client == self.writer:
                self.writer_returned = True
        self._recompute()

    def _recompute(self) -> None:
        self.prev_q, self.prev_fi, self.prev_m = self.q, self.fi, self.m
        outside = self.servers(self.cov_i) - self.F
        if len(outside) <= self.f:
            self.q = outside
        self.fi = self.F & self.servers(self.rr)
        self.m = self.servers(self.cov_i) & (self.F - self.fi)
        self.g = self.m if len(self.q) < len(self.fi) else frozenset()

    # -- checks ------------------------------------------------------------

    def facts(self) -> list[str]:
        """Letters of the bookkeeping facts that fail right now."""
        f = self.f
        outside = self.servers(self.cov_i) - self.F
        rr_servers = self.servers(self.rr)
        checks = {
            "a": self.q <= outside,
            "b": self.prev_q <= self.q,
            "c": self.prev_fi <= self.fi,
            "d": len(self.fi) - len(self.q) <= 1,
            "e": len(self.q) <= f,
            "f": len(self.fi) <= f + 1,
            "g": self.prev_fi != self.fi or self.prev_m <= self.m,
            "h": len(self.m) <= f + 1,
            "i": len(outside) < f or len(self.q) >= f,
            "j": len(outside) >= f or not (rr_servers - self.F),
            "k": not ((self.q | self.m) & rr_servers),
        }
        return [k for k in FACT_ITEMS if not checks[k]]

    def phase_claims(self) -> tuple[dict, list[str]]:
        """Measurements at the close of the current phase and the claims they fail."""
        i, f = self.phase, self.f
        cov = self.cov
        triggered = self.servers(self.tr - self.cov_start)
        new_cov = cov - self.cov_start
        record = {
            "i": i,
            "t_start": self.t_start,
            "t_end": self.t,
            "cov_size": len(cov),
            "cov_servers": sorted(self.servers(cov)),
            "triggered_servers": len(triggered),
            "new_cov": len(new_cov),
            "new_cov_servers": len(self.servers(new_cov)),
        }
        checks = {
            "returns": self.writer_returned,
            "a": len(cov) >= i * f,
            "b": not (self.servers(cov) & self.F),
            "c": len(triggered) > 2 * f,
            "d": len(self.servers(new_cov)) >= f,
            "e": cov >= self.cov_start,
        }
        return record, [c for c in CLAIM_ITEMS if not checks[c]]

    @classmethod
    def from_history(cls, history: History, placement: Placement, f: int, F,
                     until: int | None = None) -> tuple["AdversaryState", list[dict], list[dict]]:
        """Replay a covering-experiment history, up to time ``until`` if given.

        A phase starts right before each high-level write invocation and closes
        right before the next one (or at the end).  Returns the state reached,
        the closed phase records and every violated fact or claim.
        """
        st = cls(placement, f, frozenset(F))
        phases, violations = [], []

        def close():
            rec, bad = st.phase_claims()
            phases.append(rec)
            violations.extend({"kind": "claim", "item": c, "phase": st.phase, "t": st.t} for c in bad)

        for ev in history:
            if until is not None and ev.t > until:
                return st, phases, violations
            if ev.kind == INVOKE and ev.op[0] in ("write", "write-max"):
                if st.phase:
                    close()
                st.start_phase(st.phase + 1, ev.t - 1, ev.client)
            if ev.kind == RESPOND and st.is_blocked(ev.op_id):
                violations.append({"kind": "blocked-respond", "item": ev.op_id, "phase": st.phase, "t": ev.t})
            st.observe(ev)
            if st.phase:
                violations.extend({"kind": "fact", "item": x, "phase": st.phase, "t": ev.t} for x in st.facts())
        if st.phase:
            close()
        return st, phases, violations


class Adversary(Scheduler):
    """Scheduler driving one write per phase under the blocking rules above."""

    def __init__(self, cfg: SystemConfig, placement: Placement, F, strict: bool = True):
        F = frozenset(F)
        if len(F) != cfg.f + 1 or not F <= set(cfg.servers):
            raise ValueError(f"F must be {cfg.f + 1} distinct servers out of {cfg.n}, got {sorted(F)}")
        self.cfg = cfg
        self.state = AdversaryState(placement, cfg.f, F)
        self.strict = strict
        self.mode = "start"
        self.phases: list[dict] = []
        self.violations: list[dict] = []

    def attach(self, sim):
        sim.listeners.append(self.observe)

    def _violate(self, kind, item, detail=""):
        st = self.state
        self.violations.append({"kind": kind, "item": item, "phase": st.phase, "t": st.t})
        if self.strict:
            raise ClaimViolation(f"{kind} {item}", st.phase, st.t, detail)

    def observe(self, ev: Event, sim) -> None:
        st = self.state
        st.observe(ev)
        if st.phase:
            for x in st.facts():
                self._violate("fact", x)

    def _close_phase(self):
        record, bad = self.state.phase_claims()
        self.phases.append(record)
        for c in bad:
            self._violate("claim", c, json.dumps(record))

    def choose(self, sim: Simulation, enabled, rng):
        st = self.state
        if self.mode == "start":
            i = st.phase + 1
            invoke = next((a for a in enabled if a.kind == "invoke" and a.ref == i - 1), None)
            if invoke is None:
                raise Deadlock(f"write of phase {i} cannot be invoked", sim.snapshot())
            st.start_phase(i, sim.now, invoke.client)
            self.mode = "running"
            return invoke
        responds = [a for a in enabled if a.kind == "respond" and not st.is_blocked(a.ref)]
        if self.mode == "running" and st.writer_returned:
            self.mode = "draining"
        if self.mode == "running":
            if not responds:
                raise Deadlock(f"phase {st.phase} write waits only on blocked writes", sim.snapshot())
            return responds[int(rng.integers(len(responds)))]
        # draining: empty F of newly covered objects, then close the phase
        on_f = [a for a in responds if sim.server_of(a.object) in st.F]
        if st.servers(st.cov_i) & st.F and on_f:
            return on_f[int(rng.integers(len(on_f)))]
        self._close_phase()
        if st.phase == self.cfg.k:
            return None
        self.mode = "start"
        return self.choose(sim, sim.enabled_actions(), rng)

    def finish(self):
        # the run can end with nothing enabled before choose sees the last phase out
        if self.state.phase and len(self.phases) < self.state.phase:
            self._close_phase()


@dataclass
class CoveringReport:
    n: int
    f: int
    k: int
    emulation: str
    F: list
    seed: int
    phases: list
    resources_used: int
    point_contention_max: int
    violations: list
    history: History = field(repr=False, default=None)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "n": self.n, "f": self.f, "k": self.k, "emulation": self.emulation, "seed": self.seed,
            "F": self.F, "phases": self.phases, "resources_used": self.resources_used,
            "point_contention_max": self.point_contention_max, "violations": self.violations,
            "scope": SCOPE,
        }


def phase_workload(emulation: Emulation, k: int, values=None) -> list[WorkloadItem]:
    name = "write-max" if emulation.object_kind == CAS else "write"
    values = values or [i + 1 for i in range(k)]
    return [WorkloadItem(i, (name, values[i]), after=(i - 1,) if i else ()) for i in range(k)]


def run_covering_experiment(cfg: SystemConfig, F, emulation="rw-register", placement=None, seed: int = 0,
                            strict: bool = True, step_cap: int = 10**6) -> CoveringReport:
    emu = make_emulation(emulation, cfg, placement) if isinstance(emulation, str) else emulation
    adv = Adversary(cfg, emu.placement, F, strict=strict)
    sim = Simulation(cfg, emu.placement, emu, phase_workload(emu, cfg.k), adv, seed=seed, step_cap=step_cap)
    history = sim.run()
    adv.finish()
    return CoveringReport(
        n=cfg.n, f=cfg.f, k=cfg.k, emulation=emu.name, F=sorted(adv.state.F), seed=seed,
        phases=adv.phases, resources_used=count_resources(history),
        point_contention_max=history.point_contention(), violations=adv.violations, history=history,
    )


def select_F(cfg: SystemConfig, how="all", seed: int = 0, limit: int = 20) -> list[tuple[int, ...]]:
    """Candidate sets F: every ``(f+1)``-subset, or ``limit`` sampled ones when there are more."""
    combos = list(itertools.combinations(range(cfg.n), cfg.f + 1))
    if how == "all" and len(combos) <= limit:
        return combos
    if how == "all":
        how = limit
    count = min(int(how), len(combos))
    picks = stream(seed, "F").choice(len(combos), size=count, replace=False)
    return [combos[i] for i in sorted(picks)]
