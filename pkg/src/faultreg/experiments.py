"""Seeded randomized trials shared by the CLI and the test suites."""

from __future__ import annotations

from dataclasses import dataclass, field

from .checkers import Verdict, check_objects, check_ws_regular, check_ws_safe
from .emulations import make_emulation
from .history import History, count_resources
from .model import SystemConfig
from .rng import stream
from .simulator import FairRandomScheduler, FaultPlan, Simulation
from .workloads import random_fault_plan, write_sequential_workload


@dataclass
class Trial:
    emulation: str
    cfg: SystemConfig
    seed: int
    history: History
    fault_plan: FaultPlan
    regular: Verdict
    safe: Verdict
    objects: dict = field(default_factory=dict)

    @property
    def resources(self) -> int:
        return count_resources(self.history)

    @property
    def objects_ok(self) -> bool:
        return all(v.passed for v in self.objects.values())


def ws_trial(emulation: str, cfg: SystemConfig, seed: int, max_writes: int = 4, max_reads: int = 4,
             crashes: bool = True, object_bound: int = 64) -> Trial:
    """One fair-random run of a write-sequential workload with up to f server crashes."""
    emu = make_emulation(emulation, cfg)
    workload = write_sequential_workload(cfg, stream(seed, "workload"), max_writes, max_reads)
    servers = sorted({emu.placement.delta[b] for b in emu.placement.objects})
    plan = random_fault_plan(cfg, stream(seed, "faults"), servers=servers) if crashes else FaultPlan()
    sim = Simulation(cfg, emu.placement, emu, workload, FairRandomScheduler(), plan, seed=seed)
    history = sim.run()
    initial = emu.initial_object_state(emu.placement.objects[0])
    objects = check_objects(history, emu.object_kind, object_bound, initial) if object_bound else {}
    return Trial(emulation, cfg, seed, history, plan, check_ws_regular(history), check_ws_safe(history), objects)
