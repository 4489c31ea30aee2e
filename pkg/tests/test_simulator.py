import pytest
from hypothesis import given, settings, strategies as st

from faultreg.checkers import check_objects
from faultreg.emulations import make_emulation
from faultreg.history import RESPOND, covered_set
from faultreg.model import SystemConfig
from faultreg.simulator import (BlockingScheduler, Deadlock, EmulationFailure, FaultPlan, FifoScheduler,
                                Simulation, StepCapExceeded, WorkloadItem, crash_server, run)

CFG = SystemConfig(3, 1, 1)


def rw(cfg=CFG):
    return make_emulation("rw-register", cfg)


def sim_for(workload, cfg=CFG, **kw):
    emu = rw(cfg)
    return Simulation(cfg, emu.placement, emu, workload, **kw)


def test_single_write_returns_after_two_write_acks():
    h = sim_for([WorkloadItem(0, ("write", 7))]).run()
    kinds = [e.kind for e in h]
    assert kinds.count("invoke") == 1 and kinds.count("return") == 1
    ret_t = next(e.t for e in h if e.kind == "return")
    write_ids = {e.op_id for e in h if e.kind == "trigger" and e.op[0] == "write"}
    acked = [e for e in h if e.kind == RESPOND and e.op_id in write_ids and e.t < ret_t]
    assert len(acked) >= 2


def test_write_survives_early_crash():
    h = sim_for([WorkloadItem(0, ("write", 7))], fault_plan=FaultPlan(((1, 0),))).run()
    assert h.events[0].kind == "crash_server"
    assert any(e.kind == "return" for e in h)


def test_empty_workload():
    assert len(sim_for([]).run()) == 0


class TestCrashes:
    def test_read_on_crashed_server_stays_pending(self):
        sim = sim_for([WorkloadItem(1, ("read",))])
        crash_server(sim, 0)
        h = sim.run()
        stuck = [o for o in h.pending() if o.server == 0]
        assert stuck and all(o.op == ("read",) for o in stuck)
        assert not any(e.kind == RESPOND and e.server == 0 for e in h)

    def test_crash_without_pending_ops(self):
        sim = sim_for([])
        crash_server(sim, 2)
        assert [e.kind for e in sim.history] == ["crash_server"]

    def test_double_crash_rejected(self):
        sim = sim_for([])
        crash_server(sim, 2)
        with pytest.raises(ValueError):
            crash_server(sim, 2)

    def test_written_state_persists_after_crash(self):
        sim = sim_for([WorkloadItem(0, ("write", 7)), WorkloadItem(1, ("read",), after=(0,))],
                      scheduler=FifoScheduler())
        while not sim.returned:
            sim.step()
        target = next(b for b in sim.placement.objects if sim.objects[b].state.val == 7)
        crash_server(sim, sim.server_of(target))
        h = sim.run()
        assert sim.objects[target].crashed and sim.objects[target].state.val == 7
        assert h.high_level_ops()[1].result == 7

    def test_too_many_crashes_deadlock(self):
        sim = sim_for([WorkloadItem(0, ("write", 7))], fault_plan=FaultPlan(((0, 0), (1, 0))))
        with pytest.raises(Deadlock) as err:
            sim.run()
        assert err.value.snapshot["unfinished"] == [0]
        assert err.value.snapshot["crashed_servers"] == [0, 1]

    def test_parse(self):
        assert FaultPlan.parse(["1@5", "0@0"]).server_crashes == ((1, 5), (0, 0))
        with pytest.raises(ValueError):
            FaultPlan.parse(["1:5"])

    def test_client_crash_abandons_its_op(self):
        plan = FaultPlan(client_crashes=((0, 1),))
        h = sim_for([WorkloadItem(0, ("write", 7)), WorkloadItem(1, ("read",))], fault_plan=plan).run()
        assert "crash_client" in [e.kind for e in h]


def test_step_cap():
    with pytest.raises(StepCapExceeded):
        sim_for([WorkloadItem(0, ("write", 7))], step_cap=3).run()


def test_automaton_error_surfaces_client():
    with pytest.raises(EmulationFailure) as err:
        sim_for([WorkloadItem(5, ("write", 1))]).run()
    assert err.value.client == 5


def test_earliest_invoke_time_respected():
    h = sim_for([WorkloadItem(0, ("write", 1)), WorkloadItem(1, ("read",), at=12)]).run()
    read_invoke = next(e for e in h if e.kind == "invoke" and e.client == 1)
    assert read_invoke.t > 12


def test_blocked_respond_never_delivered():
    sim = sim_for([WorkloadItem(0, ("write", 9))],
                  scheduler=BlockingScheduler(lambda p: p.op[0] == "write" and p.object == 2))
    h = sim.run()
    assert any(e.kind == "return" for e in h)
    assert covered_set(h, len(h)) == {2}


@pytest.mark.parametrize("name,cfg", [("rw-register", SystemConfig(5, 2, 2)), ("abd-max", SystemConfig(5, 2, 2)),
                                      ("cas-max", SystemConfig(3, 1, 2))])
def test_determinism(name, cfg):
    emu = make_emulation(name, cfg)
    op = ("write-max", 3) if name == "cas-max" else ("write", 3)
    rd = ("read-max",) if name == "cas-max" else ("read",)
    wl = [WorkloadItem(0, op), WorkloadItem(1, op), WorkloadItem(2, rd, at=4)]
    first = run(cfg, emu.placement, emu, wl, seed=11).to_jsonl()
    assert run(cfg, emu.placement, emu, wl, seed=11).to_jsonl() == first
    assert any(run(cfg, emu.placement, emu, wl, seed=s).to_jsonl() != first for s in range(12, 20))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**40), st.sampled_from([0, 1, 2]))
def test_run_properties(seed, crashed):
    cfg = SystemConfig(5, 2, 2)
    emu = rw(cfg)
    wl = [WorkloadItem(0, ("write", 1)), WorkloadItem(1, ("write", 2), after=(0,)),
          WorkloadItem(2, ("read",), at=10), WorkloadItem(3, ("read",), at=30)]
    plan = FaultPlan(tuple((s, 15 * s) for s in range(crashed)))
    sim = Simulation(cfg, emu.placement, emu, wl, fault_plan=plan, seed=seed)
    h = sim.run()
    # fairness: nothing pending on a correct object at the end
    assert all(sim.objects[o.object].crashed for o in h.pending())
    # covering only shrinks when a write responds
    writes = {e.op_id for e in h if e.kind == "trigger" and e.op[0] == "write"}
    for ev in h:
        if not (ev.kind == RESPOND and ev.op_id in writes):
            assert covered_set(h, ev.t - 1) <= covered_set(h, ev.t)
    # every object subhistory is atomic under respond-point semantics
    assert all(v.passed for v in check_objects(h, emu.object_kind, bound=64).values())
    # at most one respond per op, never before its trigger
    triggered = {}
    for ev in h:
        if ev.kind == "trigger":
            triggered[ev.op_id] = ev.t
        elif ev.kind == RESPOND:
            assert triggered.pop(ev.op_id) < ev.t
