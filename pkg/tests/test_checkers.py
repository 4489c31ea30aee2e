import itertools

import pytest
from hypothesis import given, settings, strategies as st

from faultreg.checkers import (Cas, MaxRegister, Op, Register, check_atomic, check_objects, check_ws_regular,
                               check_ws_safe, is_write_sequential)
from faultreg.history import History
from faultreg.model import V0


def history_of(ops):
    """Build a high-level history from ``(name, arg, invoke_slot, return_slot|None, result)``.

    Each op gets its own client; slots order the events.
    """
    events = []
    for client, (name, arg, inv, ret, res) in enumerate(ops):
        op = (name,) if arg is None else (name, arg)
        events.append((inv, "invoke", dict(client=client, op=op)))
        if ret is not None:
            events.append((ret, "return", dict(client=client, value=res)))
    h = History()
    for _, kind, fields in sorted(events, key=lambda e: e[0]):
        h.append(kind, **fields)
    return h


def seq(*ops):
    # sequential ops, one after another
    return history_of([(n, a, 2 * i, 2 * i + 1, r) for i, (n, a, r) in enumerate(ops)])


class TestAtomic:
    def test_sequential_register(self):
        h = seq(("write", 1, "ack"), ("read", None, 1))
        assert check_atomic(h.high_level_ops(), Register()).passed

    def test_concurrent_write_max(self):
        h = history_of([("write-max", 2, 0, 3, "ok"), ("write-max", 7, 1, 2, "ok"), ("read-max", None, 4, 5, 7)])
        v = check_atomic(h.high_level_ops(), MaxRegister())
        assert v.passed
        assert [w["op"] for w in v.witness][-1] == "read-max"

    def test_unwritten_value(self):
        h = seq(("write", 1, "ack"), ("read", None, 5))
        v = check_atomic(h.high_level_ops(), Register())
        assert v.passed is False and not v.inconclusive

    def test_pending_write_may_take_effect(self):
        h = history_of([("write", 4, 0, None, None), ("read", None, 1, 2, 4), ("read", None, 3, 4, 4)])
        assert check_atomic(h.high_level_ops(), Register()).passed

    def test_pending_write_may_be_dropped(self):
        h = history_of([("write", 4, 0, None, None), ("read", None, 1, 2, V0)])
        assert check_atomic(h.high_level_ops(), Register()).passed

    def test_new_old_inversion_fails(self):
        h = history_of([("write", 4, 0, 9, "ack"), ("read", None, 1, 2, 4), ("read", None, 3, 4, V0)])
        assert check_atomic(h.high_level_ops(), Register()).passed is False

    def test_inconclusive_above_bound(self):
        h = seq(*[("write", i, "ack") for i in range(13)])
        v = check_atomic(h.high_level_ops(), Register())
        assert v.inconclusive and v.passed is None
        assert check_atomic(h.high_level_ops(), Register(), bound=13).passed

    def test_cas_spec(self):
        ops = [Op(0, "cas", (0, 5), 1, 2, 0), Op(1, "cas", (0, 9), 3, 4, 5)]
        assert check_atomic(ops, Cas()).passed
        assert not check_atomic([Op(0, "cas", (0, 5), 1, 2, 3)], Cas()).passed


def _brute_force(ops, spec):
    # try every subset of pending ops and every order; keep orders that respect precedence
    complete = [o for o in ops if o.complete]
    pending = [o for o in ops if not o.complete]
    for r in range(len(pending) + 1):
        for extra in itertools.combinations(pending, r):
            for order in itertools.permutations(complete + list(extra)):
                if any(b.ret is not None and b.ret < a.invoke for i, a in enumerate(order) for b in order[i + 1:]):
                    continue
                state, ok = spec.initial, True
                for o in order:
                    state, res = spec.apply(state, o.name, o.arg)
                    if o.complete and res != o.result:
                        ok = False
                        break
                if ok:
                    return True
    return False


@st.composite
def small_histories(draw, kind="register"):
    count = draw(st.integers(1, 5))
    slots = draw(st.permutations(list(range(2 * count))))
    ops = []
    values = [1, 2, 3]
    for i in range(count):
        a, b = sorted(slots[2 * i: 2 * i + 2])
        pending = draw(st.booleans()) and draw(st.booleans())
        is_write = draw(st.booleans())
        if kind == "register":
            name, arg = ("write", draw(st.sampled_from(values))) if is_write else ("read", None)
            res = "ack" if is_write else draw(st.sampled_from([V0] + values))
        else:
            name, arg = ("write-max", draw(st.sampled_from(values))) if is_write else ("read-max", None)
            res = "ok" if is_write else draw(st.sampled_from([V0] + values))
        ops.append((name, arg, a, None if pending else b, None if pending else res))
    return history_of(ops)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(["register", "max"]).flatmap(lambda k: st.tuples(st.just(k), small_histories(k))))
def test_atomic_matches_brute_force(case):
    kind, h = case
    spec = Register() if kind == "register" else MaxRegister()
    ops = [Op.from_high(o) for o in h.high_level_ops()]
    v = check_atomic(ops, spec)
    assert bool(v.passed) == _brute_force(ops, spec)
    if v.passed:
        # witness replays through the object semantics and respects real-time order
        by_id = {o.id: o for o in ops}
        state = spec.initial
        placed = []
        for step in v.witness:
            o = by_id[step["id"]]
            state, res = spec.apply(state, o.name, o.arg)
            assert res == step["result"]
            if o.complete:
                assert res == o.result
            assert not any(o.ret is not None and o.ret < p.invoke for p in placed)
            placed.append(o)
        assert {o.id for o in ops if o.complete} <= {s["id"] for s in v.witness}


class TestWsRegular:
    def test_read_after_write(self):
        assert check_ws_regular(seq(("write", 1, "ack"), ("read", None, 1))).passed

    def test_stale_read(self):
        h = seq(("write", 1, "ack"), ("read", None, V0))
        v = check_ws_regular(h)
        assert v.passed is False and v.violating_read["id"] == 1
        assert check_ws_safe(h).passed is False

    @pytest.mark.parametrize("value,ok", [(1, True), (2, True), (V0, False)])
    def test_read_concurrent_with_second_write(self, value, ok):
        h = history_of([("write", 1, 0, 1, "ack"), ("write", 2, 2, 5, "ack"), ("read", None, 3, 4, value)])
        assert check_ws_regular(h).passed is ok

    def test_pending_last_write(self):
        h = history_of([("write", 1, 0, 1, "ack"), ("write", 2, 2, None, None), ("read", None, 3, 4, 2)])
        assert check_ws_regular(h).passed

    def test_not_write_sequential(self):
        h = history_of([("write", 1, 0, 3, "ack"), ("write", 2, 1, 2, "ack"), ("read", None, 4, 5, 9)])
        v = check_ws_regular(h)
        assert not is_write_sequential(h.high_level_ops())
        assert v.not_applicable and v.passed

    def test_witness_is_a_linearization(self):
        h = history_of([("write", 1, 0, 1, "ack"), ("write", 2, 2, 5, "ack"), ("read", None, 3, 4, 1)])
        assert check_ws_regular(h).witness == {"2": [0, 2, 1]}

    def test_each_read_judged_alone(self):
        # two readers disagree on order, which regularity (unlike atomicity) allows
        h = history_of([("write", 1, 0, 1, "ack"), ("write", 2, 2, 9, "ack"),
                        ("read", None, 3, 4, 2), ("read", None, 5, 6, 1)])
        assert check_ws_regular(h).passed
        assert check_atomic(h.high_level_ops(), Register()).passed is False

    def test_bound(self):
        h = seq(*[("write", i, "ack") for i in range(1, 13)], ("read", None, 12))
        assert check_ws_regular(h).inconclusive
        assert check_ws_regular(h, bound=13).passed


class TestWsSafe:
    def test_concurrent_read_unconstrained(self):
        h = history_of([("write", 1, 0, 3, "ack"), ("read", None, 1, 2, 99)])
        assert check_ws_safe(h).passed
        assert check_ws_regular(h).passed is False

    def test_isolated_read_latest(self):
        assert check_ws_safe(seq(("write", 1, "ack"), ("write", 2, "ack"), ("read", None, 2))).passed

    def test_isolated_read_unwritten(self):
        assert check_ws_safe(seq(("write", 1, "ack"), ("read", None, 7))).passed is False


@st.composite
def ws_histories(draw):
    # write chain with reads sprinkled at random slots
    n_writes = draw(st.integers(0, 3))
    ops, t = [], 0
    for i in range(n_writes):
        ops.append(("write", i + 1, t, t + 3, "ack"))
        t += 4
    for _ in range(draw(st.integers(1, 3))):
        a = draw(st.integers(0, t + 1))
        b = a + draw(st.integers(1, 6))
        ops.append(("read", None, a + 0.5, b + 0.25, draw(st.sampled_from([V0, 1, 2, 3, 42]))))
    return history_of(ops)


@settings(max_examples=300, deadline=None)
@given(ws_histories())
def test_regular_implies_safe_and_atomic_implies_regular(h):
    reg, safe = check_ws_regular(h), check_ws_safe(h)
    if reg.passed:
        assert safe.passed
    if check_atomic(h.high_level_ops(), Register()).passed:
        assert reg.passed


def test_object_subhistories_of_a_run():
    from faultreg.emulations import make_emulation
    from faultreg.model import SystemConfig
    from faultreg.simulator import WorkloadItem, run

    cfg = SystemConfig(3, 1, 2)
    for name in ("rw-register", "abd-max"):
        emu = make_emulation(name, cfg)
        h = run(cfg, emu.placement, emu, [WorkloadItem(0, ("write", 1)), WorkloadItem(1, ("write", 2)),
                                          WorkloadItem(2, ("read",))], seed=4)
        verdicts = check_objects(h, emu.object_kind, bound=64)
        assert verdicts and all(v.passed for v in verdicts.values())
