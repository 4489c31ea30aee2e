"""Consistency verdicts over histories.

``check_atomic`` is a Wing-Gong style backtracking search for a linearization,
memoized on (set of linearized ops, object state).  The write-sequential checks
exploit that writes form a chain under real-time precedence, so for each read
only its position in the chain has to be searched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple, Sequence

from .history import History, HighOp, LowOp, _thaw, count_resources
from .model import CAS, INITIAL_TSVAL, MAX_REGISTER, REGISTER, V0, BaseObject

DEFAULT_BOUND = 12

__all__ = [
    "Cas", "DEFAULT_BOUND", "MaxRegister", "Op", "Register", "Verdict", "check_atomic",
    "check_high_level", "check_objects", "check_ws_regular", "check_ws_safe", "count_resources",
    "spec_for", "is_write_sequential",
]


class Op(NamedTuple):
    id: int
    name: str
    arg: Any
    invoke: int
    ret: int | None
    result: Any

    @property
    def complete(self) -> bool:
        return self.ret is not None

    def to_json(self) -> dict:
        return {"id": self.id, "op": self.name, "arg": _thaw(self.arg), "invoke": self.invoke,
                "return": self.ret, "result": _thaw(self.result)}

    @classmethod
    def from_high(cls, o: HighOp) -> "Op":
        return cls(o.id, o.name, o.arg, o.invoke, o.ret, o.result)

    @classmethod
    def from_low(cls, o: LowOp) -> "Op":
        name, *args = o.op
        arg = tuple(args) if name == "cas" else (args[0] if args else None)
        return cls(o.op_id, name, arg, o.trigger, o.respond, o.value)


# -- sequential specifications ------------------------------------------------

class Register:
    """Read/write register; ``write`` answers ``ack``."""

    writes = ("write",)

    def __init__(self, initial=V0, ack="ack"):
        self.initial = initial
        self.ack = ack

    def apply(self, state, name, arg):
        if name == "write":
            return arg, self.ack
        if name == "read":
            return state, state
        raise ValueError(f"register has no operation {name!r}")


class MaxRegister:
    writes = ("write-max",)

    def __init__(self, initial=V0):
        self.initial = initial

    def apply(self, state, name, arg):
        if name == "write-max":
            return max(state, arg), "ok"
        if name == "read-max":
            return state, state
        raise ValueError(f"max-register has no operation {name!r}")


class Cas:
    writes = ("cas",)

    def __init__(self, initial=V0):
        self.initial = initial

    def apply(self, state, name, arg):
        if name != "cas":
            raise ValueError(f"CAS object has no operation {name!r}")
        exp, new = arg
        return (new if state == exp else state), state


def spec_for(kind: str, initial=None):
    cls = {REGISTER: Register, MAX_REGISTER: MaxRegister, CAS: Cas}[kind]
    return cls() if initial is None else cls(initial)


# -- verdicts -----------------------------------------------------------------

@dataclass
class Verdict:
    passed: bool | None
    witness: Any = None
    violating_read: dict | None = None
    inconclusive: bool = False
    not_applicable: bool = False
    reason: str = ""

    def __bool__(self):
        return bool(self.passed)

    def to_json(self) -> dict:
        out: dict = {"pass": self.passed}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.violating_read is not None:
            out["violating_read"] = self.violating_read
        if self.inconclusive:
            out["inconclusive"] = True
        if self.not_applicable:
            out["not_applicable"] = True
        if self.reason:
            out["reason"] = self.reason
        return out


def _inconclusive(size, bound):
    return Verdict(None, inconclusive=True, reason=f"{size} operations exceed search bound {bound}")


# -- atomicity ----------------------------------------------------------------

def check_atomic(ops: Sequence, spec, bound: int = DEFAULT_BOUND) -> Verdict:
    """Search for a linearization of ``ops`` (pending ops optional) under ``spec``."""
    ops = [o if isinstance(o, Op) else Op.from_high(o) if isinstance(o, HighOp) else Op.from_low(o) for o in ops]
    if len(ops) > bound:
        return _inconclusive(len(ops), bound)
    ops.sort(key=lambda o: o.invoke)
    complete_mask = sum(1 << i for i, o in enumerate(ops) if o.complete)
    failed: set = set()

    def search(done, state):
        if done & complete_mask == complete_mask:
            return []
        key = (done, state)
        if key in failed:
            return None
        horizon = min(o.ret for i, o in enumerate(ops) if o.complete and not done >> i & 1)
        for i, o in enumerate(ops):
            if done >> i & 1:
                continue
            if o.invoke > horizon:
                break
            new_state, res = spec.apply(state, o.name, o.arg)
            if o.complete and res != o.result:
                continue
            rest = search(done | 1 << i, new_state)
            if rest is not None:
                return [(o, res)] + rest
        failed.add(key)
        return None

    order = search(0, spec.initial)
    if order is None:
        return Verdict(False, reason="no linearization exists")
    witness = [{"id": o.id, "op": o.name, "arg": _thaw(o.arg), "result": _thaw(r)} for o, r in order]
    return Verdict(True, witness=witness)


def infer_initial(kind: str, ops) -> Any:
    """Starting state of an object, guessed from the shape of the values it carries.

    Emulations that store ``(timestamp, value)`` pairs start their objects at
    ``((0, 0), v0)``; everything else starts at ``v0``.
    """
    for o in ops:
        seen = o.value if o.respond is not None and not o.is_write else (o.op[1] if len(o.op) > 1 else None)
        if isinstance(seen, tuple):
            return INITIAL_TSVAL
        if seen is not None and seen not in ("ack", "ok"):
            return V0
    return BaseObject.fresh(kind).state


def check_objects(history: History, kind: str, bound: int = DEFAULT_BOUND, initial=None,
                  objects=None) -> dict[int, Verdict]:
    """Atomicity verdict of every base object's subhistory (or just ``objects``)."""
    by_obj: dict[int, list] = {}
    for o in history.low_level_ops():
        if objects is None or o.object in objects:
            by_obj.setdefault(o.object, []).append(o)
    out = {}
    for b, ops in sorted(by_obj.items()):
        spec = spec_for(kind, infer_initial(kind, ops) if initial is None else initial)
        out[b] = check_atomic(ops, spec, bound)
    return out


def check_high_level(history: History, spec, bound: int = DEFAULT_BOUND) -> Verdict:
    return check_atomic(history.high_level_ops(), spec, bound)


# -- write-sequential checks --------------------------------------------------

WRITE_NAMES = ("write", "write-max")


def _split(ops):
    writes = sorted((o for o in ops if o.name in WRITE_NAMES), key=lambda o: o.invoke)
    reads = [o for o in ops if o.name not in WRITE_NAMES]
    return writes, reads


def is_write_sequential(ops: Sequence[HighOp]) -> bool:
    writes, _ = _split(ops)
    return all(a.precedes(b) for a, b in zip(writes, writes[1:]))


def _placements(read: HighOp, writes: list[HighOp], v0):
    """Chain positions p (read after the first p writes) consistent with precedence and value."""
    out = []
    for p in range(len(writes) + 1):
        if any(read.precedes(w) for w in writes[:p]):
            break
        if any(w.precedes(read) for w in writes[p:]):
            continue
        value = writes[p - 1].arg if p else v0
        if value == read.result:
            out.append(p)
    return out


def _ws_check(history, v0, bound, only_isolated):
    ops = history.high_level_ops() if isinstance(history, History) else list(history)
    writes, reads = _split(ops)
    if not is_write_sequential(ops):
        return Verdict(True, not_applicable=True, reason="history is not write-sequential")
    if len(writes) + 1 > bound:
        return _inconclusive(len(writes) + 1, bound)
    witness = {}
    for rd in sorted((r for r in reads if r.complete), key=lambda r: (r.ret, r.id)):
        if only_isolated and any(rd.concurrent(w) for w in writes):
            continue
        spots = _placements(rd, writes, v0)
        if not spots:
            return Verdict(False, violating_read=rd.to_json(),
                           reason=f"read {rd.id} returned {rd.result!r}, which no placement among the writes explains")
        witness[str(rd.id)] = [w.id for w in writes[:spots[0]]] + [rd.id] + [w.id for w in writes[spots[0]:]]
    return Verdict(True, witness=witness)


def check_ws_regular(history, v0=V0, bound: int = DEFAULT_BOUND) -> Verdict:
    """Every complete read linearizes together with all writes.

    The witness maps each read id to its linearization (op ids in order).
    Histories whose writes are not totally ordered pass vacuously with
    ``not_applicable`` set.
    """
    return _ws_check(history, v0, bound, only_isolated=False)


def check_ws_safe(history, v0=V0, bound: int = DEFAULT_BOUND) -> Verdict:
    """Like ``check_ws_regular`` but only for reads not concurrent with any write."""
    return _ws_check(history, v0, bound, only_isolated=True)
