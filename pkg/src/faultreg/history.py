"""Event log of a run and the views derived from it.

Event times are 1-based: the event with ``t == 5`` is the fifth action, and
"time t" means the configuration reached after it.  ``covered_set(h, 0)`` is
therefore always empty.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable

from .model import WRITE_OPS

INVOKE = "invoke"
RETURN = "return"
TRIGGER = "trigger"
RESPOND = "respond"
CRASH_SERVER = "crash_server"
CRASH_CLIENT = "crash_client"
EVENT_KINDS = (INVOKE, RETURN, TRIGGER, RESPOND, CRASH_SERVER, CRASH_CLIENT)

_FIELDS = ("t", "kind", "client", "server", "object", "op", "value", "op_id")


class HistoryFormatError(ValueError):
    pass


def freeze(value):
    """Turn decoded JSON lists back into (hashable) tuples."""
    if isinstance(value, list):
        return tuple(freeze(v) for v in value)
    if isinstance(value, dict):
        if set(value) == {"bytes"}:
            return bytes.fromhex(value["bytes"])
        raise HistoryFormatError(f"unexpected object value {value!r}")
    return value


def _thaw(value):
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    if isinstance(value, (bytes, bytearray)):
        return {"bytes": bytes(value).hex()}
    return value


@dataclass(frozen=True)
class Event:
    t: int
    kind: str
    client: int | None = None
    server: int | None = None
    object: int | None = None
    op: tuple | None = None
    value: Any = None
    op_id: int | None = None

    def to_dict(self) -> dict:
        out = {}
        for name in _FIELDS:
            v = getattr(self, name)
            if v is None and name not in ("t", "kind"):
                continue
            out[name] = _thaw(v)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        unknown = set(d) - set(_FIELDS)
        if unknown or "t" not in d or d.get("kind") not in EVENT_KINDS:
            raise HistoryFormatError(f"bad event record {d!r}")
        return cls(**{k: freeze(v) for k, v in d.items()})


@dataclass(frozen=True)
class HighOp:
    """A high-level operation as seen in a history."""

    id: int
    client: int
    name: str
    arg: Any
    invoke: int
    ret: int | None = None
    result: Any = None

    @property
    def complete(self) -> bool:
        return self.ret is not None

    def precedes(self, other: "HighOp") -> bool:
        return self.ret is not None and self.ret < other.invoke

    def concurrent(self, other: "HighOp") -> bool:
        return not self.precedes(other) and not other.precedes(self)

    def to_json(self) -> dict:
        return {"id": self.id, "client": self.client, "op": self.name, "arg": _thaw(self.arg),
                "invoke": self.invoke, "return": self.ret, "result": _thaw(self.result)}


@dataclass(frozen=True)
class LowOp:
    op_id: int
    client: int
    object: int
    server: int
    op: tuple
    trigger: int
    respond: int | None = None
    value: Any = None

    @property
    def is_write(self) -> bool:
        return self.op[0] in WRITE_OPS


class History:
    def __init__(self, events: Iterable[Event] = ()):
        self.events: list[Event] = list(events)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __eq__(self, other):
        return isinstance(other, History) and self.events == other.events

    def append(self, kind: str, **fields) -> Event:
        ev = Event(t=len(self.events) + 1, kind=kind, **fields)
        self.events.append(ev)
        return ev

    def prefix(self, t: int) -> "History":
        return History(self.events[:t])

    # -- serialization -------------------------------------------------

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), separators=(",", ":")) + "\n" for e in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> "History":
        events = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                events.append(Event.from_dict(json.loads(line)))
            except (json.JSONDecodeError, TypeError) as exc:
                raise HistoryFormatError(f"line {lineno}: {exc}") from exc
        for i, ev in enumerate(events, 1):
            if ev.t != i:
                raise HistoryFormatError(f"event {i} carries t={ev.t}")
        return cls(events)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def load(cls, path) -> "History":
        with open(path) as fh:
            return cls.from_jsonl(fh.read())

    # -- derived views -------------------------------------------------

    def high_level_ops(self) -> list[HighOp]:
        """Pair each Invoke with the next Return of the same client."""
        ops: list[HighOp] = []
        open_ops: dict[int, int] = {}
        for ev in self.events:
            if ev.kind == INVOKE:
                if ev.client in open_ops:
                    raise HistoryFormatError(f"client {ev.client} invoked twice at t={ev.t}")
                name, *rest = ev.op
                open_ops[ev.client] = len(ops)
                ops.append(HighOp(len(ops), ev.client, name, rest[0] if rest else None, ev.t))
            elif ev.kind == RETURN:
                idx = open_ops.pop(ev.client, None)
                if idx is None:
                    raise HistoryFormatError(f"return without invoke at t={ev.t}")
                o = ops[idx]
                ops[idx] = HighOp(o.id, o.client, o.name, o.arg, o.invoke, ev.t, ev.value)
        return ops

    def low_level_ops(self) -> list[LowOp]:
        by_id: dict[int, LowOp] = {}
        for ev in self.events:
            if ev.kind == TRIGGER:
                by_id[ev.op_id] = LowOp(ev.op_id, ev.client, ev.object, ev.server, ev.op, ev.t)
            elif ev.kind == RESPOND:
                o = by_id.get(ev.op_id)
                if o is None or o.respond is not None:
                    raise HistoryFormatError(f"respond for unknown or finished op {ev.op_id}")
                by_id[ev.op_id] = LowOp(o.op_id, o.client, o.object, o.server, o.op, o.trigger, ev.t, ev.value)
        return [by_id[i] for i in sorted(by_id)]

    def pending(self, t: int | None = None) -> list[LowOp]:
        """Low-level operations triggered at or before ``t`` and not responded by ``t``."""
        t = len(self.events) if t is None else t
        return [o for o in self.prefix(t).low_level_ops() if o.respond is None]

    def object_subhistory(self, obj: int) -> list[LowOp]:
        return [o for o in self.low_level_ops() if o.object == obj]

    def completed_writers(self, t: int | None = None) -> frozenset[int]:
        """C(t): clients with a completed high-level write at or before ``t``."""
        t = len(self.events) if t is None else t
        return frozenset(o.client for o in self.prefix(t).high_level_ops()
                         if o.complete and o.name in ("write", "write-max"))

    def crashed_servers(self) -> frozenset[int]:
        return frozenset(e.server for e in self.events if e.kind == CRASH_SERVER)

    def point_contention(self) -> int:
        """Maximum number of simultaneously open high-level operations."""
        open_now = best = 0
        for ev in self.events:
            if ev.kind == INVOKE:
                open_now += 1
                best = max(best, open_now)
            elif ev.kind == RETURN:
                open_now -= 1
        return best


def covered_set(history: History, t: int) -> frozenset[int]:
    """Cov(t): objects with a low-level write triggered by ``t`` and still pending at ``t``."""
    if t < 0 or t > len(history):
        raise ValueError(f"time {t} outside history of length {len(history)}")
    pending_writes: dict[int, int] = {}
    for ev in history.events[:t]:
        if ev.kind == TRIGGER and ev.op[0] in WRITE_OPS:
            pending_writes[ev.op_id] = ev.object
        elif ev.kind == RESPOND:
            pending_writes.pop(ev.op_id, None)
    return frozenset(pending_writes.values())


def count_resources(history: History) -> int:
    """Distinct base objects touched by any trigger."""
    return len({e.object for e in history.events if e.kind == TRIGGER})
