"""Domain types, base-object sequential specifications and the row layout.

Servers are numbered ``0..n-1`` and base objects ``0..N-1``.  Writers are the
clients ``0..k-1``; any other client id is a reader.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, NamedTuple

V0 = 0

REGISTER = "register"
MAX_REGISTER = "max-register"
CAS = "cas"
OBJECT_KINDS = (REGISTER, MAX_REGISTER, CAS)

# low-level operations allowed on each kind of base object
KIND_OPS = {
    REGISTER: ("read", "write"),
    MAX_REGISTER: ("read-max", "write-max"),
    CAS: ("cas",),
}
# operations that put a covering write on the object while pending
WRITE_OPS = frozenset({"write", "write-max"})


class InvalidConfig(ValueError):
    pass


class ObjectCrashed(RuntimeError):
    """An operation was applied to a crashed base object."""


class Timestamp(NamedTuple):
    seq: int
    writer: int


class TSVal(NamedTuple):
    ts: Timestamp
    val: Any


INITIAL_TS = Timestamp(0, 0)
INITIAL_TSVAL = TSVal(INITIAL_TS, V0)


def as_tsval(value) -> TSVal:
    """Rebuild a TSVal from its decoded-JSON form ``((seq, writer), val)``."""
    ts, val = value
    return TSVal(Timestamp(*ts), val)


@dataclass(frozen=True)
class SystemConfig:
    n: int
    f: int
    k: int

    def __post_init__(self):
        if self.f < 1 or self.k < 1:
            raise InvalidConfig(f"need f >= 1 and k >= 1, got f={self.f}, k={self.k}")
        if self.n < 2 * self.f + 1:
            raise InvalidConfig(f"need n >= 2f+1, got n={self.n}, f={self.f}")

    @property
    def servers(self) -> range:
        return range(self.n)

    def is_writer(self, client: int) -> bool:
        return 0 <= client < self.k


@dataclass(frozen=True)
class BaseObject:
    kind: str
    state: Any
    crashed: bool = False

    @classmethod
    def fresh(cls, kind: str, initial=None) -> "BaseObject":
        if kind not in OBJECT_KINDS:
            raise ValueError(f"unknown object kind {kind!r}")
        if initial is None:
            initial = INITIAL_TSVAL if kind == REGISTER else V0
        return cls(kind, initial)

    def crash(self) -> "BaseObject":
        return replace(self, crashed=True)


def apply_base_op(obj: BaseObject, op: tuple) -> tuple[BaseObject, Any]:
    """Apply one low-level operation atomically.

    ``op`` is ``("read",)``, ``("write", v)``, ``("read-max",)``,
    ``("write-max", v)`` or ``("cas", exp, new)``.  Returns the new object
    and the response.
    """
    if obj.crashed:
        raise ObjectCrashed(f"{obj.kind} object is crashed")
    name = op[0]
    if name not in KIND_OPS[obj.kind]:
        raise ValueError(f"operation {name!r} not supported by a {obj.kind}")
    if name == "write":
        return replace(obj, state=op[1]), "ack"
    if name == "read" or name == "read-max":
        return obj, obj.state
    if name == "write-max":
        if op[1] > obj.state:
            return replace(obj, state=op[1]), "ok"
        return obj, "ok"
    # cas
    _, exp, new = op
    prior = obj.state
    if prior == exp:
        obj = replace(obj, state=new)
    return obj, prior


@dataclass(frozen=True)
class LayoutParams:
    z: int
    y: int
    m: int
    row_sizes: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.row_sizes)


def layout_params(cfg: SystemConfig) -> LayoutParams:
    """Row sizes of the read/write-register construction.

    ``z`` writers share a row of ``y = zf + f + 1`` registers; when ``z`` does
    not divide ``k`` the last ``k mod z`` writers get a smaller overflow row.
    """
    n, f, k = cfg.n, cfg.f, cfg.k
    if n <= 2 * f:
        raise InvalidConfig(f"n={n} must exceed 2f={2 * f}")
    z = (n - (f + 1)) // f
    y = z * f + f + 1
    full, rest = divmod(k, z)
    sizes = [y] * full
    if rest:
        sizes.append(rest * f + f + 1)
    return LayoutParams(z=z, y=y, m=len(sizes), row_sizes=tuple(sizes))


@dataclass(frozen=True)
class Placement:
    """Object-to-server map together with the register rows."""

    delta: dict[int, int]
    rows: tuple[tuple[int, ...], ...] = ()
    _by_server: dict[int, tuple[int, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_server: dict[int, list[int]] = {}
        for obj in sorted(self.delta):
            by_server.setdefault(self.delta[obj], []).append(obj)
        object.__setattr__(self, "_by_server", {s: tuple(o) for s, o in by_server.items()})
        seen: set[int] = set()
        for row in self.rows:
            if seen.intersection(row):
                raise ValueError("placement rows overlap")
            seen.update(row)
            if len({self.delta[b] for b in row}) != len(row):
                raise ValueError("a row has two objects on the same server")

    @property
    def objects(self) -> tuple[int, ...]:
        return tuple(sorted(self.delta))

    def objects_on(self, server: int) -> tuple[int, ...]:
        return self._by_server.get(server, ())

    def servers_of(self, objs) -> frozenset[int]:
        return frozenset(self.delta[b] for b in objs)

    def objects_of(self, servers) -> frozenset[int]:
        return frozenset(b for s in servers for b in self.objects_on(s))

    def to_json(self) -> dict:
        return {
            "rows": [list(r) for r in self.rows],
            "delta": {str(b): s for b, s in sorted(self.delta.items())},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, doc: dict) -> "Placement":
        delta = {int(b): int(s) for b, s in doc["delta"].items()}
        return cls(delta, tuple(tuple(int(b) for b in r) for r in doc.get("rows", ())))


def build_placement(cfg: SystemConfig) -> Placement:
    """Lay out the rows, each row round-robin over servers ``0..|R_i|-1``."""
    params = layout_params(cfg)
    delta: dict[int, int] = {}
    rows = []
    next_id = 0
    for size in params.row_sizes:
        row = tuple(range(next_id, next_id + size))
        for server, obj in enumerate(row):
            delta[obj] = server
        rows.append(row)
        next_id += size
    return Placement(delta, tuple(rows))


def max_register_placement(cfg: SystemConfig) -> Placement:
    """One max-register on each of the servers ``0..2f``."""
    return Placement({s: s for s in range(2 * cfg.f + 1)})


def single_object_placement() -> Placement:
    return Placement({0: 0})
