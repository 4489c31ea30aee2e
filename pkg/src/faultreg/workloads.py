"""Seeded workload and fault-plan generators."""

from __future__ import annotations

import itertools

import numpy as np

from .model import SystemConfig
from .simulator import FaultPlan, WorkloadItem


def write_sequential_workload(cfg: SystemConfig, rng: np.random.Generator, max_writes: int = 4,
                              max_reads: int = 4, horizon: int = 120) -> list[WorkloadItem]:
    """Writes chained one after another, reads by separate reader clients at random times.

    The j-th write stores ``j + 1`` so every written value is distinct from v0
    and from each other.  Writers are drawn at random from ``0..k-1``; readers
    use ids ``k, k+1, ...``.
    """
    n_writes = int(rng.integers(1, max_writes + 1))
    n_reads = int(rng.integers(1, max_reads + 1))
    items = []
    for j in range(n_writes):
        writer = int(rng.integers(cfg.k))
        items.append(WorkloadItem(writer, ("write", j + 1), after=(j - 1,) if j else ()))
    n_readers = int(rng.integers(1, n_reads + 1))
    for _ in range(n_reads):
        reader = cfg.k + int(rng.integers(n_readers))
        items.append(WorkloadItem(reader, ("read",), at=int(rng.integers(horizon))))
    return items


def random_fault_plan(cfg: SystemConfig, rng: np.random.Generator, horizon: int = 120,
                      servers=None) -> FaultPlan:
    """Between 0 and f distinct server crashes at random times."""
    pool = list(cfg.servers if servers is None else servers)
    count = int(rng.integers(0, cfg.f + 1))
    chosen = rng.choice(len(pool), size=count, replace=False) if count else []
    return FaultPlan(tuple((pool[int(i)], int(rng.integers(horizon))) for i in sorted(chosen)))


def max_register_ops(domain=range(5)) -> list[tuple]:
    return [("read-max",)] + [("write-max", v) for v in domain]


def two_client_workloads(max_ops: int = 2, domain=range(5), symmetric: bool = False):
    """Every pair of per-client op sequences of length 0..max_ops.

    With ``symmetric`` only one of each mirrored pair ``(a, b)``/``(b, a)`` is
    produced; that suffices when the emulation treats client ids alike.
    """
    ops = max_register_ops(domain)
    seqs = [s for length in range(max_ops + 1) for s in itertools.product(ops, repeat=length)]
    pairs = (itertools.combinations_with_replacement(seqs, 2) if symmetric
             else itertools.product(seqs, repeat=2))
    for a, b in pairs:
        yield [WorkloadItem(0, op) for op in a] + [WorkloadItem(1, op) for op in b]
