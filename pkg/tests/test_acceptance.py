"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line; the same lines are repeated in the pytest terminal summary. The file
also runs standalone: ``python3 tests/test_acceptance.py``.
"""

import contextlib
import json
import time

import pytest

import oracles
from conftest import CRITERIA
from faultreg.adversary import AdversaryState, run_covering_experiment, select_F
from faultreg.bounds import upper_bound_registers
from faultreg.checkers import check_ws_safe
from faultreg.cli import main
from faultreg.emulations.casmax import exhaustive_check
from faultreg.experiments import ws_trial
from faultreg.history import Event, History, covered_set
from faultreg.model import SystemConfig, build_placement, layout_params

BOUNDS_GRID = [(n, f, k) for f in (1, 2, 3) for k in range(1, 7) for n in range(2 * f + 1, k * f + f + 4)]
COVERING = [(1, 3, 3), (1, 4, 6), (2, 2, 5), (2, 3, 7)]  # (f, k, n)
WS_CONFIGS = [("rw-register", (3, 1, 2)), ("rw-register", (6, 2, 3)), ("abd-max", (3, 1, 2)), ("abd-max", (5, 2, 2))]
WS_SEEDS = range(200)


@contextlib.contextmanager
def criterion(number, what, limit=None, already=0.0):
    """Time the body and record one PASS/FAIL line, failing on timeouts too.

    ``already`` is time spent earlier in a shared fixture for the same runs.
    """
    start = time.perf_counter() - already
    try:
        yield
        elapsed = time.perf_counter() - start
        if limit is not None and elapsed >= limit:
            raise AssertionError(f"took {elapsed:.2f}s, limit {limit}s")
    except BaseException as exc:
        line = f"FAIL criterion {number}: {what} ({type(exc).__name__}: {str(exc)[:160]})"
        CRITERIA[number] = line
        print(line)
        raise
    line = f"PASS criterion {number}: {what} ({time.perf_counter() - start:.2f}s)"
    CRITERIA[number] = line
    print(line)


def covering_runs():
    for f, k, n in COVERING:
        cfg = SystemConfig(n, f, k)
        for F in select_F(cfg, "all", seed=0):
            yield cfg, F, run_covering_experiment(cfg, F, seed=0, strict=False)


@pytest.fixture(scope="module")
def covering():
    start = time.perf_counter()
    runs = list(covering_runs())
    return runs, time.perf_counter() - start


def test_criterion_1_bounds(capsys):
    with criterion(1, "bound table equalities on f<=3, k<=6", limit=1.0):
        fs, ks = "1-3", "1-6"
        main(["bounds", "--f", fs, "--k", ks, "--base-type", "register", "--format", "json"])
        rows = json.loads(capsys.readouterr().out)
        assert len(rows) == len(BOUNDS_GRID)
        for r in rows:
            n, f, k = r["n"], r["f"], r["k"]
            assert (r["lower"], r["upper"]) == (oracles.lower(n, f, k), oracles.upper(n, f, k)), r
            assert r["lower"] <= r["upper"]
            if n == 2 * f + 1:
                assert r["lower"] == r["upper"] == (2 * f + 1) * k, r
            if n >= k * f + f + 1:
                assert r["lower"] == r["upper"] == k * f + f + 1, r


def test_criterion_2_layout():
    with criterion(2, "placement totals and distinct-server rows", limit=1.0):
        for n, f, k in BOUNDS_GRID:
            cfg = SystemConfig(n, f, k)
            pl = build_placement(cfg)
            assert len(pl.objects) == upper_bound_registers(cfg) == oracles.upper(n, f, k)
            assert [len(r) for r in pl.rows] == oracles.row_sizes(n, f, k)
            for row in pl.rows:
                assert len({pl.delta[b] for b in row}) == len(row)
        pl = build_placement(SystemConfig(6, 2, 5))
        assert len(pl.objects) == 25 and [len(r) for r in pl.rows] == [5] * 5
        assert layout_params(SystemConfig(6, 2, 5)).m == 5


def test_criterion_3_covering(covering):
    runs, elapsed = covering
    sizes = {}
    with criterion(3, f"covering adversary over {len(runs)} F choices", limit=30.0, already=elapsed):
        for cfg, F, rep in runs:
            sizes[(cfg.f, cfg.k, cfg.n)] = sizes.get((cfg.f, cfg.k, cfg.n), 0) + 1
            tag = (cfg.n, cfg.f, cfg.k, F)
            assert len(rep.phases) == cfg.k, tag
            assert not [v for v in rep.violations if v["item"] == "returns"], tag
            assert len(rep.history.completed_writers()) == cfg.k, tag
            prev = frozenset()
            for p in rep.phases:
                cov = covered_set(rep.history, p["t_end"])
                assert len(cov) == p["cov_size"] >= p["i"] * cfg.f, (tag, p)
                assert not set(p["cov_servers"]) & set(F), (tag, p)
                assert p["triggered_servers"] >= 2 * cfg.f + 1, (tag, p)
                assert prev <= cov, (tag, p)
                prev = cov
            if (cfg.n, cfg.f, cfg.k) == (3, 1, 3):
                (outside,) = set(range(3)) - set(F)
                assert len(prev) >= 3 and {rep_server(rep, b) for b in prev} == {outside}
        assert sizes == {(1, 3, 3): 3, (1, 4, 6): 15, (2, 2, 5): 10, (2, 3, 7): 20}


def rep_server(rep, obj):
    return build_placement(SystemConfig(rep.n, rep.f, rep.k)).delta[obj]


def test_criterion_4_facts(covering):
    runs, _ = covering
    with criterion(4, "runtime facts hold at every step of every covering run"):
        for cfg, F, rep in runs:
            live = [v for v in rep.violations if v["kind"] == "fact"]
            assert live == [], (cfg, F, live)
            _, phases, replayed = AdversaryState.from_history(rep.history, build_placement(cfg), cfg.f, F)
            assert replayed == [] and phases == rep.phases, (cfg, F)


def test_criterion_5_point_contention(covering):
    runs, _ = covering
    with criterion(5, "point contention 1 while resources reach kf"):
        for cfg, F, rep in runs:
            assert rep.history.point_contention() == 1, (cfg, F)
            assert rep.point_contention_max == 1
            assert rep.resources_used >= cfg.k * cfg.f, (cfg, F)


@pytest.fixture(scope="module")
def ws_trials():
    start = time.perf_counter()
    trials = [ws_trial(name, SystemConfig(*nfk), seed) for name, nfk in WS_CONFIGS for seed in WS_SEEDS]
    return trials, time.perf_counter() - start


def test_criterion_6_ws_regular(ws_trials):
    trials, elapsed = ws_trials
    with criterion(6, f"{len(trials)} randomized runs are WS-regular", limit=60.0, already=elapsed):
        assert len(trials) == 800
        for tr in trials:
            assert len(tr.fault_plan.servers) <= tr.cfg.f
            assert sum(1 for o in tr.history.high_level_ops() if o.name == "write") <= 4
            assert sum(1 for o in tr.history.high_level_ops() if o.name == "read") <= 4
            assert tr.regular.passed is True and not tr.regular.not_applicable, (tr.emulation, tr.cfg, tr.seed)


def test_criterion_7_cas_exhaustive():
    with criterion(7, "cas-max exhaustive two-client interleavings", limit=30.0):
        res = exhaustive_check(max_ops=2, domain=range(5))
        assert res["atomic_failures"] == 0 and res["bound_failures"] == 0, res
        assert res["histories"] > 0


def isolated_reads(history):
    ops = history.high_level_ops()
    writes = [o for o in ops if o.name == "write"]
    return [o for o in ops if o.name == "read" and o.complete and not any(o.concurrent(w) for w in writes)]


def corrupt(history, read, value):
    events = list(history.events)
    i = next(i for i, e in enumerate(events) if e.kind == "return" and e.t == read.ret)
    e = events[i]
    events[i] = Event(e.t, e.kind, e.client, e.server, e.object, e.op, value, e.op_id)
    return History(events)


def test_criterion_8_mutations():
    with criterion(8, "50 corrupted histories fail WS-safety, 50 originals pass", limit=10.0):
        picked, seed = [], 0
        while len(picked) < 50:
            tr = ws_trial("rw-register", SystemConfig(3, 1, 2), 10_000 + seed, object_bound=0)
            seed += 1
            reads = isolated_reads(tr.history)
            if reads:
                picked.append((tr.history, reads[len(picked) % len(reads)]))
        for history, read in picked:
            written = {o.arg for o in history.high_level_ops() if o.name == "write"}
            bogus = max(written | {0}) + 999
            assert check_ws_safe(history).passed is True
            assert check_ws_safe(corrupt(history, read, bogus)).passed is False


def test_criterion_9_determinism(covering, ws_trials):
    with criterion(9, "reruns give byte-identical histories"):
        for cfg, F, rep in covering[0]:
            again = run_covering_experiment(cfg, F, seed=0, strict=False)
            assert again.history.to_jsonl() == rep.history.to_jsonl(), (cfg, F)
        for tr in ws_trials[0]:
            again = ws_trial(tr.emulation, tr.cfg, tr.seed, object_bound=0)
            assert again.history.to_jsonl() == tr.history.to_jsonl(), (tr.emulation, tr.cfg, tr.seed)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
