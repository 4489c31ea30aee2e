"""``faultreg`` command line.

Exit codes: 0 pass, 1 check failed, 2 deadlock or step cap, 3 adversary claim
violated, 4 inconclusive check, 64 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import bounds
from .adversary import run_covering_experiment, select_F
from .checkers import (DEFAULT_BOUND, MaxRegister, Register, check_high_level, check_objects,
                       check_ws_regular, check_ws_safe)
from .emulations import EMULATIONS, make_emulation
from .emulations.casmax import exhaustive_check
from .history import History, HistoryFormatError, count_resources
from .model import InvalidConfig, SystemConfig
from .rng import stream
from .simulator import (DEFAULT_STEP_CAP, Deadlock, FairRandomScheduler, FaultPlan, FifoScheduler,
                        Simulation, StepCapExceeded, WorkloadItem)

EXIT_PASS, EXIT_FAIL, EXIT_STUCK, EXIT_CLAIM, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3, 4, 64

SCHEDULERS = {"fair-random": FairRandomScheduler, "fifo": FifoScheduler}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_range(text: str) -> list[int]:
    """``"3"``, ``"1-4"`` or ``"1,3,5"`` (pieces may be mixed)."""
    out = []
    try:
        for piece in text.split(","):
            if "-" in piece:
                lo, hi = (int(x) for x in piece.split("-"))
                if hi < lo:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(piece))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    return out


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _config(args) -> SystemConfig:
    try:
        return SystemConfig(args.n, args.f, args.k)
    except InvalidConfig as exc:
        raise UsageError(str(exc)) from None


# -- bounds ---------------------------------------------------------------------

def cmd_bounds(args) -> int:
    types = ("register", "max-register", "cas") if args.base_type == "all" else (args.base_type,)
    if any(v < 1 for v in args.f + args.k) or (args.cap is not None and args.cap < 1):
        raise UsageError("f, k and cap must be positive")
    rows = bounds.bounds_grid(args.f, args.k, args.n, types, args.cap)
    if args.format == "json":
        text = _dump(rows)
    else:
        buf = io.StringIO()
        fields = ["n", "f", "k", "base_type", "lower", "upper", "tight"] + (["min_servers"] if args.cap else [])
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    _emit(args, text)
    return EXIT_PASS


# -- simulate -------------------------------------------------------------------

def build_workload(emulation: str, cfg: SystemConfig, writes: int, reads: int, seed: int) -> list[WorkloadItem]:
    """Sequential writes by writers in turn, reads by distinct readers at seeded random times."""
    rng = stream(seed, "workload")
    if emulation == "cas-max":
        ops = [("write-max", int(v)) for v in rng.integers(1, 10, size=writes)]
        items = [WorkloadItem(j % cfg.k, op) for j, op in enumerate(ops)]
        items += [WorkloadItem(cfg.k + j, ("read-max",), at=int(rng.integers(60))) for j in range(reads)]
        return items
    items = [WorkloadItem(j % cfg.k, ("write", j + 1), after=(j - 1,) if j else ()) for j in range(writes)]
    items += [WorkloadItem(cfg.k + j, ("read",), at=int(rng.integers(40 * max(writes, 1)))) for j in range(reads)]
    return items


def cmd_simulate(args) -> int:
    if args.exhaustive:
        if args.emulation != "cas-max":
            raise UsageError("--exhaustive is only available for cas-max")
        res = exhaustive_check(max_ops=args.max_ops)
        failure = res.pop("first_failure")
        res["pass"] = res["atomic_failures"] == 0 and res["bound_failures"] == 0
        if failure is not None:
            res["example"] = failure.to_jsonl().splitlines()
        sys.stdout.write(_dump(res))
        return EXIT_PASS if res["pass"] else EXIT_FAIL

    cfg = _config(args)
    emu = make_emulation(args.emulation, cfg)
    try:
        plan = FaultPlan.parse(args.crash)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(plan.servers) > cfg.f:
        print(f"warning: {len(plan.servers)} crashed servers exceed f={cfg.f}", file=sys.stderr)
    workload = build_workload(args.emulation, cfg, args.writes, args.reads, args.seed)
    sim = Simulation(cfg, emu.placement, emu, workload, SCHEDULERS[args.scheduler](), plan, args.seed, args.cap)
    try:
        history = sim.run()
    except (Deadlock, StepCapExceeded) as exc:
        doc = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, Deadlock):
            doc["snapshot"] = exc.snapshot
        sys.stdout.write(_dump(doc))
        if args.out:
            sim.history.save(args.out)
        return EXIT_STUCK
    if args.out:
        history.save(args.out)

    verdicts = {}
    if args.emulation == "cas-max":
        verdicts["atomic"] = check_high_level(history, MaxRegister(), args.bound).to_json()
    else:
        verdicts["ws_regular"] = check_ws_regular(history, bound=args.bound).to_json()
        verdicts["ws_safe"] = check_ws_safe(history, bound=args.bound).to_json()
    objs = check_objects(history, emu.object_kind, args.object_bound)
    verdicts["objects"] = {"pass": all(v.passed for v in objs.values()),
                           "inconclusive": sorted(b for b, v in objs.items() if v.inconclusive),
                           "failed": sorted(b for b, v in objs.items() if v.passed is False)}
    summary = {
        "emulation": args.emulation, "n": cfg.n, "f": cfg.f, "k": cfg.k, "seed": args.seed,
        "events": len(history), "resources": count_resources(history),
        "crashed_servers": sorted(history.crashed_servers()), "verdicts": verdicts,
    }
    sys.stdout.write(_dump(summary))
    return _exit_for(list(verdicts.values()))


def _exit_for(verdicts: list[dict]) -> int:
    if any(v.get("pass") is False or v.get("failed") for v in verdicts):
        return EXIT_FAIL
    if any(v.get("inconclusive") for v in verdicts):
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


# -- adversary ------------------------------------------------------------------

def parse_F(text: str, cfg: SystemConfig, seed: int) -> list[tuple[int, ...]]:
    if text == "all":
        return select_F(cfg, "all", seed)
    if text.startswith("sample:"):
        try:
            count = int(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad --F {text!r}") from None
        return select_F(cfg, count, seed)
    try:
        chosen = tuple(sorted(int(x) for x in text.split(",")))
    except ValueError:
        raise UsageError(f"bad --F {text!r}") from None
    if len(set(chosen)) != cfg.f + 1 or not all(0 <= s < cfg.n for s in chosen):
        raise UsageError(f"--F needs {cfg.f + 1} distinct servers in 0..{cfg.n - 1}")
    return [chosen]


def cmd_adversary(args) -> int:
    cfg = _config(args)
    runs = []
    for F in parse_F(args.F, cfg, args.seed):
        try:
            report = run_covering_experiment(cfg, F, args.emulation, seed=args.seed, strict=False,
                                             step_cap=args.cap)
        except (Deadlock, StepCapExceeded) as exc:
            sys.stdout.write(_dump({"F": list(F), "error": type(exc).__name__, "message": str(exc)}))
            return EXIT_STUCK
        runs.append(report.to_json())
    summary = {"runs": len(runs), "violations": sum(len(r["violations"]) for r in runs)}
    for i in range(1, cfg.k + 1):
        covs = [r["phases"][i - 1]["cov_size"] for r in runs if len(r["phases"]) >= i]
        trig = [r["phases"][i - 1]["triggered_servers"] for r in runs if len(r["phases"]) >= i]
        summary[f"phase_{i}"] = {"cov_min": min(covs, default=None), "cov_max": max(covs, default=None),
                                 "triggered_min": min(trig, default=None)}
    summary["point_contention_max"] = max(r["point_contention_max"] for r in runs)
    summary["resources_min"] = min(r["resources_used"] for r in runs)
    doc = {"summary": summary, "reports": runs}
    text = _dump(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        sys.stdout.write(_dump(summary))
    else:
        sys.stdout.write(text)
    if summary["violations"]:
        first = next(v for r in runs for v in r["violations"])
        print(f"claim {first['item']} violated in phase {first['phase']} at t={first['t']}", file=sys.stderr)
        return EXIT_CLAIM
    return EXIT_PASS


# -- check ----------------------------------------------------------------------

def cmd_check(args) -> int:
    try:
        history = History.load(args.history)
        if args.mode == "ws-regular":
            verdict = check_ws_regular(history, bound=args.bound)
        elif args.mode == "ws-safe":
            verdict = check_ws_safe(history, bound=args.bound)
        elif args.object is not None:
            verdict = check_objects(history, args.kind, args.bound, objects={args.object}).get(args.object)
            if verdict is None:
                raise UsageError(f"object {args.object} never appears in the history")
        else:
            spec = MaxRegister() if args.kind in ("max-register", "cas") else Register()
            verdict = check_high_level(history, spec, args.bound)
    except (OSError, HistoryFormatError, json.JSONDecodeError, TypeError) as exc:
        raise UsageError(f"cannot read history: {exc}") from None
    sys.stdout.write(_dump(verdict.to_json()))
    if verdict.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS if verdict.passed else EXIT_FAIL


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="faultreg", description="Register emulations over crash-prone servers.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bounds", help="closed-form space bounds over a grid")
    b.add_argument("--f", type=parse_range, default=parse_range("1-3"))
    b.add_argument("--k", type=parse_range, default=parse_range("1-6"))
    b.add_argument("--n", type=parse_range, default=None, help="server counts (default 2f+1..kf+f+3)")
    b.add_argument("--base-type", choices=["register", "max-register", "cas", "all"], default="all")
    b.add_argument("--cap", type=int, default=None, help="registers per server, adds a min_servers column")
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    def system(sp, k_default=1):
        sp.add_argument("--n", type=int, default=3)
        sp.add_argument("--f", type=int, default=1)
        sp.add_argument("--k", type=int, default=k_default)
        sp.add_argument("--emulation", choices=sorted(EMULATIONS), default="rw-register")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--cap", type=int, default=DEFAULT_STEP_CAP, help="step cap")
        sp.add_argument("--out")

    s = sub.add_parser("simulate", help="run a workload and check the history")
    system(s, 2)
    s.add_argument("--scheduler", choices=sorted(SCHEDULERS), default="fair-random")
    s.add_argument("--writes", type=int, default=2)
    s.add_argument("--reads", type=int, default=3)
    s.add_argument("--crash", action="append", default=[], metavar="S@T",
                   help="crash server S once T events happened (repeatable)")
    s.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="checker search bound")
    s.add_argument("--object-bound", type=int, default=64, help="search bound for base-object checks")
    s.add_argument("--exhaustive", action="store_true", help="cas-max: every two-client interleaving")
    s.add_argument("--max-ops", type=int, default=2, help="ops per client in exhaustive mode")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("adversary", help="covering experiment under the blocking adversary")
    system(a, 3)
    a.add_argument("--scheduler", choices=["adversary"], default="adversary")
    a.add_argument("--F", default="all", help='"0,1", "all" or "sample:N"')
    a.set_defaults(func=cmd_adversary)

    c = sub.add_parser("check", help="check a saved JSON-lines history")
    c.add_argument("history")
    c.add_argument("--mode", choices=["ws-regular", "ws-safe", "atomic"], default="ws-regular")
    c.add_argument("--kind", choices=["register", "max-register", "cas"], default="register")
    c.add_argument("--object", type=int, default=None, help="atomic mode: check this base object")
    c.add_argument("--bound", type=int, default=DEFAULT_BOUND)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"faultreg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
