"""
Randomized runs and the WS-regularity checker
=============================================
"""

from faultreg import SystemConfig
from faultreg.experiments import ws_trial

# a handful of seeded runs with crashes, each checked after the fact
for emulation, nfk in [("rw-register", (6, 2, 3)), ("abd-max", (5, 2, 2))]:
    cfg = SystemConfig(*nfk)
    for seed in range(5):
        tr = ws_trial(emulation, cfg, seed)
        print(f"{emulation:12} n={cfg.n} f={cfg.f} seed={seed} crashes={sorted(tr.fault_plan.servers)} "
              f"events={len(tr.history):4} regular={tr.regular.passed} safe={tr.safe.passed} "
              f"objects_ok={tr.objects_ok}")

# a witness lists, per read, an order of writes the read fits into
tr = ws_trial("rw-register", SystemConfig(3, 1, 2), 3)
print("\nwitness for seed 3:", tr.regular.witness)

# the same seed always gives the same history
again = ws_trial("rw-register", SystemConfig(3, 1, 2), 3)
print("identical on rerun:", again.history.to_jsonl() == tr.history.to_jsonl())
