"""
Forcing writers to cover registers
==================================

Run the blocking adversary against the read/write register emulation and
watch the set of covered registers grow phase by phase.
"""

from faultreg import SystemConfig
from faultreg.adversary import run_covering_experiment, select_F

cfg = SystemConfig(7, 2, 3)
F = select_F(cfg, 1, seed=1)[0]
report = run_covering_experiment(cfg, F, seed=1)
print(f"F = {report.F}")

# each phase adds at least f covered registers, none of them on F
for p in report.phases:
    print(f"phase {p['i']}: t={p['t_start']}..{p['t_end']} covered={p['cov_size']} "
          f"on servers {p['cov_servers']} (touched {p['triggered_servers']} servers)")

# only one operation is ever open, yet the run still touches many registers
print("point contention:", report.point_contention_max)
print("registers used:", report.resources_used, ">= kf =", cfg.k * cfg.f)
print("violations:", report.violations or "none")

# with three servers and one fault every register ends up on the lone server outside F
small = run_covering_experiment(SystemConfig(3, 1, 3), (0, 1))
print("\nn=3: covered servers after the last phase:", small.phases[-1]["cov_servers"])
