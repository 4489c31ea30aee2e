"""
A max-register from one compare-and-swap
========================================
"""

from faultreg.checkers import MaxRegister, check_high_level
from faultreg.emulations import CasMax, casmax_iterations
from faultreg.emulations.casmax import exhaustive_check
from faultreg.simulator import WorkloadItem, explore

# two concurrent write-max calls and a read that waits for both
emu = CasMax()
workload = [WorkloadItem(0, ("write-max", 2)), WorkloadItem(1, ("write-max", 7)),
            WorkloadItem(2, ("read-max",), after=(0, 1))]
histories = list(explore(None, emu.placement, emu, workload))
print(len(histories), "interleavings, all atomic:",
      all(check_high_level(h, MaxRegister()).passed for h in histories))

# how many CAS attempts each write needed in the worst interleaving
worst = max((r["iterations"], r["client"]) for h in histories for r in casmax_iterations(h))
print("most iterations:", worst[0], "by client", worst[1])

# the full two-client sweep takes a few seconds
print(exhaustive_check(max_ops=1))
