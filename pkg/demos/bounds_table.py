"""
Space bounds for f-tolerant k-writer registers
==============================================

Lower and upper register counts side by side, and where they part ways.
"""

import numpy as np

from faultreg import SystemConfig, lower_bound_registers, upper_bound_registers

# with one crash tolerated the two counts agree at every n
for n in range(3, 8):
    cfg = SystemConfig(n, 1, 4)
    print(f"n={n} f=1 k=4  lower={lower_bound_registers(cfg)}  upper={upper_bound_registers(cfg)}")

# for f=2 there is a window of n where the construction uses more than the lower bound
f, ks, ns = 2, np.arange(1, 7), np.arange(5, 18)
gap = np.array([[upper_bound_registers(SystemConfig(int(n), f, int(k))) -
                 lower_bound_registers(SystemConfig(int(n), f, int(k))) for n in ns] for k in ks])
print("\nupper - lower, f=2 (rows k=1..6, columns n=5..17)")
print(gap)

# the gap closes at n=2f+1 and again once n >= kf+f+1
print("columns with no gap for every k:", [int(n) for n, col in zip(ns, gap.T) if not col.any()])
