"""
Register layout over servers
============================

How writers share rows, and how rows spread over servers.
"""

from faultreg import SystemConfig, build_placement, layout_params

# six servers, two faults, five writers: one writer per row
cfg = SystemConfig(6, 2, 5)
params = layout_params(cfg)
print(f"z={params.z} writers per row, rows of {params.y}, {params.m} rows, {params.total} registers")

pl = build_placement(cfg)
for i, row in enumerate(pl.rows):
    print(f"row {i}: objects {list(row)} on servers {[pl.delta[b] for b in row]}")

# with more servers a row fits several writers; an overflow row takes the rest
cfg = SystemConfig(7, 2, 5)
params = layout_params(cfg)
print(f"\nn=7: z={params.z}, row sizes {list(params.row_sizes)}")
for s in cfg.servers:
    print(f"server {s} hosts {len(build_placement(cfg).objects_on(s))} registers")
