"""Simulation laboratory for multi-writer register emulations over crash-prone servers."""

from .bounds import (bounds_grid, bounds_row, lower_bound_registers, lower_bound_servers,
                     upper_bound_registers)
from .history import Event, History, count_resources, covered_set
from .model import (BaseObject, LayoutParams, Placement, SystemConfig, Timestamp, TSVal, apply_base_op,
                    build_placement, layout_params)
from .simulator import FairRandomScheduler, FaultPlan, Simulation, WorkloadItem, crash_server, run

__version__ = "0.1.0"

__all__ = [
    "BaseObject", "Event", "FairRandomScheduler", "FaultPlan", "History", "LayoutParams", "Placement",
    "Simulation", "SystemConfig", "TSVal", "Timestamp", "WorkloadItem", "apply_base_op", "bounds_grid",
    "bounds_row", "build_placement", "count_resources", "covered_set", "crash_server", "layout_params",
    "lower_bound_registers", "lower_bound_servers", "run", "upper_bound_registers",
]
