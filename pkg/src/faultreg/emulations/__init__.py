from .abd import AbdClientState, AbdMax
from .base import AutomatonError, Emulation, Step, Trigger, state_to_json
from .casmax import CasMax, CasMaxState, casmax_iteration_bound, casmax_iterations
from .rw_register import RwClientState, RwRegister

EMULATIONS = {
    "rw-register": RwRegister,
    "abd-max": AbdMax,
    "cas-max": CasMax,
}


def make_emulation(name: str, cfg, placement=None) -> Emulation:
    try:
        cls = EMULATIONS[name]
    except KeyError:
        raise ValueError(f"unknown emulation {name!r}; choose from {sorted(EMULATIONS)}") from None
    return cls(cfg, placement)


__all__ = [
    "AbdClientState", "AbdMax", "AutomatonError", "CasMax", "CasMaxState", "EMULATIONS",
    "Emulation", "RwClientState", "RwRegister", "Step", "Trigger", "casmax_iteration_bound",
    "casmax_iterations", "make_emulation", "state_to_json",
]
