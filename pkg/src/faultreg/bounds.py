"""Closed-form space bounds, all in exact integer arithmetic."""

from __future__ import annotations

from .model import SystemConfig, layout_params


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def upper_bound_registers(cfg: SystemConfig) -> int:
    """Registers used by the row construction: ``kf + ceil(k/z)(f+1)``."""
    z = layout_params(cfg).z
    return cfg.k * cfg.f + ceil_div(cfg.k, z) * (cfg.f + 1)


def lower_bound_registers(cfg: SystemConfig) -> int:
    """Minimum read/write registers: ``kf + ceil(kf/(n-(f+1)))(f+1)``."""
    n, f, k = cfg.n, cfg.f, cfg.k
    return k * f + ceil_div(k * f, n - (f + 1)) * (f + 1)


def lower_bound_servers(per_server_cap: int, f: int, k: int) -> int:
    """Minimum server count when each server holds at most ``per_server_cap`` registers."""
    if per_server_cap < 1:
        raise ValueError("per-server capacity must be at least 1")
    return ceil_div(k * f, per_server_cap) + f + 1


def registers_per_server_at_minimum(k: int) -> int:
    """With exactly 2f+1 servers every server stores at least k registers."""
    return k


def max_register_bound(f: int) -> int:
    """Max-register and CAS emulations need (and achieve) 2f+1 base objects."""
    return 2 * f + 1


def kwriter_max_register_registers(k: int) -> int:
    """Registers needed for a wait-free k-writer max-register without failures."""
    return k


def bounds_row(cfg: SystemConfig, base_type: str = "register", cap: int | None = None) -> dict:
    if base_type == "register":
        lower, upper = lower_bound_registers(cfg), upper_bound_registers(cfg)
    elif base_type in ("max-register", "cas"):
        lower = upper = max_register_bound(cfg.f)
    else:
        raise ValueError(f"unknown base type {base_type!r}")
    row = {
        "n": cfg.n,
        "f": cfg.f,
        "k": cfg.k,
        "base_type": base_type,
        "lower": lower,
        "upper": upper,
        "tight": lower == upper,
    }
    if cap is not None:
        row["min_servers"] = lower_bound_servers(cap, cfg.f, cfg.k) if base_type == "register" else ""
    return row


def bounds_grid(f_range, k_range, n_range=None, base_types=("register", "max-register", "cas"), cap=None):
    """Rows for every (f, k, n); ``n_range`` defaults to ``2f+1 .. kf+f+3``."""
    rows = []
    for f in f_range:
        for k in k_range:
            ns = n_range if n_range is not None else range(2 * f + 1, k * f + f + 4)
            for n in ns:
                if n < 2 * f + 1:
                    continue
                cfg = SystemConfig(n, f, k)
                for base_type in base_types:
                    rows.append(bounds_row(cfg, base_type, cap))
    return rows
