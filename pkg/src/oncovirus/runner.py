"""Glue between a :class:`RunConfig` and the numerical modules.

Used by the CLI; kept separate so sweeps can call it from worker processes.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from . import _backend
from .config import RunConfig, SweepConfig, point_config
from .equilibria import (
    HomogeneousParams,
    classify_regime,
    find_constant_equilibria,
    h_min_values,
    persistence_lower_bounds,
)
from .errors import OncovirusError, UnsupportedConfigurationError
from .integrator import SimulationTrace, init_state, simulate
from .kernel import Kernel, build_kernel
from .model import Logistic
from .thresholds import lambda1_closed_form, lambda1_linear, s1_delayed, scalar_steady_state, sigma1

__all__ = [
    "REPORT_COLUMNS",
    "SIM_COLUMNS",
    "build_config_kernel",
    "compute_report",
    "run_simulation",
    "sweep_row",
    "sweep_columns",
    "format_cell",
    "regime_from_thresholds",
]

REPORT_COLUMNS = (
    "b", "d", "beta", "alpha", "tau", "h", "kappa",
    "sigma1", "lambda1_closed", "lambda1_linear", "s1", "ratio", "regime",
    "U3", "V3", "U_lb", "V_lb", "h_min_statement", "h_min_proof",
)
SIM_COLUMNS = ("sim_sup_U", "sim_l1_U", "sim_sup_V", "sim_l1_V", "sim_U_min", "sim_V_min")


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    value = float(value)
    return f"{value:.17g}" if math.isfinite(value) else ""


def build_config_kernel(cfg: RunConfig) -> Kernel:
    p, nm = cfg.params, cfg.numerics
    alpha = p.alpha if p.alpha_is_constant else p.alpha_field(cfg.grid)
    if np.ndim(alpha) == 0:
        alpha = float(alpha)
    return build_kernel(cfg.grid, p.d2, alpha, cfg.ages, nm.kernel_route, nm.kernel_modes, nm.kernel_substeps)


def _homogeneous(cfg: RunConfig) -> Optional[HomogeneousParams]:
    """The closed-form specialization applies: logistic, saturated incidence,
    constant alpha, no-flux ends, d > 0."""
    g = cfg.grid
    if g.eta1 != (0.0, 0.0) or g.eta2 != (0.0, 0.0):
        return None
    try:
        hp = HomogeneousParams.from_model(cfg.params)
    except (UnsupportedConfigurationError, OncovirusError):
        return None
    return hp if hp.d > 0 else None


def regime_from_thresholds(sig: float, lam: float) -> str:
    if abs(sig) < 1e-8 or (sig > 0 and abs(lam) < 1e-8):
        return "Indeterminate"
    if sig < 0:
        return "Extinction"
    return "Persistent" if lam > 0 else "TumorOnly"


def compute_report(cfg: RunConfig, kernel: Optional[Kernel] = None) -> dict:
    """Thresholds, equilibria, regime and persistence bounds for one config."""
    p, grid = cfg.params, cfg.grid
    growth, inc = p.growth, p.incidence
    row: dict = {c: None for c in REPORT_COLUMNS}
    row.update(b=growth.b, d=growth.d, beta=inc.beta, tau=p.tau, h=inc.h, kappa=p.kappa)
    row["alpha"] = p.alpha_scalar if p.alpha_is_constant else None

    kernel = kernel or build_config_kernel(cfg)
    f0 = np.asarray(growth(np.zeros(grid.n_points)), dtype=float)
    sig = sigma1(grid, p.d1, f0).value
    if sig <= 0:
        u1 = np.zeros(grid.n_points)
    elif isinstance(growth, Logistic) and grid.eta1 == (0.0, 0.0) and growth.d > 0:
        u1 = np.full(grid.n_points, growth.b / growth.d)
    else:
        u1 = scalar_steady_state(grid, p.d1, growth)
    weight = inc.dv_at_zero(u1)
    alpha = p.alpha_field(grid)
    lam = lambda1_linear(grid, p.d2, alpha, kernel, weight).value
    s1 = s1_delayed(grid, p.d2, alpha, kernel, weight, p.tau).value
    row.update(sigma1=sig, lambda1_linear=lam, s1=s1)

    hp = _homogeneous(cfg)
    if hp is None:
        row["regime"] = regime_from_thresholds(sig, lam)
        return row
    row["lambda1_closed"] = lambda1_closed_form(hp.alpha, hp.beta, hp.b, hp.d, hp.tau)
    row["ratio"] = hp.ratio
    row["regime"] = classify_regime(hp).variant
    eq = find_constant_equilibria(hp, cfg.numerics.coefficient_mode)
    if eq.E3 is not None:
        row["U3"], row["V3"] = eq.E3.U, eq.E3.V
    if hp.b > 0:
        row["h_min_statement"], row["h_min_proof"] = h_min_values(hp)
        if hp.ratio > 1:
            bounds = persistence_lower_bounds(hp, "statement")
            row["U_lb"], row["V_lb"] = bounds.U_lb, bounds.V_lb
    return row


def report_summary(row: dict) -> str:
    def f(key):
        v = row.get(key)
        return "-" if v is None else (v if isinstance(v, str) else f"{v:.10g}")

    lines = [
        f"parameters: b={f('b')} d={f('d')} beta={f('beta')} alpha={f('alpha')} tau={f('tau')} h={f('h')} kappa={f('kappa')}",
        f"tumor threshold sigma1 = {f('sigma1')}",
        f"invasion threshold lambda1: closed form {f('lambda1_closed')}, linear {f('lambda1_linear')}, delayed s1 {f('s1')}",
        f"ratio = {f('ratio')}  regime: {f('regime')}",
        f"positive equilibrium: U3={f('U3')} V3={f('V3')}",
        f"persistence bounds (statement variant): U_lb={f('U_lb')} V_lb={f('V_lb')}; "
        f"h_min statement={f('h_min_statement')} proof={f('h_min_proof')}",
    ]
    return "\n".join(lines)


def run_simulation(cfg: RunConfig, kernel: Optional[Kernel] = None) -> SimulationTrace:
    kernel = kernel or build_config_kernel(cfg)
    nm = cfg.numerics
    backend = None if nm.backend == "auto" else _backend.load(nm.backend)
    state = init_state(cfg.params, cfg.grid, kernel, cfg.u0.field(cfg.grid), cfg.v0.field(cfg.grid), nm.dt, backend)
    return simulate(state, nm.t_end, nm.sample_every, nm.snapshot_times, nm.window)


def sweep_columns(sweep: SweepConfig) -> list[str]:
    cols = ["point"] + [f"sweep_{a.name}" for a in sweep.axes] + list(REPORT_COLUMNS)
    if sweep.simulate:
        cols += list(SIM_COLUMNS)
    return cols + ["status"]


def sweep_row(task) -> dict[str, str]:
    """One sweep point; never raises for numerical or per-point config errors."""
    index, base, point, with_sim = task
    cells = {"point": str(index), **{f"sweep_{k}": format_cell(v) for k, v in point.items()}}
    status = "ok"
    try:
        cfg = point_config(base, point)
        kernel = build_config_kernel(cfg)
        cells.update({k: format_cell(v) for k, v in compute_report(cfg, kernel).items()})
        if with_sim:
            trace = run_simulation(cfg, kernel)
            cells.update(
                sim_sup_U=format_cell(trace.sup_U[-1]),
                sim_l1_U=format_cell(trace.l1_U[-1]),
                sim_sup_V=format_cell(trace.sup_V[-1]),
                sim_l1_V=format_cell(trace.l1_V[-1]),
                sim_U_min=format_cell(trace.U_min),
                sim_V_min=format_cell(trace.V_min),
            )
    except OncovirusError as exc:
        status = f"{type(exc).__name__}: {exc}"
    cells["status"] = status
    return cells
