"""IMEX method-of-lines integrator for the delayed nonlocal system.

Diffusion (and the virus decay) is advanced by Crank-Nicolson; the reaction,
the delayed nonlocal source and the infected-cell field are explicit and
combined with Heun's predictor-corrector, so the scheme is second order in
time.  The delay and the age integral read from a ring of past snapshots
spaced exactly ``dt`` apart.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import _backend
from .errors import BlowUpError, ConfigurationError, InputError
from .kernel import Kernel
from .model import Gompertz, GridSpec, HollingII, Logistic, MassAction, ModelParams, as_field, robin_laplacian

__all__ = [
    "HistoryBuffer",
    "SimState",
    "SimulationTrace",
    "init_state",
    "compute_infected_field",
    "step",
    "simulate",
    "default_dt",
    "UNDERSHOOT_TOL",
    "BLOWUP_THRESHOLD",
]

UNDERSHOOT_TOL = 1e-10
BLOWUP_THRESHOLD = 1e8

History = Union[float, np.ndarray, Callable[[float, np.ndarray], np.ndarray]]


def default_dt(tau: float) -> float:
    return tau / 32 if tau > 0 else 1e-2


@dataclass
class HistoryBuffer:
    """Ring of the last ``m + 1`` snapshots, newest at ``head``.

    ``G`` caches the incidence of each snapshot so the age integral never
    re-evaluates it.
    """

    dt: float
    U: np.ndarray
    V: np.ndarray
    G: np.ndarray
    times: np.ndarray
    head: int = 0

    @property
    def m(self) -> int:
        return self.U.shape[0] - 1

    def order(self) -> np.ndarray:
        """Ring slots for lags j = 0..m (time t - j*dt)."""
        return (self.head - np.arange(self.m + 1)) % (self.m + 1)

    def snapshot(self, j: int):
        i = (self.head - j) % (self.m + 1)
        return self.times[i], self.U[i], self.V[i]

    def push(self, t, U, V, G):
        self.head = (self.head + 1) % (self.m + 1)
        self.U[self.head] = U
        self.V[self.head] = V
        self.G[self.head] = G
        self.times[self.head] = t


class _Operators:
    """Everything about a run that stays fixed from step to step."""

    def __init__(self, params: ModelParams, grid: GridSpec, kernel: Kernel, dt: float, backend=None):
        self.be = backend or _backend.impl
        n = grid.n_points
        m = kernel.ages.size - 1
        self.m = m
        k = dt

        lo, dg, up = robin_laplacian(grid, grid.eta1)
        self.u_bands = (params.d1 * lo, params.d1 * dg, params.d1 * up)
        lo, dg, up = robin_laplacian(grid, grid.eta2)
        alpha = params.alpha_field(grid)
        self.v_bands = (params.d2 * lo, params.d2 * dg - alpha, params.d2 * up)

        def implicit(bands):
            l, d, u = bands
            return self.be.factor_tridiag(-0.5 * k * l, 1.0 - 0.5 * k * d, -0.5 * k * u)

        self.u_fac = implicit(self.u_bands)
        self.v_fac = implicit(self.v_bands)

        weighted = kernel.weighted
        if m == 0:
            age_w = np.zeros(1)
        else:
            age_w = np.zeros(m + 1)
            da = np.diff(kernel.ages)
            age_w[:-1] += 0.5 * da
            age_w[1:] += 0.5 * da
        # I(x) = sum_j age_w[j]/kappa * (K_j w) G_j  as one (n, (m+1) n) product
        stacked = weighted * (age_w / params.kappa)[:, None, None]
        self.infected_op = np.ascontiguousarray(stacked.transpose(1, 0, 2).reshape(n, (m + 1) * n))
        self.delay_op = np.ascontiguousarray(weighted[m])

        g, inc = params.growth, params.incidence
        self.fast = isinstance(g, (Logistic, Gompertz)) and isinstance(inc, (MassAction, HollingII))
        if self.fast:
            self.growth_kind = 0 if isinstance(g, Logistic) else 1
            self.g_args = (float(g.b), float(g.d), float(getattr(g, "eps", 0.0)))
            self.i_args = (float(inc.beta), float(inc.h))
        self.growth = g
        self.incidence_fn = inc
        self.scratch = np.empty(n)

    def incidence(self, U, V, out):
        if self.fast:
            self.be.incidence(U, V, self.i_args[0], self.i_args[1], out)
        else:
            out[:] = self.incidence_fn(U, V)
        return out

    def tumor_source(self, U, I, G, out):
        if self.fast:
            self.be.tumor_source(U, I, G, self.growth_kind, *self.g_args, out)
        else:
            out[:] = U * self.growth(U + I) - G
        return out

    def infected(self, g_by_lag: np.ndarray) -> np.ndarray:
        return self.infected_op @ g_by_lag.ravel()

    def implicit_step(self, bands, fac, x, source, k, out):
        self.be.cn_rhs(bands[0], bands[1], bands[2], x, 0.5 * k, source, k, self.scratch)
        self.be.solve_factored(fac, self.scratch, out)
        return out


@dataclass
class SimState:
    t: float
    U: np.ndarray
    V: np.ndarray
    history: HistoryBuffer
    params: ModelParams
    kernel: Kernel
    grid: GridSpec
    dt: float
    t0: float = 0.0
    steps: int = 0
    clipped: int = 0
    ops: _Operators = field(default=None, repr=False)


def _sample_history(h: History, theta: float, x: np.ndarray, grid: GridSpec, name: str) -> np.ndarray:
    if callable(h):
        vals = h(theta, x)
    else:
        vals = h
    arr = as_field(grid, vals, name)
    if np.any(arr < 0):
        raise InputError(f"{name} history is negative at theta={theta:g}")
    return arr


def init_state(
    params: ModelParams,
    grid: GridSpec,
    kernel: Kernel,
    u0: History,
    v0: History,
    dt: float,
    backend=None,
) -> SimState:
    """Fill the history on ``[-tau, 0]`` and return the state at ``t = 0``.

    ``u0``/``v0`` may be constants, arrays on the grid, or callables
    ``f(theta, x)``.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    tau = params.tau
    m = 0 if tau == 0 else round(tau / dt)
    if tau > 0 and (m < 1 or not math.isclose(m * dt, tau, rel_tol=1e-9, abs_tol=1e-12)):
        raise ConfigurationError(f"tau={tau!r} is not an integer multiple of dt={dt!r}")
    if kernel.grid != grid:
        raise ConfigurationError("kernel was built on a different grid")
    expected = np.arange(m + 1) * (tau / m if m else 0.0)
    if kernel.ages.size != m + 1 or not np.allclose(kernel.ages, expected, rtol=1e-9, atol=1e-12):
        raise ConfigurationError(f"kernel ages do not match the delay ladder (m={m}, dt={dt})")
    if np.ndim(params.alpha) and np.shape(params.alpha) != (grid.n_points,):
        raise ConfigurationError("alpha array does not match the grid")

    ops = _Operators(params, grid, kernel, dt, backend)
    n = grid.n_points
    x = grid.x
    hist = HistoryBuffer(dt, np.empty((m + 1, n)), np.empty((m + 1, n)), np.empty((m + 1, n)), np.empty(m + 1), head=m)
    # slot i holds lag j = m - i so that head=m is the newest snapshot
    for j in range(m + 1):
        theta = -j * dt
        i = m - j
        hist.U[i] = _sample_history(u0, theta, x, grid, "u0")
        hist.V[i] = _sample_history(v0, theta, x, grid, "v0")
        ops.incidence(hist.U[i], hist.V[i], hist.G[i])
        hist.times[i] = theta
    return SimState(0.0, hist.U[m].copy(), hist.V[m].copy(), hist, params, kernel, grid, dt, ops=ops)


def compute_infected_field(state: SimState) -> np.ndarray:
    """Age-integrated infected-cell density from the current history."""
    h = state.history
    return np.maximum(state.ops.infected(h.G[h.order()]), 0.0)


def _check_finite(state: SimState, U, V):
    for name, arr in (("U", U), ("V", V)):
        sup = float(np.max(np.abs(arr)))
        if not math.isfinite(sup) or sup > BLOWUP_THRESHOLD:
            raise BlowUpError(state.t0 + (state.steps + 1) * state.dt, sup, name)


def step(state: SimState) -> SimState:
    """Advance one step of size ``dt`` in place and return the state."""
    ops, h, k, m = state.ops, state.history, state.dt, state.ops.m
    be = ops.be
    n = state.grid.n_points
    U, V = state.U, state.V

    lags = h.G[h.order()]
    I0 = ops.infected(lags)
    RU0 = ops.tumor_source(U, I0, lags[0], np.empty(n))
    RV0 = ops.delay_op @ lags[m]

    Up = ops.implicit_step(ops.u_bands, ops.u_fac, U, RU0, k, np.empty(n))
    Vp = ops.implicit_step(ops.v_bands, ops.v_fac, V, RV0, k, np.empty(n))
    np.maximum(Up, 0.0, out=Up)
    np.maximum(Vp, 0.0, out=Vp)

    stage = np.empty_like(lags)
    ops.incidence(Up, Vp, stage[0])
    stage[1:] = lags[:m]
    I1 = ops.infected(stage)
    RU1 = ops.tumor_source(Up, I1, stage[0], np.empty(n))
    RV1 = ops.delay_op @ (lags[m - 1] if m >= 1 else stage[0])

    RU0 += RU1
    RU0 *= 0.5
    RV0 += RV1
    RV0 *= 0.5
    U_new = ops.implicit_step(ops.u_bands, ops.u_fac, U, RU0, k, np.empty(n))
    V_new = ops.implicit_step(ops.v_bands, ops.v_fac, V, RV0, k, np.empty(n))
    _check_finite(state, U_new, V_new)
    state.clipped += be.clip_negative(U_new, UNDERSHOOT_TOL) + be.clip_negative(V_new, UNDERSHOOT_TOL)

    state.steps += 1
    state.t = state.t0 + state.steps * k
    G_new = ops.incidence(U_new, V_new, np.empty(n))
    h.push(state.t, U_new, V_new, G_new)
    state.U, state.V = U_new, V_new
    return state


@dataclass
class SimulationTrace:
    times: np.ndarray
    sup_U: np.ndarray
    l1_U: np.ndarray
    sup_V: np.ndarray
    l1_V: np.ndarray
    sup_I: np.ndarray
    snapshots: dict
    window: tuple[float, float]
    U_min: float
    U_max: float
    V_min: float
    V_max: float
    clipped: int
    x: np.ndarray

    COLUMNS = ("t", "sup_U", "l1_U", "sup_V", "l1_V", "sup_I")

    def rows(self):
        return zip(self.times, self.sup_U, self.l1_U, self.sup_V, self.l1_V, self.sup_I)

    def to_csv(self, path: str):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.COLUMNS)
            for row in self.rows():
                writer.writerow([f"{v:.17g}" for v in row])

    def snapshot_to_csv(self, t: float, path: str):
        U, V, I = self.snapshots[t]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("x", "U", "V", "I"))
            for row in zip(self.x, U, V, I):
                writer.writerow([f"{v:.17g}" for v in row])

    def summary(self) -> str:
        return (
            f"final-window [{self.window[0]:g}, {self.window[1]:g}]: "
            f"U in [{self.U_min:.6g}, {self.U_max:.6g}], V in [{self.V_min:.6g}, {self.V_max:.6g}]; "
            f"clipped undershoots: {self.clipped}"
        )


def simulate(
    state: SimState,
    t_end: float,
    sample_every: float | None = None,
    snapshot_times: Sequence[float] = (),
    window: float | None = None,
) -> SimulationTrace:
    """Step until ``t_end`` (absolute time), recording norms and extrema.

    Extrema cover the last ``max(10 tau, 0.1 t_end)`` time units unless
    ``window`` is given.
    """
    if not t_end > 0:
        raise InputError(f"t_end must be > 0, got {t_end}")
    dt = state.dt
    n_steps = max(0, round((t_end - state.t) / dt))
    stride = 1 if sample_every is None else max(1, round(sample_every / dt))
    if window is None:
        window = max(10 * state.params.tau, 0.1 * t_end)
    w_start = t_end - window
    snap_steps = {}
    for ts in snapshot_times:
        j = round((ts - state.t) / dt)
        if 0 <= j <= n_steps:
            snap_steps.setdefault(j, float(ts))

    w = state.grid.weights
    rec = {c: [] for c in SimulationTrace.COLUMNS}
    snaps = {}
    ext = [math.inf, -math.inf, math.inf, -math.inf]

    def record(j):
        I = compute_infected_field(state)
        if j % stride == 0 or j == n_steps:
            rec["t"].append(state.t)
            rec["sup_U"].append(float(np.max(np.abs(state.U))))
            rec["l1_U"].append(float(w @ np.abs(state.U)))
            rec["sup_V"].append(float(np.max(np.abs(state.V))))
            rec["l1_V"].append(float(w @ np.abs(state.V)))
            rec["sup_I"].append(float(np.max(I)))
        if j in snap_steps:
            snaps[snap_steps[j]] = (state.U.copy(), state.V.copy(), I)

    def track():
        if state.t >= w_start - 1e-9 * dt:
            ext[0] = min(ext[0], float(state.U.min()))
            ext[1] = max(ext[1], float(state.U.max()))
            ext[2] = min(ext[2], float(state.V.min()))
            ext[3] = max(ext[3], float(state.V.max()))

    record(0)
    track()
    for j in range(1, n_steps + 1):
        step(state)
        track()
        if j % stride == 0 or j == n_steps or j in snap_steps:
            record(j)

    return SimulationTrace(
        *(np.asarray(rec[c]) for c in SimulationTrace.COLUMNS),
        snapshots=snaps,
        window=(max(w_start, 0.0), state.t),
        U_min=ext[0],
        U_max=ext[1],
        V_min=ext[2],
        V_max=ext[3],
        clipped=state.clipped,
        x=state.grid.x,
    )
