"""Discretized Green's function of ``d2 * Laplacian - alpha`` on an age ladder.

A :class:`Kernel` stores, for every age ``a_j``, the matrix of kernel values
``Gamma(x_i, y_k, a_j)``.  Applying it multiplies by the trapezoid weights
first, so ``apply(j, f)`` approximates the integral of ``Gamma * f`` over y.

Two independent builders exist: a truncated cosine series (no-flux ends,
constant decay rate) and a Crank-Nicolson propagator of the discrete
operator (general decay field, Robin ends).
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import InputError, NumericalError, UnsupportedConfigurationError
from .model import GridSpec, as_field, robin_laplacian, tridiag_dense

__all__ = [
    "Kernel",
    "age_ladder",
    "build_kernel_spectral",
    "build_kernel_semigroup",
    "build_kernel",
    "apply_kernel",
    "dump_kernel_csv",
]


@dataclass(frozen=True)
class Kernel:
    grid: GridSpec
    ages: np.ndarray
    matrices: np.ndarray  # shape (len(ages), n, n)
    route: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ages.setflags(write=False)
        self.matrices.setflags(write=False)

    @property
    def weighted(self) -> np.ndarray:
        """Matrices with the quadrature weights folded into the columns."""
        return self.matrices * self.grid.weights[None, None, :]

    def apply(self, age_index: int, f) -> np.ndarray:
        return apply_kernel(self, age_index, f)

    def index_of(self, age: float) -> int:
        j = int(np.argmin(np.abs(self.ages - age)))
        if not math.isclose(self.ages[j], age, rel_tol=1e-9, abs_tol=1e-12):
            raise InputError(f"age {age} is not on the kernel's ladder")
        return j


def age_ladder(tau: float, dt: float) -> np.ndarray:
    """Ages ``0, dt, ..., tau``; ``dt`` must divide ``tau``."""
    if tau == 0:
        return np.zeros(1)
    m = round(tau / dt)
    if m < 1 or not math.isclose(m * dt, tau, rel_tol=1e-9, abs_tol=1e-12):
        raise InputError(f"dt={dt!r} does not divide tau={tau!r}")
    return np.arange(m + 1) * (tau / m)


def _check_ages(ages) -> np.ndarray:
    ages = np.asarray(ages, dtype=float)
    if ages.ndim != 1 or ages.size == 0 or ages[0] != 0.0:
        raise InputError("ages must be a 1-D ladder starting at 0")
    if np.any(np.diff(ages) <= 0):
        raise InputError("ages must be strictly increasing")
    return ages.copy()


def build_kernel_spectral(grid: GridSpec, d2: float, alpha: float, ages, modes: int = 64) -> Kernel:
    """Truncated cosine-series kernel, valid for no-flux ends and constant decay.

    The series keeps the constant mode (weight ``1/L``) so that the kernel
    integrates to ``exp(-alpha a)`` in y.  Age zero is stored as the exact
    identity under quadrature, ``diag(1/w)``.  Modes at or beyond the grid's
    Nyquist index alias under trapezoid quadrature, so at most ``n - 2``
    cosine modes are kept.
    """
    if np.ndim(alpha) != 0:
        a0 = np.asarray(alpha, dtype=float)
        if not np.all(a0 == a0.flat[0]):
            raise UnsupportedConfigurationError(
                "spectral kernel needs a constant alpha; use build_kernel_semigroup"
            )
        alpha = float(a0.flat[0])
    if not grid.is_neumann_v:
        raise UnsupportedConfigurationError(
            "spectral kernel needs eta2 = 0 at both ends; use build_kernel_semigroup"
        )
    if modes < 8:
        raise InputError(f"modes must be >= 8, got {modes}")
    ages = _check_ages(ages)
    used = min(int(modes), grid.n_points - 2)
    L = grid.length
    x = grid.x
    k = np.arange(1, used + 1) * (math.pi / L)
    basis = np.cos(np.outer(x, k))  # (n, modes)
    out = np.empty((ages.size, grid.n_points, grid.n_points))
    for j, a in enumerate(ages):
        if a == 0.0:
            out[j] = np.diag(1.0 / grid.weights)
            continue
        coef = (2.0 / L) * np.exp(-(k**2 * d2 + alpha) * a)
        out[j] = (basis * coef) @ basis.T + math.exp(-alpha * a) / L
    return Kernel(grid, ages, out, "spectral", {"modes": int(modes), "effective_modes": used, "d2": d2, "alpha": alpha})


def _cn_positive_step(diag_a: np.ndarray) -> float:
    """Largest step keeping the explicit half of Crank-Nicolson nonnegative."""
    worst = float(np.max(-diag_a))
    return math.inf if worst <= 0 else 2.0 / worst


def build_kernel_semigroup(
    grid: GridSpec,
    d2: float,
    alpha,
    ages,
    substeps: int = 4,
    positivity_floor: bool = True,
) -> Kernel:
    """Crank-Nicolson propagator of ``d2 D - alpha`` composed along the ladder.

    Each ladder increment is split into ``substeps`` CN steps.  With
    ``positivity_floor`` the count is raised until every CN step matrix is
    entrywise nonnegative, which keeps the kernel nonnegative and damps the
    stiff modes CN alone would leave oscillating.
    """
    if substeps < 1:
        raise InputError(f"substeps must be >= 1, got {substeps}")
    ages = _check_ages(ages)
    n = grid.n_points
    lower, diag, upper = robin_laplacian(grid, grid.eta2)
    alpha_f = as_field(grid, alpha, "alpha")
    gen = d2 * tridiag_dense(lower, diag, upper) - np.diag(alpha_f)
    k_pos = _cn_positive_step(np.diag(gen))
    eye = np.eye(n)
    w = grid.weights

    out = np.empty((ages.size, n, n))
    out[0] = np.diag(1.0 / w)
    prop = eye
    cache: dict[float, np.ndarray] = {}
    used = []
    for j in range(1, ages.size):
        da = float(ages[j] - ages[j - 1])
        key = round(da, 15)
        if key not in cache:
            s = substeps
            if positivity_floor and math.isfinite(k_pos):
                s = max(s, math.ceil(da / k_pos - 1e-12))
            k = da / s
            try:
                step = linalg.solve(eye - 0.5 * k * gen, eye + 0.5 * k * gen)
            except linalg.LinAlgError as exc:  # pragma: no cover - M-matrix is never singular
                raise NumericalError(f"singular Crank-Nicolson solve: {exc}") from exc
            cache[key] = np.linalg.matrix_power(step, s)
            used.append(s)
        prop = cache[key] @ prop
        out[j] = prop / w[None, :]
    meta = {"substeps": int(substeps), "effective_substeps": max(used, default=substeps), "d2": d2}
    return Kernel(grid, ages, out, "semigroup", meta)


def build_kernel(grid: GridSpec, d2: float, alpha, ages, route: str = "auto", modes: int = 64, substeps: int = 4) -> Kernel:
    """Pick the spectral series when it applies, the propagator otherwise."""
    constant = np.ndim(alpha) == 0 or bool(np.all(np.asarray(alpha) == np.asarray(alpha).flat[0]))
    if route == "auto":
        route = "spectral" if constant and grid.is_neumann_v else "semigroup"
    if route == "spectral":
        return build_kernel_spectral(grid, d2, alpha, ages, modes)
    if route == "semigroup":
        return build_kernel_semigroup(grid, d2, alpha, ages, substeps)
    raise InputError(f"unknown kernel route {route!r}")


def apply_kernel(kernel: Kernel, age_index: int, f) -> np.ndarray:
    if not 0 <= age_index < kernel.ages.size:
        raise InputError(f"age_index {age_index} out of range 0..{kernel.ages.size - 1}")
    f = np.asarray(f, dtype=float)
    if f.shape != (kernel.grid.n_points,):
        raise InputError(f"field of shape {f.shape} does not match the kernel grid ({kernel.grid.n_points} points)")
    return kernel.matrices[age_index] @ (kernel.grid.weights * f)


def dump_kernel_csv(kernel: Kernel, directory: str) -> list[str]:
    """One CSV per age: header of y-coordinates, then one row per x."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    y = kernel.grid.x
    for j, a in enumerate(kernel.ages):
        path = os.path.join(directory, f"kernel_age_{j:04d}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"{v:.17g}" for v in y])
            for row in kernel.matrices[j]:
                writer.writerow([f"{v:.17g}" for v in row])
        paths.append(path)
    return paths
