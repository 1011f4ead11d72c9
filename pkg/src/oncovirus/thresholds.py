"""Principal eigenvalues gating tumor growth and viral invasion.

All operators are assembled from the same ghost-point Laplacian and kernel
quadrature the integrator uses, so the thresholds describe the discrete
dynamics that are actually simulated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DomainError, InputError, NumericalError
from .kernel import Kernel
from .model import GridSpec, as_field, robin_laplacian, tridiag_dense

__all__ = [
    "EigenResult",
    "principal_eigenpair",
    "sigma1",
    "lambda1_linear",
    "s1_delayed",
    "lambda1_closed_form",
    "scalar_steady_state",
]

MAX_ITER = 100_000
REL_TOL = 1e-12
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class EigenResult:
    value: float
    eigenfunction: np.ndarray  # sup-norm 1, positive
    method: str
    residual: float
    iterations: int


def _finish(A, psi, method, iterations):
    psi = psi / np.max(np.abs(psi))
    if psi.sum() < 0:
        psi = -psi
    Apsi = A @ psi
    value = float(psi @ Apsi / (psi @ psi))
    residual = float(np.max(np.abs(Apsi - value * psi)))
    return EigenResult(value, psi, method, residual, iterations)


def principal_eigenpair(A: np.ndarray, start=None, method: str = "inverse", shift: float | None = None) -> EigenResult:
    """Principal eigenpair of a Metzler matrix by power iteration.

    ``method="shift"`` iterates ``A + shift*I`` (a nonnegative matrix);
    convergence slows like ``1 - gap/shift``, which on fine grids can exceed
    the iteration cap.  ``method="inverse"`` iterates the resolvent
    ``(mu I - A)^-1`` with ``mu`` just above the Gershgorin bound; the
    resolvent is nonnegative too, and contracts at ``(mu-l1)/(mu-l2)``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    psi = np.ones(n) if start is None else np.abs(np.asarray(start, dtype=float)) + 1e-300
    psi = psi / np.max(psi)

    if method == "shift":
        if shift is None:
            shift = float(np.max(np.abs(np.diag(A))))
        M = A + shift * np.eye(n)
        apply = M.__matmul__
    elif method == "inverse":
        off = np.abs(A).sum(axis=1) - np.abs(np.diag(A))
        bound = float(np.max(np.diag(A) + off))
        scale = max(1.0, float(np.max(np.abs(np.diag(A)))))
        mu = bound + 1e-3 * max(1.0, abs(bound)) + 1e-9 * scale
        lu = linalg.lu_factor(mu * np.eye(n) - A)

        def apply(v):
            return linalg.lu_solve(lu, v)
    else:
        raise InputError(f"unknown method {method!r}")

    prev = math.inf
    for it in range(1, MAX_ITER + 1):
        y = apply(psi)
        top = np.max(np.abs(y))
        if not math.isfinite(top) or top == 0.0:
            raise NumericalError("power iteration collapsed", residual=math.inf)
        psi = y / top
        res = _finish(A, psi, method, it)
        change = abs(res.value - prev) / max(1.0, abs(res.value))
        prev = res.value
        if res.residual < 1e-3 * RESIDUAL_TOL or (change < REL_TOL and res.residual < RESIDUAL_TOL):
            return res
    raise NumericalError(
        f"power iteration did not converge in {MAX_ITER} iterations (residual {res.residual:.3e})",
        residual=res.residual,
    )


def _checked(result: EigenResult) -> EigenResult:
    if np.min(result.eigenfunction) <= 0:
        raise NumericalError(
            "principal eigenfunction is not strictly positive (reducible operator?)",
            residual=result.residual,
        )
    return result


def _eta(grid: GridSpec, eta1):
    return grid.eta1 if eta1 is None else GridSpec(grid.length, grid.n_points, eta1, grid.eta2).eta1


def sigma1(grid: GridSpec, d1: float, growth_at_zero, eta1=None, method: str = "inverse") -> EigenResult:
    """Tumor-growth threshold: principal eigenvalue of ``d1 D + F(x, 0)``."""
    if d1 < 0:
        raise InputError(f"d1 must be >= 0, got {d1}")
    f0 = as_field(grid, growth_at_zero, "growth_at_zero")
    if d1 == 0:
        # decoupled nodes: the spectrum is the diagonal itself
        if np.ptp(f0) == 0:
            return EigenResult(float(f0[0]), np.ones(grid.n_points), "diagonal", 0.0, 0)
        raise NumericalError("d1 = 0 with a nonconstant growth rate has no positive eigenfunction")
    A = d1 * tridiag_dense(*robin_laplacian(grid, _eta(grid, eta1))) + np.diag(f0)
    shift = float(np.max(np.abs(np.diag(A)))) + 2 * d1 / grid.dx**2 if method == "shift" else None
    return _checked(principal_eigenpair(A, method=method, shift=shift))


def _kernel_matrix(kernel_at_tau, grid: GridSpec) -> np.ndarray:
    if isinstance(kernel_at_tau, Kernel):
        if kernel_at_tau.grid != grid:
            raise InputError("kernel grid does not match")
        return np.asarray(kernel_at_tau.matrices[-1])
    K = np.asarray(kernel_at_tau, dtype=float)
    if K.shape != (grid.n_points, grid.n_points):
        raise InputError(f"kernel matrix has shape {K.shape}")
    return K


def _invasion_parts(grid, d2, alpha, kernel_at_tau, weight):
    wt = as_field(grid, weight, "weight")
    if np.any(wt < 0):
        raise InputError("weight must be nonnegative")
    alpha_f = as_field(grid, alpha, "alpha")
    base = d2 * tridiag_dense(*robin_laplacian(grid, grid.eta2)) - np.diag(alpha_f)
    nonlocal_part = _kernel_matrix(kernel_at_tau, grid) * (grid.weights * wt)[None, :]
    return base, nonlocal_part, alpha_f


def lambda1_linear(grid: GridSpec, d2: float, alpha, kernel_at_tau, weight, method: str = "inverse") -> EigenResult:
    """Invasion threshold without the delay factor.

    Principal eigenvalue of ``d2 D - alpha + K_tau diag(w * weight)`` where
    ``weight`` is the v-derivative of the incidence at the virus-free state.
    """
    base, nonlocal_part, _ = _invasion_parts(grid, d2, alpha, kernel_at_tau, weight)
    A = base + nonlocal_part
    shift = float(np.max(np.abs(np.diag(A)))) + 2 * d2 / grid.dx**2 if method == "shift" else None
    return _checked(principal_eigenpair(A, method=method, shift=shift))


def s1_delayed(grid: GridSpec, d2: float, alpha, kernel_at_tau, weight, tau: float, tol: float = 1e-10) -> EigenResult:
    """Solve ``s = Lambda(s)`` where Lambda(s) is the principal eigenvalue of
    ``d2 D - alpha + exp(-s tau) K_tau diag(w * weight)``.

    ``Lambda(s) - s`` is strictly decreasing, so bisection on a bracket that
    is widened until the sign changes finds the unique root.
    """
    if tau < 0:
        raise InputError(f"tau must be >= 0, got {tau}")
    if tau == 0:
        res = lambda1_linear(grid, d2, alpha, kernel_at_tau, weight)
        return EigenResult(res.value, res.eigenfunction, "bisection", res.residual, res.iterations)
    base, nonlocal_part, alpha_f = _invasion_parts(grid, d2, alpha, kernel_at_tau, weight)
    state = {"psi": None, "iters": 0}

    def Lam(s):
        res = principal_eigenpair(base + math.exp(-s * tau) * nonlocal_part, start=state["psi"])
        state["psi"] = res.eigenfunction
        state["iters"] += res.iterations
        return res

    def g(s):
        return Lam(s).value - s

    lo = -float(np.max(alpha_f)) - 1.0
    hi = Lam(0.0).value + 1.0
    for _ in range(200):
        if g(lo) > 0:
            break
        lo *= 2.0
    else:
        raise NumericalError("could not bracket s1 from below")
    for _ in range(200):
        if g(hi) < 0:
            break
        hi += max(1.0, abs(hi))
    else:
        raise NumericalError("could not bracket s1 from above")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    res = _checked(Lam(s))
    return EigenResult(s, res.eigenfunction, "bisection", res.residual, state["iters"])


def lambda1_closed_form(alpha: float, beta: float, b: float, d: float, tau: float) -> float:
    """``-alpha + beta b / (d exp(alpha tau))`` for the homogeneous logistic case."""
    if not d > 0:
        raise DomainError(f"d must be > 0, got {d}")
    return -alpha + beta * b / (d * math.exp(alpha * tau))


def scalar_steady_state(grid: GridSpec, d1: float, growth, eta1=None, dt: float = 0.1, max_time: float = 1e6) -> np.ndarray:
    """Long-time limit of ``z' = d1 D z + z F(z)`` from a positive start.

    Linearly implicit steps ``(I - dt d1 D - dt F(z_n)) z_{n+1} = z_n`` until
    the relative change per unit time drops below 1e-10.  Returns zeros
    when the population dies out.
    """
    lo, dg, up = robin_laplacian(grid, _eta(grid, eta1))
    n = grid.n_points
    ab = np.zeros((3, n))
    ab[0, 1:] = -dt * d1 * up
    ab[2, :-1] = -dt * d1 * lo
    z = np.ones(n)
    t = 0.0
    while t < max_time:
        band = ab.copy()
        band[1] = 1.0 - dt * d1 * dg - dt * np.asarray(growth(z), dtype=float) * np.ones(n)
        z_new = linalg.solve_banded((1, 1), band, z)
        top = float(np.max(np.abs(z_new)))
        change = float(np.max(np.abs(z_new - z))) / max(top, 1e-300) / dt
        z = z_new
        t += dt
        if top < 1e-12:
            return np.zeros(n)
        if change < 1e-10:
            return z
    raise NumericalError("scalar equation did not reach a steady state")
