"""Domain types, growth/incidence families and the sampled Assumption-1 validator.

Fields (U, V, I, eigenfunctions) are plain ``numpy`` arrays of length
``grid.n_points``; the grid travels alongside them rather than inside them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import InputError

__all__ = [
    "GridSpec",
    "ModelParams",
    "Logistic",
    "Gompertz",
    "MassAction",
    "HollingII",
    "eval_growth",
    "eval_incidence",
    "AssumptionItem",
    "AssumptionReport",
    "validate_assumptions",
    "robin_laplacian",
    "as_field",
]

Number = Union[float, int]


def _pair(value) -> tuple[float, float]:
    if np.ndim(value) == 0:
        v = float(value)
        return (v, v)
    left, right = value
    return (float(left), float(right))


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [0, length] with per-endpoint Robin coefficients.

    ``eta1`` applies to U and ``eta2`` to V; zero recovers the no-flux case.
    """

    length: float = math.pi
    n_points: int = 129
    eta1: tuple[float, float] = (0.0, 0.0)
    eta2: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "eta1", _pair(self.eta1))
        object.__setattr__(self, "eta2", _pair(self.eta2))
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise InputError(f"n_points must be an integer >= 3, got {self.n_points}")
        object.__setattr__(self, "n_points", int(self.n_points))
        if not (math.isfinite(self.length) and self.length > 0):
            raise InputError(f"length must be finite and > 0, got {self.length}")
        for name in ("eta1", "eta2"):
            for eta in getattr(self, name):
                if not (math.isfinite(eta) and eta >= 0):
                    raise InputError(f"{name} entries must be finite and >= 0, got {eta}")

    @property
    def dx(self) -> float:
        return self.length / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_points)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights (they sum to ``length``)."""
        w = np.full(self.n_points, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    @property
    def is_neumann_v(self) -> bool:
        return self.eta2 == (0.0, 0.0)

    def refined(self, factor: int = 2) -> "GridSpec":
        """Grid whose nodes contain this grid's nodes (every ``factor``-th)."""
        return GridSpec(self.length, factor * (self.n_points - 1) + 1, self.eta1, self.eta2)


def as_field(grid: GridSpec, values, name: str = "field") -> np.ndarray:
    """Broadcast a scalar or validate an array as a field on ``grid``."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = np.full(grid.n_points, float(arr))
    if arr.shape != (grid.n_points,):
        raise InputError(f"{name} has shape {arr.shape}, grid expects ({grid.n_points},)")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def robin_laplacian(grid: GridSpec, eta: tuple[float, float]):
    """Tridiagonal second-difference operator with ghost-point Robin rows.

    Returns ``(lower, diag, upper)`` with ``len(lower) == len(upper) == n-1``.
    The ghost node is eliminated with the centered boundary derivative,
    so the stencil stays second order up to the endpoints.
    """
    n, dx = grid.n_points, grid.dx
    inv = 1.0 / dx**2
    lower = np.full(n - 1, inv)
    upper = np.full(n - 1, inv)
    diag = np.full(n, -2.0 * inv)
    upper[0] = 2.0 * inv
    lower[-1] = 2.0 * inv
    diag[0] -= 2.0 * dx * eta[0] * inv
    diag[-1] -= 2.0 * dx * eta[1] * inv
    return lower, diag, upper


def tridiag_dense(lower, diag, upper) -> np.ndarray:
    return np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)


# --- growth family ---------------------------------------------------------


@dataclass(frozen=True)
class Logistic:
    b: float
    d: float

    def __post_init__(self):
        if not math.isfinite(self.b) or not (math.isfinite(self.d) and self.d >= 0):
            raise InputError(f"Logistic needs finite b and d >= 0, got b={self.b}, d={self.d}")

    def __call__(self, u):
        return self.b - self.d * np.asarray(u, dtype=float)


@dataclass(frozen=True)
class Gompertz:
    """``b - d ln(u)`` with the logarithm's argument floored at ``eps``."""

    b: float
    d: float
    eps: float = 1e-8

    def __post_init__(self):
        if not (math.isfinite(self.b) and math.isfinite(self.d) and self.d >= 0 and self.eps > 0):
            raise InputError(f"Gompertz needs finite b, d >= 0, eps > 0 (got {self})")

    def __call__(self, u):
        return self.b - self.d * np.log(np.maximum(np.asarray(u, dtype=float), self.eps))


# --- incidence family ------------------------------------------------------


@dataclass(frozen=True)
class MassAction:
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise InputError(f"MassAction needs beta >= 0, got {self.beta}")

    @property
    def h(self) -> float:
        return 0.0

    def __call__(self, u, v):
        return self.beta * np.asarray(u, dtype=float) * np.asarray(v, dtype=float)

    def dv_at_zero(self, u):
        return self.beta * np.asarray(u, dtype=float)


@dataclass(frozen=True)
class HollingII:
    beta: float
    h: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta >= 0 and math.isfinite(self.h) and self.h >= 0):
            raise InputError(f"HollingII needs beta, h >= 0, got beta={self.beta}, h={self.h}")

    def __call__(self, u, v):
        v = np.asarray(v, dtype=float)
        return self.beta * np.asarray(u, dtype=float) * v / (1.0 + self.h * v)

    def dv_at_zero(self, u):
        return self.beta * np.asarray(u, dtype=float)


GrowthFamily = Union[Logistic, Gompertz]
IncidenceFamily = Union[MassAction, HollingII]


def _check_scalar(name, value, nonneg=True):
    value = float(value)
    if not math.isfinite(value):
        raise InputError(f"{name} must be finite, got {value}")
    if nonneg and value < 0:
        raise InputError(f"{name} must be >= 0, got {value}")
    return value


def eval_growth(family: GrowthFamily, u: Number) -> float:
    u = _check_scalar("u", u)
    return float(family(u))


def eval_incidence(family: IncidenceFamily, u: Number, v: Number) -> float:
    u = _check_scalar("u", u)
    v = _check_scalar("v", v)
    return float(family(u, v))


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the coupled tumor/virus system.

    ``alpha`` is either a scalar or an array sampled on the grid in use.
    Pass ``strict=False`` to skip positivity checks (used to provoke
    deliberate blow-ups in diagnostics).
    """

    d1: float
    d2: float
    alpha: Union[float, np.ndarray]
    kappa: float
    tau: float
    growth: GrowthFamily
    incidence: IncidenceFamily
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        alpha = self.alpha
        if np.ndim(alpha) == 0:
            alpha = float(alpha)
        else:
            alpha = np.asarray(alpha, dtype=float)
            alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        for name in ("d1", "d2", "kappa", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite")
        if not np.all(np.isfinite(alpha)):
            raise InputError("alpha must be finite")
        if not self.strict:
            return
        if self.d1 < 0 or self.d2 < 0:
            raise InputError(f"diffusion rates must be >= 0 (d1={self.d1}, d2={self.d2})")
        if self.kappa <= 0:
            raise InputError(f"kappa must be > 0, got {self.kappa}")
        if self.tau < 0:
            raise InputError(f"tau must be >= 0, got {self.tau}")
        if np.any(np.asarray(alpha) <= 0):
            raise InputError("alpha must be strictly positive")

    @property
    def alpha_is_constant(self) -> bool:
        return np.ndim(self.alpha) == 0 or bool(np.all(self.alpha == self.alpha.flat[0]))

    @property
    def alpha_scalar(self) -> float:
        if not self.alpha_is_constant:
            raise InputError("alpha varies in space")
        return float(np.asarray(self.alpha).flat[0])

    def alpha_field(self, grid: GridSpec) -> np.ndarray:
        return as_field(grid, self.alpha, "alpha")


# --- Assumption 1 validator ------------------------------------------------

ITEM_NAMES = (
    "F(0) > 0 and F(K0) < 0 for some K0",
    "F nonincreasing, strictly somewhere",
    "G vanishes on both axes",
    "both partials of G positive",
    "G(u,v) <= dG/dv(u,0) * v",
    "G/u bounded and nondecreasing in u",
)


@dataclass(frozen=True)
class AssumptionItem:
    index: int
    name: str
    passed: bool
    margin: float
    witness: tuple[float, float, float]  # (x, u1, u2) at the worst sample


@dataclass(frozen=True)
class AssumptionReport:
    items: tuple[AssumptionItem, ...]
    k0: float | None

    @property
    def all_passed(self) -> bool:
        return all(item.passed for item in self.items)

    def failed(self) -> list[int]:
        return [item.index for item in self.items if not item.passed]

    def format(self) -> str:
        lines = []
        for item in self.items:
            status = "pass" if item.passed else "FAIL"
            x, u, v = item.witness
            lines.append(
                f"({item.index}) {status}  {item.name:<40s} margin={item.margin:+.3e}  "
                f"witness=(x={x:g}, u1={u:g}, u2={v:g})"
            )
        lines.append(f"K0 = {self.k0!r}")
        return "\n".join(lines)


_SIGN_TOL = 1e-8


def _item(index, margins, points, k0_hint=None):
    """Build an item from per-sample slack (negative slack = violation)."""
    margins = np.asarray(margins, dtype=float).ravel()
    bad = ~np.isfinite(margins)
    margins = np.where(bad, -np.inf, margins)
    worst = int(np.argmin(margins))
    u, v = points[0].ravel()[worst], points[1].ravel()[worst]
    margin = float(margins[worst])
    return AssumptionItem(index, ITEM_NAMES[index - 1], margin >= 0, margin, (0.0, float(u), float(v)))


def validate_assumptions(
    growth: Callable,
    incidence: Callable,
    u_max: float = 10.0,
    v_max: float = 10.0,
    samples: int = 64,
) -> AssumptionReport:
    """Check the six structural conditions on a sample lattice.

    Items (4)-(6) are checked on the open quadrant u, v > 0: the shipped
    incidences have a vanishing u-partial on v = 0, which a closed-quadrant
    test would flag even though the conditions are meant for interior
    states.
    """
    if not (u_max > 0 and v_max > 0):
        raise InputError("u_max and v_max must be positive")
    if samples < 16:
        raise InputError(f"samples must be >= 16, got {samples}")
    tol = _SIGN_TOL
    hs = 1e-6 * max(u_max, v_max)
    items = []

    # (1) F(0) > 0 and a sign change of F in (0, u_max]
    f0 = float(growth(0.0))
    k0 = None
    scan = np.geomspace(u_max * 1e-6, u_max, 8 * samples)
    neg = np.nonzero(np.asarray(growth(scan)) < 0)[0]
    if neg.size:
        k0 = float(scan[neg[0]])
    if f0 <= 0:
        items.append(AssumptionItem(1, ITEM_NAMES[0], False, f0, (0.0, 0.0, 0.0)))
    elif k0 is None:
        margin = -float(np.min(growth(scan)))
        items.append(AssumptionItem(1, ITEM_NAMES[0], False, margin, (0.0, u_max, 0.0)))
    else:
        margin = min(f0, -float(growth(k0)))
        items.append(AssumptionItem(1, ITEM_NAMES[0], True, margin, (0.0, k0, 0.0)))

    # (2) monotone decrease of F
    us = np.linspace(0.0, u_max, samples)
    fu = np.asarray(growth(us), dtype=float)
    rise = np.diff(fu)
    slack = tol - rise
    item2 = _item(2, slack, (us[1:], np.zeros(samples - 1)))
    if item2.passed and not np.any(rise < -tol):
        item2 = AssumptionItem(2, ITEM_NAMES[1], False, 0.0, (0.0, 0.0, 0.0))
    items.append(item2)

    # (3) G(0, v) = G(u, 0) = 0
    vs = np.linspace(0.0, v_max, samples)
    on_u = np.abs(incidence(0.0, vs))
    on_v = np.abs(incidence(us, 0.0))
    pts = (np.concatenate([np.zeros(samples), us]), np.concatenate([vs, np.zeros(samples)]))
    items.append(_item(3, tol - np.concatenate([on_u, on_v]), pts))

    # interior lattice for (4)-(6)
    ui = np.linspace(u_max / samples, u_max, samples)
    vi = np.linspace(v_max / samples, v_max, samples)
    U, V = np.meshgrid(ui, vi, indexing="ij")

    du = (incidence(U + hs, V) - incidence(U - hs, V)) / (2 * hs)
    dv = (incidence(U, V + hs) - incidence(U, V - hs)) / (2 * hs)
    items.append(_item(4, np.minimum(du, dv) - tol, (U, V)))

    # one-sided second-order difference at v = 0
    g_v0 = (-3 * incidence(U, 0.0) + 4 * incidence(U, hs) - incidence(U, 2 * hs)) / (2 * hs)
    items.append(_item(5, g_v0 * V - incidence(U, V) + tol, (U, V)))

    def ratio(u, v):
        return incidence(u, v) / u

    tiny = np.full_like(V, u_max * 1e-8)
    bound = np.maximum(np.abs(ratio(U, V)), np.abs(ratio(tiny, V)))
    slope = (ratio(U + hs, V) - ratio(U - hs, V)) / (2 * hs)
    margin6 = np.minimum(slope + tol, np.where(np.isfinite(bound), 1e12 - bound, -np.inf))
    items.append(_item(6, margin6, (U, V)))

    return AssumptionReport(tuple(items), k0)
