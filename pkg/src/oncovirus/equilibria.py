"""Constant steady states, regime classification and persistence bounds for
the homogeneous logistic / saturated-incidence specialization.

Everything here is scalar arithmetic.  ``exact`` mode solves the steady
state of the full system; ``paper`` mode roots a reduced quadratic instead;
both are checked through the same exact residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .errors import DomainError, InputError, UnsupportedConfigurationError
from .model import HollingII, Logistic, MassAction, ModelParams
from .thresholds import lambda1_closed_form

__all__ = [
    "HomogeneousParams",
    "Equilibrium",
    "EquilibriumSet",
    "Regime",
    "PersistenceBounds",
    "steady_state_residual",
    "find_constant_equilibria",
    "classify_regime",
    "persistence_lower_bounds",
    "h_min_values",
]

BAND = 1e-8
V_TOL = 1e-12


@dataclass(frozen=True)
class HomogeneousParams:
    b: float
    d: float
    beta: float
    alpha: float
    tau: float
    h: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("b", "d", "beta", "alpha", "tau", "h", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite")
        if self.beta < 0 or self.h < 0 or self.tau < 0:
            raise InputError("beta, h and tau must be >= 0")
        if self.alpha <= 0 or self.kappa <= 0:
            raise InputError("alpha and kappa must be > 0")

    @classmethod
    def from_model(cls, params: ModelParams) -> "HomogeneousParams":
        if not isinstance(params.growth, Logistic):
            raise UnsupportedConfigurationError("constant equilibria need logistic growth")
        if not isinstance(params.incidence, (HollingII, MassAction)):
            raise UnsupportedConfigurationError("constant equilibria need Holling II or mass-action incidence")
        if not params.alpha_is_constant:
            raise UnsupportedConfigurationError("constant equilibria need a constant alpha")
        g, inc = params.growth, params.incidence
        return cls(g.b, g.d, inc.beta, params.alpha_scalar, params.tau, inc.h, params.kappa)

    @property
    def ratio(self) -> float:
        """``beta b / (alpha d e^{alpha tau})``; +-inf when d = 0."""
        den = self.alpha * self.d * math.exp(self.alpha * self.tau)
        if den == 0:
            return math.copysign(math.inf, self.beta * self.b) if self.beta * self.b else math.nan
        return self.beta * self.b / den


ParamsLike = Union[HomogeneousParams, ModelParams]


def _homog(params: ParamsLike) -> HomogeneousParams:
    return params if isinstance(params, HomogeneousParams) else HomogeneousParams.from_model(params)


@dataclass(frozen=True)
class Equilibrium:
    U: float
    V: float
    residual: tuple[float, float]


@dataclass(frozen=True)
class EquilibriumSet:
    E0: Equilibrium
    E1: Optional[Equilibrium]
    E3: Optional[Equilibrium]
    coefficient_mode: str

    def present(self) -> list[str]:
        return [name for name in ("E0", "E1", "E3") if getattr(self, name) is not None]


def steady_state_residual(params: ParamsLike, U: float, V: float) -> tuple[float, float]:
    """Right-hand sides of the homogeneous system at a constant state.

    The infected compartment at equilibrium is
    ``I* = beta (1 - e^{-alpha tau}) / (alpha kappa) * U V / (1 + h V)``.
    """
    p = _homog(params)
    if U < 0 or V < 0:
        raise InputError(f"U and V must be >= 0, got ({U}, {V})")
    g = p.beta * U * V / (1.0 + p.h * V)
    infected = -math.expm1(-p.alpha * p.tau) / (p.alpha * p.kappa) * g
    r1 = -g + U * (p.b - p.d * (U + infected))
    r2 = -p.alpha * V + math.exp(-p.alpha * p.tau) * g
    return r1, r2


def _u_on_nullcline(p: HomogeneousParams, V: float) -> float:
    # r2 = 0 with V > 0
    return p.alpha * math.exp(p.alpha * p.tau) * (1.0 + p.h * V) / p.beta


def _reduced(p: HomogeneousParams, V: float) -> float:
    """``r1 / U`` along the V-nullcline; strictly decreasing in V."""
    ea = math.exp(p.alpha * p.tau)
    return (
        p.b
        - p.beta * V / (1.0 + p.h * V)
        - p.d * p.alpha * ea * (1.0 + p.h * V) / p.beta
        - p.d * math.expm1(p.alpha * p.tau) * V / p.kappa
    )


def _v3_exact(p: HomogeneousParams) -> float:
    hi = 1.0
    while _reduced(p, hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError("no sign change in the steady-state residual")
    lo = 0.0
    while hi - lo > V_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _reduced(p, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def paper_coefficients(params: ParamsLike) -> tuple[float, float, float]:
    """Reduced quadratic ``A V^2 + B V + C = 0`` for the positive state.

    Its I-term coefficient differs from the exact steady state, so the root
    carries a small residual; kept for comparison only.
    """
    p = _homog(params)
    a, b, d, beta, h, k = p.alpha, p.b, p.d, p.beta, p.h, p.kappa
    ea = math.exp(a * p.tau)
    A = -d * a**2 * ea**2 * h**2 - (beta * a**2 * ea * h / k) * (ea - 1.0)
    B = a * ea * (-beta**2 + beta * b * h - 2 * d * a * ea * h - (a * beta / k) * (ea - 1.0))
    C = a * (beta * b - d * a * ea)
    return A, B, C


def _v3_paper(p: HomogeneousParams) -> float:
    A, B, C = paper_coefficients(p)
    if A == 0:
        if B == 0:
            raise DomainError("degenerate quadratic coefficients")
        return -C / B
    disc = B * B - 4 * A * C
    if disc < 0:
        raise DomainError("reduced quadratic has no real root")
    sq = math.sqrt(disc)
    # stable pair of roots
    q = -0.5 * (B + math.copysign(sq, B))
    roots = [r for r in (q / A, C / q if q != 0 else math.nan) if r > 0]
    if not roots:
        raise DomainError("reduced quadratic has no positive root")
    return max(roots)


def find_constant_equilibria(params: ParamsLike, coefficient_mode: str = "exact") -> EquilibriumSet:
    p = _homog(params)
    if not p.d > 0:
        raise InputError(f"d must be > 0, got {p.d}")
    if coefficient_mode not in ("exact", "paper"):
        raise InputError(f"coefficient_mode must be 'exact' or 'paper', got {coefficient_mode!r}")

    def make(U, V):
        return Equilibrium(U, V, steady_state_residual(p, U, V))

    e0 = make(0.0, 0.0)
    e1 = make(p.b / p.d, 0.0) if p.b > 0 else None
    e3 = None
    if p.b > 0 and p.ratio > 1:
        V = _v3_exact(p) if coefficient_mode == "exact" else _v3_paper(p)
        e3 = make(_u_on_nullcline(p, V), V)
    return EquilibriumSet(e0, e1, e3, coefficient_mode)


@dataclass(frozen=True)
class Regime:
    variant: str  # Extinction | TumorOnly | Persistent | Indeterminate
    sigma1: float
    lambda1: float
    ratio: float
    reason: str = ""

    def __str__(self) -> str:
        return self.variant


def classify_regime(params: ParamsLike) -> Regime:
    p = _homog(params)
    ratio = p.ratio
    lam = lambda1_closed_form(p.alpha, p.beta, p.b, p.d, p.tau) if p.d > 0 else math.nan

    def out(variant, reason=""):
        return Regime(variant, p.b, lam, ratio, reason)

    if abs(p.b) < BAND:
        return out("Indeterminate", "b on the tumor-growth threshold")
    if p.b < 0:
        return out("Extinction")
    if not math.isfinite(ratio):
        return out("Indeterminate", "ratio undefined (d = 0)")
    if abs(ratio - 1.0) < BAND:
        return out("Indeterminate", "ratio on the invasion threshold")
    return out("Persistent" if ratio > 1 else "TumorOnly")


def h_min_values(params: ParamsLike) -> tuple[float, float]:
    """``(h_min_statement, h_min_proof)``.

    Each is the smallest h making both factors of the matching V bound
    positive; the proof variant is the threshold used for ``applicable``.
    """
    p = _homog(params)
    ea = math.exp(p.alpha * p.tau)
    P = p.beta * p.b - p.alpha * p.d * ea
    first = P / p.b**2
    stmt = (p.beta * p.kappa + 1.0 / ea - 1.0) / (p.b * p.kappa)
    proof = (p.beta * p.kappa + ea - 1.0) / (p.b * p.kappa)
    return max(first, stmt), max(first, proof)


@dataclass(frozen=True)
class PersistenceBounds:
    U_lb: float
    V_lb: float
    h_min: float
    variant: str
    applicable: bool
    U_lb_raw: float
    V_lb_raw: float


def persistence_lower_bounds(params: ParamsLike, variant: str = "statement") -> PersistenceBounds:
    """Asymptotic lower bounds on U and V in the persistent regime.

    ``variant`` selects the constant in the V bound: ``statement`` uses
    ``1 - e^{-alpha tau}``, ``proof`` uses ``1 - e^{alpha tau}``.  Raw values
    are kept; the reported bounds are clipped at zero.  ``applicable`` is
    true when h exceeds ``h_min_proof``.
    """
    p = _homog(params)
    if variant not in ("statement", "proof"):
        raise InputError(f"variant must be 'statement' or 'proof', got {variant!r}")
    if not (p.b > 0 and p.d > 0):
        raise DomainError("persistence bounds need b > 0 and d > 0")
    if not p.ratio > 1:
        raise DomainError(f"persistence bounds need ratio > 1, got {p.ratio:.6g}")
    a, b, d, beta, h, k = p.alpha, p.b, p.d, p.beta, p.h, p.kappa
    ea = math.exp(a * p.tau)
    P = beta * b - a * d * ea
    den = a * k * b * d * h + (1.0 - 1.0 / ea) * P
    u_raw = a * k * (b * b * h - P) / den
    c = (1.0 - 1.0 / ea) if variant == "statement" else (1.0 - ea)
    v_raw = P * (h * b * k - beta * k + c) / (h * ea * den) if h > 0 else -math.inf
    _, h_ref = h_min_values(p)
    return PersistenceBounds(
        U_lb=max(u_raw, 0.0),
        V_lb=max(v_raw, 0.0),
        h_min=h_ref,
        variant=variant,
        applicable=h > h_ref,
        U_lb_raw=u_raw,
        V_lb_raw=v_raw,
    )
