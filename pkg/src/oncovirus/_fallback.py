"""Pure numpy versions of the per-step kernels (same signatures as ``_kernels``)."""
import numpy as np

from .model import tridiag_dense


class TridiagFactor:
    __slots__ = ("inverse", "n")

    def __init__(self, lower, diag, upper):
        self.n = len(diag)
        self.inverse = np.linalg.inv(tridiag_dense(lower, diag, upper))


def factor_tridiag(lower, diag, upper):
    return TridiagFactor(np.asarray(lower, float), np.asarray(diag, float), np.asarray(upper, float))


def solve_factored(fac, rhs, out):
    np.dot(fac.inverse, rhs, out=out)


def cn_rhs(lower, diag, upper, x, half_k, R, k, out):
    """``out = x + half_k * T x + k * R`` for tridiagonal ``T``."""
    tx = diag * x
    tx[:-1] += upper * x[1:]
    tx[1:] += lower * x[:-1]
    np.multiply(tx, half_k, out=out)
    out += x
    if k != 0.0:
        out += k * R


def incidence(U, V, beta, h, G):
    """Holling-II incidence ``beta U V / (1 + h V)`` (mass action when h = 0)."""
    np.divide(beta * U * V, 1.0 + h * V, out=G)


def tumor_source(U, I, G, growth_kind, b, d, eps, RU):
    """``U F(U + I) - G``; growth_kind 0 is logistic, 1 Gompertz floored at ``eps``."""
    total = U + I
    if growth_kind == 0:
        rate = b - d * total
    else:
        rate = b - d * np.log(np.maximum(total, eps))
    np.multiply(U, rate, out=RU)
    RU -= G


def clip_negative(x, tol):
    bad = x < -tol
    count = int(np.count_nonzero(bad))
    if count:
        x[bad] = 0.0
    return count
