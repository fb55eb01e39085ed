"""Regularizer values (isotropic TV, TGV2) and one-homogeneity predicates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridField, inner
from .operators import div2_arrays, grad_arrays, sym_grad_arrays


@dataclass(frozen=True)
class FunctionalKind:
    """Which regularizer J to use: 'tv' or 'tgv2' with weights (alpha0, alpha1)."""

    name: str
    alpha0: float = 2.0
    alpha1: float = 1.0

    def __post_init__(self):
        if self.name not in ("tv", "tgv2"):
            raise ValueError(f"unknown functional kind {self.name!r}")
        if self.alpha0 <= 0 or self.alpha1 <= 0:
            raise ValueError("alpha0 and alpha1 must be positive")

    @staticmethod
    def tv() -> "FunctionalKind":
        return FunctionalKind("tv")

    @staticmethod
    def tgv2(alpha0: float = 2.0, alpha1: float = 1.0) -> "FunctionalKind":
        return FunctionalKind("tgv2", alpha0, alpha1)


def tv_value(u: GridField) -> float:
    """Isotropic TV: sum over sites of the Euclidean gradient magnitude."""
    g1, g2 = grad_arrays(u.values)
    return float(np.sum(np.sqrt(g1 * g1 + g2 * g2)))


def tgv2_value(u: GridField, alpha0: float, alpha1: float, solver=None) -> float:
    """TGV2 via its primal form

        min_w  alpha1 * sum |grad u - w| + alpha0 * sum |sym_grad w|,

    solved over the auxiliary vector field w with the same primal-dual
    iteration used everywhere else.  Zero on affine fields (up to solver
    tolerance); no closed form exists in general.
    """
    from .solver import SolverParams  # deferred; solver imports FunctionalKind

    params = solver or SolverParams()
    uv = u.values
    g1, g2 = grad_arrays(uv)
    tau = sigma = params.step_ratio / math.sqrt(12.0)
    theta = params.over_relaxation
    w1 = g1.copy()
    w2 = g2.copy()
    z1, z2 = np.zeros_like(uv), np.zeros_like(uv)
    q11, q22, q12 = np.zeros_like(uv), np.zeros_like(uv), np.zeros_like(uv)
    w1b, w2b = w1, w2

    def value(w1, w2):
        e11, e22, e12 = sym_grad_arrays(w1, w2)
        return alpha1 * float(
            np.sum(np.sqrt((g1 - w1) ** 2 + (g2 - w2) ** 2))
        ) + alpha0 * float(np.sum(np.sqrt(e11**2 + e22**2 + 2.0 * e12**2)))

    prev = value(w1, w2)
    it = 0
    while it < params.max_iters:
        for _ in range(min(50, params.max_iters - it)):
            r1 = z1 + sigma * (g1 - w1b)
            r2 = z2 + sigma * (g2 - w2b)
            mag = np.sqrt(r1 * r1 + r2 * r2)
            fac = np.maximum(1.0, mag / alpha1)
            z1, z2 = r1 / fac, r2 / fac
            e11, e22, e12 = sym_grad_arrays(w1b, w2b)
            s11 = q11 + sigma * e11
            s22 = q22 + sigma * e22
            s12 = q12 + sigma * e12
            mag = np.sqrt(s11 * s11 + s22 * s22 + 2.0 * s12 * s12)
            fac = np.maximum(1.0, mag / alpha0)
            q11, q22, q12 = s11 / fac, s22 / fac, s12 / fac
            dv1, dv2 = div2_arrays(q11, q22, q12)
            w1n = w1 + tau * (z1 + dv1)
            w2n = w2 + tau * (z2 + dv2)
            w1b = w1n + theta * (w1n - w1)
            w2b = w2n + theta * (w2n - w2)
            w1, w2 = w1n, w2n
            it += 1
        cur = value(w1, w2)
        if abs(prev - cur) <= params.tol * (1.0 + abs(cur)):
            break
        prev = cur
    return value(w1, w2)


def j_value(kind: FunctionalKind, u: GridField, solver=None) -> float:
    if kind.name == "tv":
        return tv_value(u)
    return tgv2_value(u, kind.alpha0, kind.alpha1, solver=solver)


def one_hom_check(kind: FunctionalKind, u: GridField, alpha: float, solver=None) -> bool:
    """J(alpha u) == |alpha| J(u), to 1e-8 * (1 + J(u))."""
    ju = j_value(kind, u, solver=solver)
    jau = j_value(kind, alpha * u, solver=solver)
    return abs(jau - abs(alpha) * ju) <= 1e-8 * (1.0 + ju)


def subgrad_inequality_check(
    kind: FunctionalKind, p: GridField, v: GridField, solver=None
) -> bool:
    """J(v) >= <p, v> for p in dJ(u), with slack 1e-6 * (1 + J(v))."""
    jv = j_value(kind, v, solver=solver)
    return jv + 1e-6 * (1.0 + jv) >= inner(p, v)
