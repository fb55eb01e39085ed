"""Nonlinear inverse power method baseline.

Iterates

    u^{k+1} = argmin_{||v|| <= 1}  J(v) - lam^k <v, u^k>,   lam^k = J(u^k)/||u^k||^2

with the unit-ball indicator handled by radial projection inside the primal
step of the same primal-dual engine used by the flows.  The outer stopping
rule is unified with the flows' angle criterion so traces are directly
comparable (the source method's own rule differs; noted in output headers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import affinity, theta_deg
from .errors import DegenerateInput
from .flows import EigenResult, FlowConfig, FlowTrace, _j_estimate, _subgrad
from .functionals import FunctionalKind, j_value, tgv2_value, tv_value
from .grid import GridField, inner, norm, null_project
from .operators import div2_arrays, div_arrays, grad_arrays, sym_grad_arrays
from .solver import (
    CHECK_EVERY,
    SolverParams,
    WarmState,
    tv_lipschitz_sq,
    TGV_LIPSCHITZ_SQ,
    _proj_tensor_ball,
    _proj_vec_ball,
    _rel_change,
)

_TINY = 1e-12


def _proj_unit_l2(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x)
    return x / n if n > 1.0 else x


def _ipm_tv(ukv, lam, params, warm):
    tau = sigma = params.step_ratio / math.sqrt(tv_lipschitz_sq(ukv.shape))
    theta = params.over_relaxation
    if warm is not None:
        v, z1, z2 = warm.u.copy(), warm.z1.copy(), warm.z2.copy()
    else:
        v = _proj_unit_l2(ukv.copy())
        z1, z2 = np.zeros_like(ukv), np.zeros_like(ukv)
    vb = v
    it = 0
    prev_obj = None
    residual = math.inf
    while it < params.max_iters:
        for _ in range(min(CHECK_EVERY, params.max_iters - it)):
            g1, g2 = grad_arrays(vb)
            z1n, z2n = _proj_vec_ball(z1 + sigma * g1, z2 + sigma * g2, 1.0)
            vn = _proj_unit_l2(v + tau * div_arrays(z1n, z2n) + tau * lam * ukv)
            vb = vn + theta * (vn - v)
            dv = _rel_change(vn, v)
            dz = max(_rel_change(z1n, z1), _rel_change(z2n, z2))
            v, z1, z2 = vn, z1n, z2n
            it += 1
        g1, g2 = grad_arrays(v)
        obj = float(np.sum(np.sqrt(g1 * g1 + g2 * g2))) - lam * float(
            np.sum(v * ukv)
        )
        dobj = math.inf if prev_obj is None else abs(prev_obj - obj) / (1.0 + abs(obj))
        prev_obj = obj
        residual = max(dv, dz, dobj)
        if residual <= params.tol:
            break
    return v, obj, it, residual, WarmState(v, z1, z2)


def _ipm_tgv(ukv, lam, a0, a1, params, warm):
    tau = sigma = params.step_ratio / math.sqrt(TGV_LIPSCHITZ_SQ)
    theta = params.over_relaxation
    zeros = lambda: np.zeros_like(ukv)
    if warm is not None and warm.w1 is not None:
        v = warm.u.copy()
        z1, z2 = warm.z1.copy(), warm.z2.copy()
        w1, w2 = warm.w1.copy(), warm.w2.copy()
        q11, q22, q12 = warm.q11.copy(), warm.q22.copy(), warm.q12.copy()
    else:
        v = _proj_unit_l2(ukv.copy())
        z1, z2, w1, w2, q11, q22, q12 = (zeros() for _ in range(7))
    vb, w1b, w2b = v, w1, w2
    it = 0
    prev_obj = None
    residual = math.inf
    while it < params.max_iters:
        for _ in range(min(CHECK_EVERY, params.max_iters - it)):
            g1, g2 = grad_arrays(vb)
            z1n, z2n = _proj_vec_ball(
                z1 + sigma * (g1 - w1b), z2 + sigma * (g2 - w2b), a1
            )
            e11, e22, e12 = sym_grad_arrays(w1b, w2b)
            q11n, q22n, q12n = _proj_tensor_ball(
                q11 + sigma * e11, q22 + sigma * e22, q12 + sigma * e12, a0
            )
            vn = _proj_unit_l2(v + tau * div_arrays(z1n, z2n) + tau * lam * ukv)
            dv1, dv2 = div2_arrays(q11n, q22n, q12n)
            w1n = w1 + tau * (z1n + dv1)
            w2n = w2 + tau * (z2n + dv2)
            vb = vn + theta * (vn - v)
            w1b = w1n + theta * (w1n - w1)
            w2b = w2n + theta * (w2n - w2)
            dv = max(_rel_change(vn, v), _rel_change(w1n, w1), _rel_change(w2n, w2))
            dz = max(_rel_change(z1n, z1), _rel_change(z2n, z2))
            v, z1, z2 = vn, z1n, z2n
            w1, w2, q11, q22, q12 = w1n, w2n, q11n, q22n, q12n
            it += 1
        g1, g2 = grad_arrays(v)
        e11, e22, e12 = sym_grad_arrays(w1, w2)
        obj = (
            a1 * float(np.sum(np.sqrt((g1 - w1) ** 2 + (g2 - w2) ** 2)))
            + a0 * float(np.sum(np.sqrt(e11**2 + e22**2 + 2.0 * e12**2)))
            - lam * float(np.sum(v * ukv))
        )
        dobj = math.inf if prev_obj is None else abs(prev_obj - obj) / (1.0 + abs(obj))
        prev_obj = obj
        residual = max(dv, dz, dobj)
        if residual <= params.tol:
            break
    return v, obj, it, residual, WarmState(v, z1, z2, w1, w2, q11, q22, q12)


@dataclass
class IpmStepResult:
    u: GridField
    objective: float
    iters: int
    residual: float
    state: WarmState
    p: GridField = None  # subgradient at u recovered from the dual, -div z


def ipm_step(
    u_k: GridField,
    kind: FunctionalKind,
    inner_params: SolverParams | None = None,
    lam: float | None = None,
    warm: WarmState | None = None,
) -> IpmStepResult:
    """One ball-constrained descent step; returns the minimizer (||v|| <= 1)."""
    params = inner_params or SolverParams()
    nu = norm(u_k)
    if nu <= _TINY:
        raise DegenerateInput("||u_k|| = 0 in IPM step")
    if lam is None:
        if kind.name == "tv":
            j = tv_value(u_k)
        else:
            j = tgv2_value(u_k, kind.alpha0, kind.alpha1, solver=params)
        lam = j / (nu * nu)
    ukv = u_k.values
    if kind.name == "tv":
        v, obj, it, res, state = _ipm_tv(ukv, lam, params, warm)
    else:
        v, obj, it, res, state = _ipm_tgv(
            ukv, lam, kind.alpha0, kind.alpha1, params, warm
        )
    p = GridField(-div_arrays(state.z1, state.z2))
    return IpmStepResult(GridField(v), obj, it, res, state, p)


def run_ipm(
    f: GridField,
    kind: FunctionalKind,
    cfg: FlowConfig | None = None,
    callback=None,
) -> EigenResult:
    """Iterate ipm_step under the flows' angle-based stopping rule."""
    cfg = cfg or FlowConfig()
    u = null_project(f, kind)
    if norm(u) <= _TINY:
        raise DegenerateInput("input lies in the null space of J")
    sub = _subgrad(kind, u, cfg)
    p = sub.p
    j_cur = _j_estimate(kind, u, p)
    if j_cur <= 1e-10 * (1.0 + norm(u)):
        raise DegenerateInput("J(null_project(f)) = 0")

    trace = FlowTrace(
        meta={
            "method": "ipm",
            "functional": kind.name,
            "stopping": "angle rule shared with the flows",
        }
    )
    a = affinity(u, p)
    th = theta_deg(a)
    nsq = norm(u) ** 2
    trace.add(0, 0.0, j_cur, nsq, a, th, j_cur / nsq)

    converged = False
    for k in range(1, cfg.max_outer + 1):
        j_exact = j_value(kind, u, solver=cfg.inner)
        lam_k = j_exact / (norm(u) ** 2)
        # cold start every outer solve: warm primal/dual pairs from the
        # previous (different) problem destabilize the iteration near the
        # fixed point, where the minimizer's ray is flat
        step = ipm_step(u, kind, inner_params=cfg.inner, lam=lam_k, warm=None)
        # the descent step can drift into the null space of J (affine part
        # for TGV2); remove it or lambda collapses to zero
        u_next = null_project(step.u, kind)
        nv = norm(u_next)
        if nv <= _TINY:
            # objective reached zero: the current u already satisfies the
            # fixed-point condition, keep it and stop
            converged = True
            break
        u = (1.0 / nv) * u_next
        # subgradient comes free from the inner solve's dual, p = -div z
        p = step.p
        j_cur = _j_estimate(kind, u, p)
        a = affinity(u, p)
        th_new = theta_deg(a)
        nsq = norm(u) ** 2
        trace.add(k, float(k), j_cur, nsq, a, th_new, j_cur / nsq)
        if callback is not None:
            callback(k, u)
        if abs(th_new - th) < cfg.eps and th_new <= cfg.theta_thresh:
            th = th_new
            converged = True
            break
        th = th_new

    lam = j_cur / (norm(u) ** 2)
    return EigenResult(u_star=u, lam=lam, affinity=a, converged=converged, trace=trace)
