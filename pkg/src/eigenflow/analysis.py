"""Affinity measure, eigenvalue estimates, eigenfunction validation and the
spectral TV transform."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroNorm
from .functionals import FunctionalKind
from .grid import GridField, inner, norm

_TINY = 1e-30


def affinity(u: GridField, tu: GridField) -> float:
    """A(u) = |<u, T(u)>| / (||u|| ||T(u)||), clamped to [0, 1].

    Equals 1 iff T(u) is a nonzero multiple of u (Cauchy-Schwarz equality).
    """
    nu = norm(u)
    nt = norm(tu)
    if nu <= _TINY or nt <= _TINY:
        raise ZeroNorm("affinity undefined for zero u or T(u)")
    return min(abs(inner(u, tu)) / (nu * nt), 1.0)


def theta_deg(a: float) -> float:
    """theta = arccos(A) in degrees, in [0, 90]."""
    return math.degrees(math.acos(min(max(a, 0.0), 1.0)))


def rayleigh_lambda(u: GridField, p: GridField, j_val: float) -> float:
    """lambda = J(u) / ||u||^2; equals ||p|| / ||u|| for exact eigenpairs."""
    nu = norm(u)
    if nu <= _TINY:
        raise ZeroNorm("rayleigh_lambda undefined for zero u")
    return j_val / (nu * nu)


# ---------------------------------------------------------------------------
# eigenfunction validation


@dataclass
class ValidationReport:
    """Outcome of the three eigenpair oracles; always produced, never raises."""

    lam: float
    valid_claim: bool
    # (a) gradient-flow shape preservation and extinction time
    correlation_curve: list = field(default_factory=list)  # (t, corr)
    min_correlation: float = float("nan")
    extinction_time: float = float("nan")
    extinction_expected: float = float("nan")
    shape_ok: bool = False
    extinction_ok: bool = False
    # (b) prox shrinkage at alpha = 2 lambda, expected factor 0.5
    shrink_ratio: float = float("nan")
    shrink_rel_error: float = float("nan")
    shrink_ok: bool = False
    # (c) affinity and subgradient residual
    affinity: float = float("nan")
    theta: float = float("nan")
    subgrad_residual: float = float("nan")
    affinity_ok: bool = False

    @property
    def all_ok(self) -> bool:
        return (
            self.valid_claim
            and self.shape_ok
            and self.extinction_ok
            and self.shrink_ok
            and self.affinity_ok
        )

    def render(self) -> str:
        lines = [
            f"lambda: {self.lam:.10g}",
            f"valid_claim: {self.valid_claim}",
            f"min_correlation: {self.min_correlation:.6f}",
            f"extinction_time: {self.extinction_time:.6g}",
            f"extinction_expected: {self.extinction_expected:.6g}",
            f"shape_ok: {self.shape_ok}",
            f"extinction_ok: {self.extinction_ok}",
            f"shrink_ratio: {self.shrink_ratio:.6f}",
            f"shrink_rel_error: {self.shrink_rel_error:.6g}",
            f"shrink_ok: {self.shrink_ok}",
            f"affinity: {self.affinity:.8f}",
            f"theta_deg: {self.theta:.6g}",
            f"subgrad_residual: {self.subgrad_residual:.6g}",
            f"affinity_ok: {self.affinity_ok}",
            f"all_ok: {self.all_ok}",
        ]
        return "\n".join(lines) + "\n"


def validate_eigenfunction(
    u: GridField,
    lam: float,
    kind: FunctionalKind,
    inner_params=None,
    shape_corr_tol: float = 0.99,
    extinction_tol: float = 0.10,
    shrink_tol: float = 0.02,
    theta_thresh: float = 1.0,
    residual_tol: float = 0.05,
) -> ValidationReport:
    """Check a claimed eigenpair (u, lam) against its analytic signatures:

    (a) the gradient flow preserves shape and extinguishes at t = 1/lam,
    (b) prox at alpha = 2 lam halves the amplitude,
    (c) the affinity is ~1 and the subgradient is ~lam * u.
    """
    from .flows import run_gradient_flow
    from .solver import prox, subgradient_at

    report = ValidationReport(lam=lam, valid_claim=lam > 0 and norm(u) > _TINY)
    if not report.valid_claim:
        return report

    nu = norm(u)

    # (a) gradient flow extinction profile
    dt = 0.05 / lam
    t_end = 1.5 / lam
    traj = run_gradient_flow(u, kind, dt, t_end, inner=inner_params)
    corr_cut = 0.9 / lam
    corrs = []
    extinction = float("nan")
    for t, ut in traj:
        nt = norm(ut)
        if math.isnan(extinction) and nt <= 0.01 * nu:
            extinction = t
        if nt > 0.01 * nu:
            corrs.append((t, inner(ut, u) / (nt * nu)))
    report.correlation_curve = corrs
    early = [c for t, c in corrs if t <= corr_cut]
    report.min_correlation = min(early) if early else float("nan")
    report.shape_ok = bool(early) and report.min_correlation >= shape_corr_tol
    report.extinction_time = extinction
    report.extinction_expected = 1.0 / lam
    report.extinction_ok = (
        not math.isnan(extinction)
        and abs(extinction - 1.0 / lam) <= extinction_tol / lam
    )

    # (b) prox shrinkage at alpha = 2 lambda
    res = prox(kind, u, 2.0 * lam, params=inner_params, raise_on_max_iters=False)
    half = 0.5 * u
    report.shrink_ratio = inner(res.u, u) / (nu * nu)
    report.shrink_rel_error = norm(res.u - half) / norm(half)
    report.shrink_ok = report.shrink_rel_error <= shrink_tol

    # (c) affinity and subgradient residual
    p = subgradient_at(kind, u, params=inner_params, raise_on_max_iters=False)
    try:
        report.affinity = affinity(u, p)
        report.theta = theta_deg(report.affinity)
        report.subgrad_residual = norm(p - lam * u) / (lam * nu)
        report.affinity_ok = (
            report.affinity >= math.cos(math.radians(theta_thresh))
            and report.subgrad_residual <= residual_tol
        )
    except ZeroNorm:
        report.affinity_ok = False
    return report


# ---------------------------------------------------------------------------
# spectral transform


@dataclass
class SpectralResult:
    """Scale-space decomposition of f along the gradient flow.

    phi[k] is the spectral component at times[k]; spectrum[k] = ||phi_k||_L1;
    residual is the unresolved remainder so that sum(phi_k * dt) + residual
    reconstructs f exactly.
    """

    times: np.ndarray
    phi: list
    spectrum: np.ndarray
    residual: GridField
    dt: float

    def spectrum_csv(self) -> str:
        lines = ["t,S"]
        for t, s in zip(self.times, self.spectrum):
            lines.append(f"{t:.17g},{s:.17g}")
        return "\n".join(lines) + "\n"


def spectral_transform(
    f: GridField,
    kind: FunctionalKind | None = None,
    dt: float = 0.1,
    t_end: float = 10.0,
    inner_params=None,
) -> SpectralResult:
    """phi(t) = u_tt(t) * t along the gradient flow of f; S(t) = ||phi||_L1.

    u_tt is taken by centered second differences over the sampled
    trajectory (one-sided at the endpoints).  An eigenfunction input
    concentrates all its mass in a single impulse at t = 1/lambda.
    """
    from .flows import run_gradient_flow

    kind = kind or FunctionalKind.tv()
    traj = run_gradient_flow(f, kind, dt, t_end, inner=inner_params)
    us = [u.values for _, u in traj]
    times = np.array([t for t, _ in traj])
    k_last = len(us) - 1
    phi = []
    for k in range(len(us)):
        if k == 0:
            lo, mid, hi = 0, 1, 2
        elif k == k_last:
            lo, mid, hi = k - 2, k - 1, k
        else:
            lo, mid, hi = k - 1, k, k + 1
        utt = (us[hi] - 2.0 * us[mid] + us[lo]) / (dt * dt)
        phi.append(GridField(utt * times[k]))
    spectrum = np.array([float(np.sum(np.abs(p.values))) for p in phi])
    recon = sum((p.values for p in phi), np.zeros_like(f.values)) * dt
    residual = GridField(f.values - recon)
    return SpectralResult(
        times=times, phi=phi, spectrum=spectrum, residual=residual, dt=dt
    )


def spectral_filter(sr: SpectralResult, h) -> GridField:
    """f_H = sum_k phi_k H(t_k) dt, plus residual * H just past t_end.

    With H == 1 this reconstructs the input exactly (residual convention);
    an ideal low-pass filter (H = 1 for t >= t_c) therefore keeps the
    residual, which carries the unresolved coarse scales.
    """
    out = np.zeros_like(sr.residual.values)
    for t, p in zip(sr.times, sr.phi):
        out += p.values * float(h(t)) * sr.dt
    out += sr.residual.values * float(h(sr.times[-1] + sr.dt))
    return GridField(out)
