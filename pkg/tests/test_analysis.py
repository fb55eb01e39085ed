import math

import numpy as np
import pytest

from eigenflow.analysis import (
    affinity,
    rayleigh_lambda,
    spectral_filter,
    spectral_transform,
    theta_deg,
    validate_eigenfunction,
)
from eigenflow.errors import ZeroNorm
from eigenflow.functionals import FunctionalKind, tv_value
from eigenflow.grid import GridField, norm


def spike_eigenfunction(n=32, width=2):
    # centered 1D plateau, mean removed: exact TV eigenfunction
    v = np.zeros(n)
    lo = n // 2 - width // 2
    v[lo : lo + width] = 1.0
    v -= v.mean()
    u = GridField(v)
    lam = tv_value(u) / norm(u) ** 2
    return u, lam


def test_affinity_of_self_is_one():
    rng = np.random.default_rng(51)
    for _ in range(10):
        u = GridField(rng.standard_normal((6, 6)))
        assert affinity(u, 3.0 * u) == pytest.approx(1.0, abs=1e-12)
        assert affinity(u, -2.0 * u) == pytest.approx(1.0, abs=1e-12)  # absolute value


def test_affinity_orthogonal_is_zero():
    u = GridField(np.array([1.0, 0.0]))
    v = GridField(np.array([0.0, 1.0]))
    assert affinity(u, v) == pytest.approx(0.0)


def test_affinity_zero_raises():
    u = GridField(np.ones((2, 2)))
    z = GridField(np.zeros((2, 2)))
    with pytest.raises(ZeroNorm):
        affinity(u, z)


def test_theta_deg_values():
    assert theta_deg(1.0) == 0.0
    assert theta_deg(0.0) == 90.0
    assert theta_deg(math.cos(math.radians(30))) == pytest.approx(30.0)
    # clamped outside [0, 1]
    assert theta_deg(1.5) == 0.0


def test_rayleigh_lambda():
    u = GridField(np.array([3.0, 4.0]))
    assert rayleigh_lambda(u, u, 50.0) == pytest.approx(2.0)


def test_validate_exact_eigenfunction_passes():
    u, lam = spike_eigenfunction()
    rep = validate_eigenfunction(u, lam, FunctionalKind.tv())
    assert rep.shape_ok
    assert rep.extinction_ok
    assert rep.shrink_ok
    assert rep.affinity_ok
    assert rep.all_ok
    assert rep.extinction_time == pytest.approx(1.0 / lam, rel=0.10)
    assert rep.shrink_ratio == pytest.approx(0.5, abs=0.02)


def test_validate_wrong_lambda_fails():
    u, lam = spike_eigenfunction()
    rep = validate_eigenfunction(u, 5.0 * lam, FunctionalKind.tv())
    assert not rep.all_ok


def test_validate_non_eigenfunction_fails():
    rng = np.random.default_rng(53)
    v = rng.standard_normal(32)
    v -= v.mean()
    u = GridField(v)
    lam = tv_value(u) / norm(u) ** 2
    rep = validate_eigenfunction(u, lam, FunctionalKind.tv())
    assert not rep.all_ok


def test_validate_rejects_nonpositive_lambda():
    u, _ = spike_eigenfunction()
    rep = validate_eigenfunction(u, -1.0, FunctionalKind.tv())
    assert not rep.valid_claim
    assert not rep.all_ok


def test_spectral_transform_eigenfunction_concentrates():
    u, lam = spike_eigenfunction()
    sr = spectral_transform(u, FunctionalKind.tv(), dt=0.05 / lam, t_end=1.5 / lam)
    mass = float(np.sum(sr.spectrum) * sr.dt)
    sel = (sr.times >= 0.8 / lam) & (sr.times <= 1.2 / lam)
    frac = float(np.sum(sr.spectrum[sel]) * sr.dt) / mass
    assert frac >= 0.90


def test_spectral_filter_identity_reconstructs():
    rng = np.random.default_rng(59)
    v = rng.standard_normal(24)
    v -= v.mean()
    f = GridField(v)
    sr = spectral_transform(f, FunctionalKind.tv(), dt=0.3, t_end=3.0)
    rec = spectral_filter(sr, lambda t: 1.0)
    assert norm(rec - f) <= 1e-10 * max(norm(f), 1.0)


def test_spectral_filter_lowpass_keeps_residual():
    u, lam = spike_eigenfunction()
    sr = spectral_transform(u, FunctionalKind.tv(), dt=0.05 / lam, t_end=1.5 / lam)
    # ideal LPF passing only scales beyond the eigenfunction's keeps ~nothing
    hp = spectral_filter(sr, lambda t: 1.0 if t <= 0.5 / lam else 0.0)
    assert norm(hp) <= 0.15 * norm(u)


def test_spectrum_csv_header():
    u, lam = spike_eigenfunction()
    sr = spectral_transform(u, FunctionalKind.tv(), dt=1.0, t_end=3.0)
    lines = sr.spectrum_csv().splitlines()
    assert lines[0] == "t,S"
    assert len(lines) == len(sr.times) + 1
