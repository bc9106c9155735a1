import numpy as np
import pytest
from scipy.integrate import quad

from gogrow.ancestral_fp import (
    DomainTooSmallError,
    DriftProfile,
    beta_drift,
    fp_evolve,
    fp_step,
    v_infinity,
    v_infinity_is_density,
)
from gogrow.analytics import wave_profile
from gogrow.grid import GridField
from gogrow.limit_pde import CflError


# -- beta ---------------------------------------------------------------------


def test_beta_pushed_values():
    assert beta_drift(2.0, -1.0) == pytest.approx(0.5)
    assert beta_drift(2.0, 1.0) == pytest.approx(-1.5)


def test_beta_critical_flat_on_the_right():
    assert beta_drift(1.0, 1.0) == 0.0
    assert beta_drift(1.0, 7.3) == 0.0
    assert beta_drift(1.0, -0.5) == pytest.approx(1.0)


def test_beta_pulled_values():
    # chi=0.5: left 2-chi, right 2(1-chi)/((1-chi) z + 1)
    assert beta_drift(0.5, -2.0) == pytest.approx(1.5)
    assert beta_drift(0.5, 1.0) == pytest.approx(1.0 / 1.5)


def test_beta_single_discontinuity_at_zero():
    for chi, left, right in [(2.0, 0.5, -1.5), (0.5, 1.5, 1.0), (1.0, 1.0, 0.0)]:
        prof = DriftProfile(chi)
        assert prof.beta_sided(0.0, "left") == pytest.approx(left)
        assert prof.beta_sided(0.0, "right") == pytest.approx(right)
        # continuous away from zero
        for z in (-3.0, -0.4, 0.4, 3.0):
            assert abs(beta_drift(chi, z + 1e-9) - beta_drift(chi, z - 1e-9)) < 1e-6


def test_beta_invalid_chi():
    with pytest.raises(ValueError):
        beta_drift(0.0, 1.0)


# -- v_infinity ------------------------------------------------------------------


def test_vinf_pushed_peak_value():
    assert v_infinity(2.0, 0.0) == pytest.approx(0.375)  # (4-1)/8


def test_vinf_pushed_decay_rates():
    # right decay rate chi - 1/chi = 1.5 for chi=2, left rate 1/chi = 0.5
    r = np.log(v_infinity(2.0, 1.0) / v_infinity(2.0, 2.0))
    assert r == pytest.approx(1.5)
    l = np.log(v_infinity(2.0, -2.0) / v_infinity(2.0, -1.0))
    assert l == pytest.approx(-0.5)


def test_vinf_pushed_is_normalised():
    for chi in (1.5, 2.0, 3.0):
        val, _ = quad(lambda z: v_infinity(chi, z), -np.inf, np.inf)
        assert val == pytest.approx(1.0, abs=1e-8)
        assert v_infinity_is_density(chi)


def test_vinf_pulled_formula_and_flag():
    assert v_infinity(0.5, 1.0) == pytest.approx(2.25)  # (0.5*1+1)^2
    assert v_infinity(0.5, -1.0) == pytest.approx(np.exp(-1.5))
    assert not v_infinity_is_density(0.5)
    assert not v_infinity_is_density(1.0)


def test_vinf_solves_stationarity_identity():
    # flux beta v - v' vanishes identically for the closed forms
    h = 1e-6
    for chi in (2.0, 1.5, 0.5):
        for z in (-4.0, -1.0, 0.5, 2.0, 6.0):
            dv = (v_infinity(chi, z + h) - v_infinity(chi, z - h)) / (2 * h)
            flux = beta_drift(chi, z) * v_infinity(chi, z) - dv
            assert abs(flux) < 1e-6


# -- fp_step -----------------------------------------------------------------------


def grid_from(fn, z_min, z_max, dz):
    n = int(round((z_max - z_min) / dz)) + 1
    return GridField.from_function(fn, z_min, dz, n)


def normalised(field):
    return GridField(field.x0, field.dx, field.values / field.mass())


def test_fp_step_conserves_mass_exactly():
    for chi in (2.0, 0.5):
        drift = DriftProfile(chi)
        v = grid_from(lambda z: np.exp(-((z - 1) ** 2)), -15, 25, 0.05)
        dt = 0.9 * min(0.05**2 / 2, 0.05 / drift.max_abs_beta())
        m0 = v.mass()
        for _ in range(20):
            v = fp_step(v, drift, dt)
        assert abs(v.mass() - m0) / m0 < 1e-12


def test_fp_step_cfl_guard():
    v = grid_from(lambda z: np.exp(-(z**2)), -5, 5, 0.1)
    with pytest.raises(CflError):
        fp_step(v, DriftProfile(2.0), dt=0.1)


def test_fp_step_keeps_positivity():
    drift = DriftProfile(2.0)
    rng = np.random.default_rng(2)
    vals = rng.uniform(0, 1, 301)
    v = GridField(-15.0, 0.1, vals)
    dt = 0.9 * min(0.1**2 / 2, 0.1 / drift.max_abs_beta())
    for _ in range(50):
        v = fp_step(v, drift, dt)
        assert (v.values >= 0).all()


def test_vinf_discrete_stationarity():
    # one step applied to the sampled equilibrium moves it by < 1e-3 in L1
    dz = 0.01
    drift = DriftProfile(2.0)
    v = grid_from(lambda z: v_infinity(2.0, z), -30, 30, dz)
    dt = 0.9 * min(dz * dz / 2, dz / drift.max_abs_beta())
    out = fp_step(v, drift, dt)
    l1 = np.abs(out.values - v.values).sum() * dz
    assert l1 < 1e-3


def test_adjoint_annihilates_constants_interior():
    # mass conservation in adjoint form: columns of the one-step matrix sum
    # to 1, i.e. the flux operator's adjoint kills the all-ones vector
    dz = 0.1
    n = 61
    drift = DriftProfile(2.0)
    dt = 0.5 * min(dz * dz / 2, dz / drift.max_abs_beta())
    cols = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cols[:, j] = fp_step(GridField(-3.0, dz, e), drift, dt).values
    resid = cols.sum(axis=0) - 1.0
    assert np.abs(resid).max() < 1e-12


# -- fp_evolve ---------------------------------------------------------------------


def truncated_profile_v0(chi, z_min=-40.0, z_max=40.0, dz=0.02):
    field = grid_from(
        lambda z: wave_profile(chi, z) * ((z >= -20) & (z <= 10)), z_min, z_max, dz
    )
    return normalised(field)


def test_fp_evolve_zero_horizon_returns_v0():
    v0 = truncated_profile_v0(2.0, -30, 30, 0.05)
    recs = fp_evolve(v0, DriftProfile(2.0), s_end=0.0, record_times=[0.0])
    assert len(recs) == 1
    assert np.array_equal(recs[0].field.values, v0.values)


def test_fp_evolve_requires_unit_mass():
    v0 = grid_from(lambda z: np.exp(-(z**2)), -10, 10, 0.05)
    with pytest.raises(ValueError):
        fp_evolve(v0, DriftProfile(2.0), 1.0, [1.0])


def test_fp_evolve_boundary_guard():
    # narrow domain: rightward drift in the pulled case hits the wall
    drift = DriftProfile(0.5)
    v0 = normalised(grid_from(lambda z: np.exp(-(z**2) / 0.5), -6, 6, 0.05))
    with pytest.raises(DomainTooSmallError):
        fp_evolve(v0, drift, s_end=30.0, record_times=[30.0])


def test_fp_evolve_pushed_converges_to_equilibrium():
    # chi=2 from the truncated wave: monotone approach to v_inf (the full
    # L1 < 1e-2 at s=100 check runs in the acceptance suite)
    chi = 2.0
    dz = 0.02
    v0 = truncated_profile_v0(chi, -36.0, 24.0, dz)
    recs = fp_evolve(v0, DriftProfile(chi), s_end=40.0,
                     record_times=[10.0, 20.0, 40.0])
    dists = []
    for r in recs[1:]:
        vinf = v_infinity(chi, r.field.x())
        dists.append(np.abs(r.field.values - vinf).sum() * dz)
    assert all(b < a for a, b in zip(dists, dists[1:]))
    assert dists[-1] < 0.2
    assert abs(recs[-1].mode) <= dz + 1e-9  # mode at the kink


def test_fp_evolve_pulled_mean_drifts_right():
    chi = 0.5
    dz = 0.05
    v0 = truncated_profile_v0(chi, -40.0, 120.0, dz)
    recs = fp_evolve(v0, DriftProfile(chi), s_end=30.0,
                     record_times=np.arange(0, 31, 5))
    means = [r.mean for r in recs]
    assert all(b > a for a, b in zip(means, means[1:]))


def test_fp_evolve_critical_mode_pinned_at_zero():
    chi = 1.0
    dz = 0.05
    v0 = truncated_profile_v0(chi, -40.0, 120.0, dz)
    recs = fp_evolve(v0, DriftProfile(chi), s_end=30.0,
                     record_times=np.arange(0, 31, 10))
    means = [r.mean for r in recs]
    assert all(b > a for a, b in zip(means, means[1:]))
    for r in recs[1:]:
        assert abs(r.mode) <= dz + 1e-12
