import numpy as np
import pytest
from scipy.integrate import quad

from gogrow.analytics import WaveProfile, histogram, sigma_star, speed_estimator, wave_profile
from gogrow.ancestral_fp import beta_drift


def test_sigma_star_values():
    assert sigma_star(2.0) == 2.5
    assert sigma_star(0.5) == 2.0
    assert sigma_star(1.0) == 2.0


def test_sigma_star_continuous_at_one_and_at_least_two():
    # the two branches agree at chi=1: 1 + 1/1 = 2
    assert sigma_star(1.0) == 1.0 + 1.0 / 1.0
    for chi in np.linspace(0.05, 5.0, 200):
        s = sigma_star(float(chi))
        assert s >= 2.0
        assert (s == 2.0) == (chi <= 1)


def test_sigma_star_rejects_nonpositive_chi():
    with pytest.raises(ValueError):
        sigma_star(0.0)
    with pytest.raises(ValueError):
        sigma_star(-1.0)


def test_wave_profile_plateau_values():
    assert wave_profile(2.0, 0.0) == 2.0
    assert wave_profile(2.0, -5.0) == 2.0
    assert wave_profile(0.5, -3.0) == pytest.approx(1 / 1.5)


def test_wave_profile_shape():
    for chi in (0.3, 0.5, 1.0, 1.7, 2.0, 4.0):
        z = np.linspace(-5, 30, 2000)
        u = wave_profile(chi, z)
        ahead = u[z >= 0]
        assert (np.diff(ahead) <= 1e-15).all()  # nonincreasing on z >= 0
        assert np.allclose(u[z <= 0], u[0])     # constant behind
        assert wave_profile(chi, 1e-12) == pytest.approx(wave_profile(chi, 0.0), rel=1e-9)
        assert wave_profile(chi, 400.0) < 1e-100


def test_wave_tail_mass_is_one_both_regimes():
    # independent quadrature of the closed forms on z > 0
    for chi in (2.0, 3.0, 1.0, 0.5, 0.25):
        val, err = quad(lambda z: wave_profile(chi, z), 0, np.inf)
        assert err < 1e-7
        assert val == pytest.approx(1.0, abs=1e-6)


def test_wave_profile_rejects_nonpositive_chi():
    with pytest.raises(ValueError):
        wave_profile(-2.0, 1.0)


def test_wave_profile_bundle():
    w = WaveProfile(2.0)
    assert w.sigma_star == 2.5
    assert w(0.5) == pytest.approx(2.0 * np.exp(-1.0))


def test_beta_identity_against_log_derivative():
    # beta(z) - sigma* + chi 1_{z<0} == 2 (log u)'(z), finite differences
    h = 1e-4
    for chi in (2.0, 1.5, 1.0, 0.5):
        s = sigma_star(chi)
        for z in np.concatenate([np.linspace(-8, -0.01, 40), np.linspace(0.01, 8, 40)]):
            logd = (np.log(wave_profile(chi, z + h)) - np.log(wave_profile(chi, z - h))) / (2 * h)
            lhs = beta_drift(chi, z) - s + chi * (z < 0)
            assert abs(lhs - 2 * logd) < 1e-6


def test_speed_estimator_linear_series():
    t = np.linspace(0, 300, 301)
    xi = 2.5 * t + 1.0
    assert speed_estimator(t, xi, 100, 200) == pytest.approx(2.5)


def test_speed_estimator_reads_nearest_snapshots():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    xi = np.array([0.0, 10.0, 20.0, 30.0])
    # 0.9 and 2.1 round to snapshots at 1 and 2
    assert speed_estimator(t, xi, 0.9, 2.1) == pytest.approx(10.0)


def test_speed_estimator_coverage_error():
    t = np.linspace(0, 50, 51)
    with pytest.raises(ValueError):
        speed_estimator(t, 2 * t, 10, 200)


def test_histogram_overlay_constant():
    edges, counts, C = histogram([0.0], 0.1, (-5, 3), center=0.0, K=4096, chi=2.0)
    assert C == pytest.approx(819.2)


def test_histogram_empty_range_and_counts():
    edges, counts, _ = histogram([100.0, 200.0], 0.5, (-5, 5), center=0.0)
    assert counts.sum() == 0
    with pytest.raises(ValueError):
        histogram([0.0], 0.5, (3, 3), center=0.0)


def test_histogram_bins_left_closed():
    edges, counts, _ = histogram([0.0, 0.5, 0.499999, -5.0, 4.999], 0.5, (-5, 5), center=0.0)
    assert counts.sum() == 5
    i0 = int(np.floor((0.0 + 5) / 0.5))
    assert counts[i0] == 2  # 0.0 and 0.499999
    assert counts[i0 + 1] == 1  # 0.5 goes to the next bin
    assert counts[0] == 1  # -5.0 included at the left edge
    assert counts[-1] == 1


def test_histogram_centering():
    edges, counts, _ = histogram([102.0], 1.0, (-3, 3), center=100.0)
    assert counts[int(np.floor((2.0 + 3) / 1.0))] == 1
