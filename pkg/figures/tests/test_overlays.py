import json
from pathlib import Path

import numpy as np
import pytest

from gogrow_figures import overlays

REFERENCE = json.loads((Path(__file__).parent / "data" / "overlay_reference.json").read_text())


def test_formulas_match_harness_reference_table():
    # one-time cross-check: the re-implemented overlay formulas agree with
    # the table exported by the simulation harness (verify report)
    z = np.array(REFERENCE["z"])
    for chi_str, ref in REFERENCE["chis"].items():
        chi = float(chi_str)
        assert overlays.sigma_star(chi) == pytest.approx(ref["sigma_star"], rel=1e-12)
        assert np.allclose(overlays.wave_profile(chi, z), ref["profile"], rtol=1e-12)
        assert np.allclose(overlays.v_infinity(chi, z), ref["v_infinity"], rtol=1e-12)
        assert overlays.vinf_is_density(chi) == ref["vinf_normalisable"]


def test_histogram_constant():
    assert overlays.histogram_constant(4096, 2.0, 0.1) == pytest.approx(819.2)


def test_profile_overlay_plateau_equals_constant():
    # K dx u(z) has plateau K chi dx behind the front
    val = overlays.profile_overlay(2.0, 4096, 0.1, np.array([-3.0]))[0]
    assert val == pytest.approx(overlays.histogram_constant(4096, 2.0, 0.1))


def test_ancestry_overlay_peak_scaling():
    # pushed regime: peak at z=0 equals n dx (chi^2-1)/chi^3
    n, dx, chi = 167686, 0.5, 2.0
    curve = overlays.ancestry_overlay(chi, n, dx, np.array([0.0]))
    assert curve[0] == pytest.approx(n * dx * 0.375)


def test_ancestry_overlay_absent_in_pulled_regime():
    assert overlays.ancestry_overlay(0.5, 100, 0.5, np.array([0.0])) is None
    assert overlays.ancestry_overlay(1.0, 100, 0.5, np.array([0.0])) is None


def test_invalid_chi_rejected():
    for fn in (overlays.sigma_star, lambda c: overlays.wave_profile(c, 0.0),
               lambda c: overlays.v_infinity(c, 0.0)):
        with pytest.raises(ValueError):
            fn(-1.0)
