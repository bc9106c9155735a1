"""Closed-form overlay curves, re-implemented in the figure layer.

The formulas are deliberately duplicated here (not imported from the
simulation package) so the figure scripts stand alone; the test suite
cross-checks them once against a reference table exported by the
harness `verify` report.

Overlay scaling follows the histogram discretisation: a histogram of N
particles with bin width dx drawn against a density u carries the curve
N_ref * dx * u(z); for the traveling-wave overlay the plateau level is
the constant K * chi * dx.
"""

from __future__ import annotations

import numpy as np


def sigma_star(chi: float) -> float:
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    return chi + 1.0 / chi if chi > 1 else 2.0


def wave_profile(chi: float, z):
    """Minimal-speed traveling-wave density."""
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    z = np.asarray(z, dtype=float)
    if chi > 1:
        out = np.where(z > 0, chi * np.exp(-chi * np.minimum(z, 500.0)), chi)
    else:
        out = np.where(z > 0, ((1 - chi) * z + 1) * np.exp(-np.minimum(z, 500.0)), 1.0)
        out = out / (2 - chi)
    return out


def v_infinity(chi: float, z):
    """Stationary lineage density; a probability density only for chi > 1."""
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    z = np.asarray(z, dtype=float)
    if chi > 1:
        amp = (chi * chi - 1.0) / chi**3
        return amp * np.exp(np.where(z <= 0, z / chi, -(chi - 1.0 / chi) * z))
    return np.where(z < 0, np.exp((2 - chi) * np.minimum(z, 0.0)),
                    ((1 - chi) * np.maximum(z, 0.0) + 1.0) ** 2)


def vinf_is_density(chi: float) -> bool:
    return chi > 1


def histogram_constant(K: int, chi: float, dx: float) -> float:
    """Plateau level of the wave overlay for raw particle counts."""
    return K * chi * dx


def profile_overlay(chi: float, K: int, dx: float, z):
    """Raw-count overlay: K dx u(z); its plateau equals histogram_constant."""
    return K * dx * wave_profile(chi, z)


def ancestry_overlay(chi: float, n_selected: int, dx: float, z):
    """Raw-count overlay for the ancestral histogram: n dx v_inf(z).

    Only meaningful in the pushed regime where v_inf is a probability
    density; returns None otherwise.
    """
    if not vinf_is_density(chi):
        return None
    return n_selected * dx * v_infinity(chi, z)
