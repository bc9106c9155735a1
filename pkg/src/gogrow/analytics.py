"""Closed-form reference quantities and simple estimators.

The minimal wave speed and the traveling-wave profiles at that speed
have explicit forms with a regime change at chi = 1:

* pushed regime (chi > 1): speed chi + 1/chi, profile chi * exp(-chi z)
  ahead of the threshold and a flat plateau chi behind it;
* pulled regime (chi <= 1): speed 2, profile
  ((1-chi) z + 1) exp(-z) / (2-chi) ahead and plateau 1/(2-chi) behind.

Both profiles carry tail mass exactly 1 ahead of z = 0, matching the
threshold convention used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np


def sigma_star(chi: float) -> float:
    """Minimal traveling-wave speed."""
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    return chi + 1.0 / chi if chi > 1 else 2.0


def wave_profile(chi: float, z):
    """Traveling-wave density at the minimal speed, evaluated at z.

    Accepts scalars or arrays. Constant on z <= 0, decays to 0 as
    z -> inf, continuous at z = 0.
    """
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    z = np.asarray(z, dtype=float)
    if chi > 1:
        out = np.where(z > 0, chi * np.exp(-chi * np.minimum(z, 700.0 / chi)), chi)
    else:
        ahead = ((1 - chi) * z + 1) * np.exp(-np.minimum(z, 700.0))
        out = np.where(z > 0, ahead, 1.0) / (2 - chi)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class WaveProfile:
    """Bundle of chi, the minimal speed, and the profile evaluator."""

    chi: float
    sigma_star: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma_star", sigma_star(self.chi))

    def __call__(self, z):
        return wave_profile(self.chi, z)

    def evaluate(self, z):
        return wave_profile(self.chi, z)


def speed_estimator(times, xi, t1: float, t2: float) -> float:
    """Average front speed (xi(t2) - xi(t1)) / (t2 - t1).

    xi is read at the recorded snapshots nearest to t1 and t2; the
    series must cover both times (to within half the local cadence).
    """
    times = np.asarray(times, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if times.size != xi.size or times.size == 0:
        raise ValueError("times and xi must be equal-length, nonempty series")
    if not t1 < t2:
        raise ValueError(f"need t1 < t2, got {t1}, {t2}")
    gap = times[1] - times[0] if times.size > 1 else 0.0
    lo, hi = times[0] - gap / 2, times[-1] + gap / 2
    for t in (t1, t2):
        if not lo <= t <= hi:
            raise ValueError(f"series [{times[0]}, {times[-1]}] does not cover t={t}")
    i1 = int(np.argmin(np.abs(times - t1)))
    i2 = int(np.argmin(np.abs(times - t2)))
    v1, v2 = xi[i1], xi[i2]
    if not (np.isfinite(v1) and np.isfinite(v2)):
        raise ValueError("xi undefined (N < K) at a requested time")
    return float((v2 - v1) / (times[i2] - times[i1]))


def histogram(
    positions,
    bin_width: float,
    z_range: Tuple[float, float],
    center: float,
    K: int | None = None,
    chi: float | None = None,
):
    """Counts of positions in the moving frame z = x - center.

    Bins are left-closed, right-open. Returns (edges, counts, overlay)
    where overlay is the plateau constant K * chi * bin_width used to
    compare raw counts against the traveling-wave profile (None when K
    or chi is not given).
    """
    if not bin_width > 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    lo, hi = z_range
    if not lo < hi:
        raise ValueError(f"empty range {z_range}")
    n_bins = int(np.ceil((hi - lo) / bin_width - 1e-12))
    edges = lo + bin_width * np.arange(n_bins + 1)
    z = np.asarray(positions, dtype=float) - center
    idx = np.floor((z - lo) / bin_width).astype(int)
    valid = (idx >= 0) & (idx < n_bins)
    counts = np.bincount(idx[valid], minlength=n_bins)
    overlay = None if K is None or chi is None else float(K * chi * bin_width)
    return edges, counts, overlay
