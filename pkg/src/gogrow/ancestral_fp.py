"""Ancestral-lineage drift and Fokker-Planck evolution.

In the moving frame of the minimal-speed wave, the lineage of a sampled
particle diffuses (coefficient sqrt(2)) with drift

    beta(z) = sigma* - chi * 1_{z < 0} + 2 u'(z) / u(z),

u being the wave profile. With the closed-form profiles this reduces to
piecewise elementary expressions with a single discontinuity at z = 0:

    chi > 1:  beta = 1/chi          (z < 0),   1/chi - chi            (z > 0)
    chi <= 1: beta = 2 - chi        (z < 0),   2(1-chi)/((1-chi)z+1)  (z > 0)

The lineage density v(s, z) then satisfies the conservative equation
dv/ds = d2v/dz2 - d/dz( beta v ). For chi > 1 it admits the normalised
equilibrium v_inf = (chi^2-1)/chi^3 * exp(int_0^z beta); for chi <= 1
the stationary solution is not integrable and v drifts right forever.

The solver is a finite-volume scheme with upwind advective flux and a
two-point diffusive flux; boundary fluxes are zero, so mass is conserved
to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .analytics import sigma_star
from .grid import GridField
from .limit_pde import CflError


class DomainTooSmallError(RuntimeError):
    """Mass reached the grid boundary during an evolution."""


def beta_drift(chi: float, z):
    """Lineage drift at moving-frame position z (z = 0 uses the right branch)."""
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    z = np.asarray(z, dtype=float)
    if chi > 1:
        out = np.where(z < 0, 1.0 / chi, 1.0 / chi - chi)
    else:
        right = 2.0 * (1 - chi) / ((1 - chi) * np.maximum(z, 0.0) + 1.0)
        out = np.where(z < 0, 2.0 - chi, right)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DriftProfile:
    """chi together with the evaluable drift; carries the one-sided limits
    needed at the z = 0 discontinuity."""

    chi: float

    def __post_init__(self):
        if not self.chi > 0:
            raise ValueError(f"chi must be positive, got {self.chi}")

    def beta(self, z):
        return beta_drift(self.chi, z)

    __call__ = beta

    def beta_sided(self, z: float, side: str) -> float:
        """One-sided limit at z; differs from beta(z) only at z = 0."""
        if z == 0.0:
            return float(beta_drift(self.chi, -1e-300 if side == "left" else 0.0))
        return float(beta_drift(self.chi, z))

    @property
    def sigma(self) -> float:
        return sigma_star(self.chi)

    def max_abs_beta(self) -> float:
        left = abs(self.beta_sided(0.0, "left"))
        right = abs(self.beta_sided(0.0, "right"))
        return max(left, right)


def v_infinity(chi: float, z):
    """Stationary lineage density (a probability density only for chi > 1).

    chi > 1: (chi^2-1)/chi^3 * exp(z/chi) for z <= 0 and
             * exp(-(chi - 1/chi) z) for z > 0, total mass 1.
    chi <= 1: exp((2-chi) z) for z < 0 and ((1-chi) z + 1)^2 for z >= 0,
             not integrable (exposed unnormalised).
    """
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    z = np.asarray(z, dtype=float)
    if chi > 1:
        amp = (chi * chi - 1.0) / chi**3
        out = amp * np.exp(np.where(z <= 0, z / chi, -(chi - 1.0 / chi) * z))
    else:
        out = np.where(z < 0, np.exp((2.0 - chi) * np.minimum(z, 0.0)),
                       ((1.0 - chi) * np.maximum(z, 0.0) + 1.0) ** 2)
    return out if out.ndim else float(out)


def v_infinity_is_density(chi: float) -> bool:
    """Whether v_infinity is normalisable (pushed regime only)."""
    if not chi > 0:
        raise ValueError(f"chi must be positive, got {chi}")
    return chi > 1


def _interface_rates(drift: DriftProfile, z_iface: np.ndarray):
    """Upwind split of the interface drift: (beta+, beta-).

    At an interface sitting exactly on the z = 0 kink each direction
    uses its own side's limit, preserving the monotone upwind structure.
    """
    beta = beta_drift(drift.chi, z_iface)
    beta_plus = np.maximum(beta, 0.0)
    beta_minus = np.minimum(beta, 0.0)
    on_kink = z_iface == 0.0
    if on_kink.any():
        left = drift.beta_sided(0.0, "left")
        right = drift.beta_sided(0.0, "right")
        beta_plus[on_kink] = max(left, 0.0)
        beta_minus[on_kink] = min(right, 0.0)
    return beta_plus, beta_minus


def _check_cfl(drift: DriftProfile, dz: float, dt: float, safety: float = 1.0):
    lim = min(dz * dz / 2.0, dz / max(drift.max_abs_beta(), 1e-300)) * safety
    if dt > lim * (1 + 1e-12):
        raise CflError(f"dt={dt} exceeds stability limit {lim}")


def _flux(v: np.ndarray, dz: float, beta_plus: np.ndarray, beta_minus: np.ndarray) -> np.ndarray:
    """Internal interface fluxes: upwind advection minus the two-point gradient."""
    return beta_plus * v[:-1] + beta_minus * v[1:] - (v[1:] - v[:-1]) / dz


def fp_step(v: GridField, drift: DriftProfile, dt: float) -> GridField:
    """One conservative finite-volume step; boundary fluxes are zero."""
    _check_cfl(drift, v.dx, dt)
    z_iface = v.x0 + v.dx * (np.arange(v.n - 1) + 0.5)
    bp, bm = _interface_rates(drift, z_iface)
    flux = _flux(v.values, v.dx, bp, bm)
    out = v.values.copy()
    out[:-1] -= dt / v.dx * flux
    out[1:] += dt / v.dx * flux
    return GridField(v.x0, v.dx, out)


@dataclass
class FpRecord:
    s: float
    field: GridField
    mean: float
    mode: float  # argmax position


def _summary(field: GridField) -> tuple:
    z = field.x()
    w = field.values
    total = w.sum()
    mean = float((z * w).sum() / total) if total > 0 else float("nan")
    mode = float(z[int(np.argmax(w))])
    return mean, mode


def fp_evolve(
    v0: GridField,
    drift: DriftProfile,
    s_end: float,
    record_times: Sequence[float],
    dt: float | None = None,
    safety: float = 0.9,
    boundary_tol: float = 1e-6,
) -> List[FpRecord]:
    """Evolve a normalised density, recording profiles and summary stats.

    v0 must have dx-weighted mass 1 (to 1e-6). The outermost cells are
    monitored: if their mass exceeds boundary_tol the domain is too small
    for the requested horizon and DomainTooSmallError is raised.
    """
    mass0 = v0.mass()
    if abs(mass0 - 1.0) > 1e-6:
        raise ValueError(f"v0 must have mass 1, got {mass0}")
    if (v0.values < 0).any():
        raise ValueError("v0 must be nonnegative")
    if dt is None:
        dt = safety * min(v0.dx ** 2 / 2.0, v0.dx / max(drift.max_abs_beta(), 1e-300))
    _check_cfl(drift, v0.dx, dt, safety=1.0)
    record_times = sorted(set(float(s) for s in record_times) | {0.0, float(s_end)})
    n_steps = int(round(s_end / dt)) if s_end > 0 else 0
    record_steps = {min(int(round(s / dt)), n_steps) for s in record_times}
    z_iface = v0.x0 + v0.dx * (np.arange(v0.n - 1) + 0.5)
    bp, bm = _interface_rates(drift, z_iface)
    v = v0.values.copy()
    dz = v0.dx
    records: List[FpRecord] = []

    def take(step: int):
        field = GridField(v0.x0, dz, v.copy())
        mean, mode = _summary(field)
        records.append(FpRecord(step * dt, field, mean, mode))

    if 0 in record_steps:
        take(0)
    for step in range(1, n_steps + 1):
        flux = _flux(v, dz, bp, bm)
        v[:-1] -= dt / dz * flux
        v[1:] += dt / dz * flux
        if step % 1000 == 0 or step == n_steps:
            edge_mass = dz * (v[0] + v[-1])
            if edge_mass > boundary_tol:
                raise DomainTooSmallError(
                    f"boundary mass {edge_mass:.2e} at s={step * dt:.3f}")
            if not np.all(np.isfinite(v)):
                raise FloatingPointError(f"non-finite density at s={step * dt}")
        if step in record_steps:
            take(step)
    return records
