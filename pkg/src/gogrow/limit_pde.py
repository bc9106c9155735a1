"""Deterministic limit equation for the density u and its tail CDF F.

The density solves

    du/dt = d2u/dx2 - chi * d/dx( u * a(F) ) + u * b(F),

where F(x) is the tail mass integral of u from x to +inf, a(z) = 1 for
z > 1 (the Go region, left of the threshold) and b = 1 - a (the Grow
region). The threshold xbar(t) is the point where F = 1, the continuum
analogue of the K-th particle.

Two independent solvers are provided as cross-oracles:

* :func:`step_u`: explicit finite differences, central diffusion and
  upwind advection (drift is positive, so a backward difference).
* :func:`duhamel_F`: Picard iteration of the mild form
  F_t = heat(t) F0 + int_0^t [ -chi d/dx heat(t-s) A(F_s)
                               + heat(t-s) B(F_s) ] ds,
  with A(z) = max(z - 1, 0), B(z) = min(z, 1), the heat operator applied
  by discrete Gaussian convolution.

Boundary conditions are a numerical choice, not part of the model: left
zero-flux (mirror) or Dirichlet, right Dirichlet-zero. The left mirror
sustains the wave plateau as if it extended to -inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .grid import GridField


class CflError(ValueError):
    """Time step violates the stability constraint."""


class NumericalBlowupError(RuntimeError):
    """NaN or negative density produced by a step."""


class ConvergenceError(RuntimeError):
    """Picard iteration failed to contract."""


class InsufficientDataError(ValueError):
    """Too few samples for a fit."""


@dataclass(frozen=True)
class PdeConfig:
    chi: float
    dx: float
    dt: float
    x_min: float
    x_max: float
    left_bc: str = "neumann"  # zero-flux mirror; or "dirichlet"
    window_shift: bool = False
    safety: float = 0.9

    def __post_init__(self):
        if not self.chi > 0:
            raise ValueError(f"chi must be positive, got {self.chi}")
        if not 0 < self.safety <= 1:
            raise ValueError(f"safety must be in (0, 1], got {self.safety}")
        if self.left_bc not in ("neumann", "dirichlet"):
            raise ValueError(f"unknown left boundary {self.left_bc!r}")
        if not self.x_min < self.x_max:
            raise ValueError("need x_min < x_max")
        if self.dt > self.safety * self.dx * self.dx / 2 + 1e-15:
            raise CflError(f"dt={self.dt} exceeds diffusive limit {self.safety * self.dx**2 / 2}")
        if self.dt > self.safety * self.dx / self.chi + 1e-15:
            raise CflError(f"dt={self.dt} exceeds advective limit {self.safety * self.dx / self.chi}")

    @classmethod
    def auto_dt(cls, chi: float, dx: float, x_min: float, x_max: float,
                safety: float = 0.9, **kw) -> "PdeConfig":
        dt = safety * min(dx * dx / 2, dx / chi)
        return cls(chi=chi, dx=dx, dt=dt, x_min=x_min, x_max=x_max, safety=safety, **kw)

    def n_cells(self) -> int:
        return int(round((self.x_max - self.x_min) / self.dx)) + 1

    def grid(self, fn) -> GridField:
        return GridField.from_function(fn, self.x_min, self.dx, self.n_cells())


def tail_integral(u: GridField) -> GridField:
    """F_i = dx * sum_{j >= i} u_j, the discrete tail mass.

    Rectangle rule; F is nonincreasing with F at the right edge equal to
    the last cell's own mass.
    """
    v = u.values
    if (v < 0).any():
        raise ValueError("tail_integral requires u >= 0")
    F = u.dx * np.cumsum(v[::-1])[::-1]
    return GridField(u.x0, u.dx, F)


def threshold(F: GridField) -> Optional[float]:
    """The crossing xbar with F(xbar) = 1, by linear interpolation.

    Requires F nonincreasing. Returns None when the crossing does not
    exist inside the grid (total mass below 1, or F >= 1 everywhere).
    """
    v = F.values
    if (np.diff(v) > 1e-12 * max(1.0, float(np.abs(v).max()))).any():
        raise ValueError("threshold requires a nonincreasing F")
    if v[0] < 1.0:
        return None
    below = np.flatnonzero(v < 1.0)
    if below.size == 0:
        return None
    j = int(below[0]) - 1  # v[j] >= 1 > v[j+1]
    x_j = F.x0 + F.dx * j
    return float(x_j + F.dx * (v[j] - 1.0) / (v[j] - v[j + 1]))


def _step_values(u: np.ndarray, F: np.ndarray, cfg: PdeConfig) -> np.ndarray:
    dx, dt, chi = cfg.dx, cfg.dt, cfg.chi
    n = u.size
    # F_j = dx * sum_{k>=j} u_k is exactly the tail mass right of cell j's
    # left edge, so the Go/Grow indicator is read where F natively lives:
    # the advective flux through interface j-1/2 is on iff F_j > 1, with
    # the upwind (left-cell) density; the growth term switches on where
    # the cell-centre tail F_i - dx u_i / 2 drops to 1 or below. Reading
    # the indicator at the cell index instead shifts the threshold by half
    # a cell and produces an O(dx) front-speed excess.
    q = np.zeros(n + 1)  # q[j]: advected density through interface j-1/2
    q[1:n] = np.where(F[1:] > 1.0, u[:-1], 0.0)
    if cfg.left_bc == "neumann":
        u_left = u[0]
        q[0] = q[1]  # mirror: the plateau extends beyond the window
    else:
        u_left = 0.0
    lap = np.empty_like(u)
    lap[1:-1] = u[2:] - 2 * u[1:-1] + u[:-2]
    lap[0] = u[1] - 2 * u[0] + u_left
    lap[-1] = -2 * u[-1] + u[-2]
    lap /= dx * dx
    adv = (q[1:] - q[:-1]) / dx
    growth = np.where(F - 0.5 * dx * u <= 1.0, u, 0.0)  # b(F) * u
    return u + dt * (lap - chi * adv + growth)


def step_u(u: GridField, cfg: PdeConfig) -> GridField:
    """One explicit step of the density equation."""
    if abs(u.dx - cfg.dx) > 1e-12 * cfg.dx:
        raise ValueError("grid spacing does not match the config")
    if (u.values < 0).any():
        raise ValueError("step_u requires u >= 0")
    F = tail_integral(u)
    out = _step_values(u.values, F.values, cfg)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError("non-finite values after step")
    if (out < 0).any():
        raise NumericalBlowupError("negative density after step (CFL too loose?)")
    return GridField(u.x0, u.dx, out)


@dataclass
class FrontRun:
    times: np.ndarray
    xbar: np.ndarray
    mass: np.ndarray
    u_final: GridField


def evolve_front(u0: GridField, cfg: PdeConfig, t_end: float,
                 record_dt: float = 0.5) -> FrontRun:
    """Drive step_u to t_end, tracking the threshold.

    With cfg.window_shift, the domain window slides right whenever the
    threshold comes within 20% of the right edge: left cells are
    dropped, zero cells appended on the right, and the left zero-flux
    boundary keeps feeding the trailing plateau.
    """
    u = u0.values.copy()
    x0 = u0.x0
    n = u.size
    width = cfg.dx * (n - 1)
    n_steps = int(round(t_end / cfg.dt))
    every = max(1, int(round(record_dt / cfg.dt)))
    times: List[float] = []
    xbars: List[float] = []
    masses: List[float] = []

    def record(t: float):
        F = cfg.dx * np.cumsum(u[::-1])[::-1]
        xb = threshold(GridField(x0, cfg.dx, F))
        times.append(t)
        xbars.append(np.nan if xb is None else xb)
        masses.append(float(cfg.dx * u.sum()))

    record(0.0)
    for step in range(1, n_steps + 1):
        F = cfg.dx * np.cumsum(u[::-1])[::-1]
        u = _step_values(u, F, cfg)
        if step % every == 0 or step == n_steps:
            t = step * cfg.dt
            if not np.all(np.isfinite(u)):
                raise NumericalBlowupError(f"non-finite values at t={t}")
            record(t)
            if cfg.window_shift and np.isfinite(xbars[-1]):
                margin = x0 + width - xbars[-1]
                if margin < 0.2 * width:
                    shift = int(round((0.5 * width - margin) / cfg.dx))
                    shift = min(shift, n - 1)
                    if shift > 0:
                        u = np.concatenate([u[shift:], np.zeros(shift)])
                        x0 += shift * cfg.dx
    return FrontRun(np.asarray(times), np.asarray(xbars), np.asarray(masses),
                    GridField(x0, cfg.dx, u))


def _heat_kernel(tau: float, dx: float) -> np.ndarray:
    """Discrete kernel of exp(tau * d2/dx2): N(0, 2 tau) sampled on the grid,
    truncated at six standard deviations and normalised to sum 1."""
    if tau <= 0:
        return np.array([1.0])
    sigma = math.sqrt(2.0 * tau)
    half = max(1, int(math.ceil(6.0 * sigma / dx)))
    xs = dx * np.arange(-half, half + 1)
    k = np.exp(-xs * xs / (4.0 * tau))
    return k / k.sum()


def _convolve_extended(values: np.ndarray, kernel: np.ndarray,
                       left: float, right: float) -> np.ndarray:
    """Convolve with constant extension by `left` / `right` beyond the grid."""
    half = (kernel.size - 1) // 2
    if half == 0:
        return values.copy()
    ext = np.concatenate([np.full(half, left), values, np.full(half, right)])
    return np.convolve(ext, kernel, mode="valid")


def duhamel_F(F0: GridField, chi: float, t: float, n_picard: int = 16,
              tol: float = 1e-9, max_iter: int = 60) -> GridField:
    """Mild-solution oracle for the tail equation at horizon t.

    Fixed-point iteration of the Duhamel form on n_picard stored time
    slices, midpoint rule in time. The horizon must be small enough for
    the iteration to contract (t <= 0.5 by default usage); growth of the
    successive-iterate distance raises ConvergenceError.

    F is extended by its left edge value on the left and by its right
    edge value on the right before each convolution.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return F0.copy()
    dx = F0.dx
    n = n_picard
    h = t / n
    slice_times = h * np.arange(n + 1)
    # kernels for the midpoint lags (k - j - 1/2) h and for the slice times
    mid_kernels = {m: _heat_kernel((m + 0.5) * h, dx) for m in range(n)}
    slice_kernels = [_heat_kernel(s, dx) for s in slice_times]

    def heat(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
        return _convolve_extended(values, kernel, values[0], values[-1])

    def ddx(values: np.ndarray) -> np.ndarray:
        out = np.empty_like(values)
        out[1:-1] = (values[2:] - values[:-2]) / (2 * dx)
        out[0] = (values[1] - values[0]) / dx
        out[-1] = (values[-1] - values[-2]) / dx
        return out

    base = [heat(F0.values, slice_kernels[k]) for k in range(n + 1)]
    path = [b.copy() for b in base]
    prev_dist = math.inf
    grew = 0
    for _ in range(max_iter):
        # A, B evaluated at interval midpoints from the current path
        A_mid = []
        B_mid = []
        for j in range(n):
            Fm = 0.5 * (path[j] + path[j + 1])
            A_mid.append(np.maximum(Fm - 1.0, 0.0))
            B_mid.append(np.minimum(Fm, 1.0))
        new_path = [path[0]]
        for k in range(1, n + 1):
            acc = base[k].copy()
            for j in range(k):
                kern = mid_kernels[k - 1 - j]
                acc += h * (-chi * ddx(heat(A_mid[j], kern)) + heat(B_mid[j], kern))
            new_path.append(acc)
        dist = max(float(np.max(np.abs(a - b))) for a, b in zip(path[1:], new_path[1:]))
        path = new_path
        if dist < tol:
            return GridField(F0.x0, dx, path[-1])
        if dist > prev_dist:
            grew += 1
            if grew >= 2:
                raise ConvergenceError(
                    f"Picard iteration diverging (distance {dist} after {prev_dist})")
        else:
            grew = 0
        prev_dist = dist
    raise ConvergenceError(f"no contraction to {tol} within {max_iter} sweeps")


def bramson_fit(times, xbars, t_min: float) -> Tuple[float, float, float]:
    """Least-squares fit of xbar(t) ~ sigma t - c ln t + b on t >= t_min."""
    times = np.asarray(times, dtype=float)
    xbars = np.asarray(xbars, dtype=float)
    keep = (times >= t_min) & np.isfinite(xbars) & (times > 0)
    if keep.sum() < 10:
        raise InsufficientDataError(f"only {int(keep.sum())} samples at t >= {t_min}")
    t = times[keep]
    y = xbars[keep]
    design = np.column_stack([t, -np.log(t), np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    sigma, c, b = (float(v) for v in coef)
    return sigma, c, b
