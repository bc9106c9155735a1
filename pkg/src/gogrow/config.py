"""Run configuration for the particle engine."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

InitSpec = Union[str, Sequence[float]]

#: Marker for the standard initial condition: 2K particles, K of them
#: exponential(rate chi) on [0, inf) and K uniform on [-1/chi, 0].
INIT_STANDARD = "id"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(base_seed: int, *indices: int) -> int:
    """Mix replicate/sweep indices into a base seed (splitmix64 chain).

    Every (experiment, K, chi, replicate) tuple gets its own stream, so
    replicate outputs do not depend on scheduling or worker count.
    """
    h = base_seed & _MASK64
    for ix in indices:
        h = _splitmix64(h ^ ((ix + 1) & _MASK64))
    return h


@dataclass(frozen=True)
class SimConfig:
    """All parameters of one seeded run.

    The same config always reproduces the same run bit for bit: the RNG
    is a single seeded stream consumed in a fixed order (initial draws,
    then per step: one normal per particle in creation order, the birth
    count, then one uniform index per birth).
    """

    chi: float
    K: int
    dt: float = 0.01
    t_end: float = 10.0
    seed: int = 0
    snapshot_dt: float = 1.0
    init: InitSpec = INIT_STANDARD
    noise_enabled: bool = True
    #: keep per-particle snapshots (disable for long speed runs to save memory;
    #: the xi / N series is always recorded)
    record_particles: bool = True

    def __post_init__(self):
        if not self.chi > 0:
            raise ValueError(f"chi must be positive, got {self.chi}")
        if not (isinstance(self.K, int) and self.K >= 1):
            raise ValueError(f"K must be an integer >= 1, got {self.K}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.dt > self.snapshot_dt:
            raise ValueError("dt must not exceed snapshot_dt")
        if self.t_end > 0 and self.snapshot_dt > self.t_end:
            raise ValueError("snapshot_dt must not exceed t_end")
        if isinstance(self.init, str):
            if self.init != INIT_STANDARD:
                raise ValueError(f"unknown init descriptor {self.init!r}")
        else:
            positions = tuple(float(x) for x in self.init)
            if len(positions) == 0:
                raise ValueError("explicit initial position list is empty")
            object.__setattr__(self, "init", positions)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def snapshot_every(self) -> int:
        # snapshot cadence rounds to the nearest whole step
        return max(1, int(round(self.snapshot_dt / self.dt)))
