"""Uniform 1-D spatial grid carrying field values (u, F or v)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class GridField:
    """Samples of a field on the uniform grid x0 + i*dx, i = 0..n-1.

    x0 is the coordinate of the first sample. Finite-volume consumers
    treat the samples as cell averages of cells of width dx centred on
    the sample points.
    """

    x0: float
    dx: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.dx <= 0:
            raise ValueError(f"dx must be positive, got {self.dx}")
        if self.values.ndim != 1 or self.values.size < 3:
            raise ValueError("values must be a 1-D array of length >= 3")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def n(self) -> int:
        return self.values.size

    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.values.size)

    @property
    def x_right(self) -> float:
        return self.x0 + self.dx * (self.values.size - 1)

    def mass(self) -> float:
        """dx-weighted total (rectangle rule)."""
        return float(self.dx * self.values.sum())

    def copy(self) -> "GridField":
        return GridField(self.x0, self.dx, self.values.copy())

    @classmethod
    def from_function(cls, fn, x0: float, dx: float, n: int) -> "GridField":
        x = x0 + dx * np.arange(n)
        return cls(x0, dx, np.asarray(fn(x), dtype=float))
