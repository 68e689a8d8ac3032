"""A function sampled on an ascending time grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError

__all__ = ["GridFunction", "as_grid"]


def as_grid(grid) -> np.ndarray:
    """Validate and return an ascending float grid."""
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise GridError("grid must be a nonempty 1-d array")
    if not np.all(np.isfinite(g)):
        raise GridError("grid values must be finite")
    if np.any(np.diff(g) <= 0.0):
        raise GridError("grid must be strictly increasing")
    return g


@dataclass
class GridFunction:
    """Values of some function at the nodes of an ascending grid.

    Counting functions additionally promise nondecreasing, nonnegative
    values; pass monotone=True to enforce that at construction.
    """

    grid: np.ndarray
    values: np.ndarray
    monotone: bool = False

    def __post_init__(self):
        self.grid = as_grid(self.grid)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridError("values and grid must have matching shapes")
        if self.monotone:
            if np.any(self.values < 0.0) or np.any(np.diff(self.values) < 0.0):
                raise GridError("expected nonnegative, nondecreasing values")

    def interp(self, t) -> np.ndarray:
        """Linear interpolation onto arbitrary times within the grid span."""
        return np.interp(np.asarray(t, dtype=float), self.grid, self.values)
