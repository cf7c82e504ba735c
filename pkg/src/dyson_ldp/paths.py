"""Time grids and scalar paths sampled on them.

Every trajectory in the package lives on a strictly increasing grid of
times in [0, T].  A ScalarPath is a real function sampled on such a grid,
optionally carrying analytic derivative samples; when they are present
they take precedence over finite differences everywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError


def uniform_grid(steps: int, t_max: float = 1.0, t_min: float = 0.0) -> np.ndarray:
    """Uniform grid with `steps` cells (steps + 1 nodes) on [t_min, t_max]."""
    if steps < 1:
        raise InvalidParameterError(f"steps must be >= 1, got {steps}")
    if not t_max > t_min:
        raise InvalidParameterError("t_max must exceed t_min")
    return np.linspace(float(t_min), float(t_max), steps + 1)


def validate_grid(t) -> np.ndarray:
    """Check a time grid: 1-d, t[0] >= 0, strictly increasing."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InvalidParameterError("time grid must be 1-d with at least 2 nodes")
    if t[0] < 0:
        raise InvalidParameterError("time grid must start at a nonnegative time")
    if not np.all(np.diff(t) > 0):
        raise InvalidParameterError("time grid must be strictly increasing")
    return t


@dataclass(frozen=True)
class ScalarPath:
    """A real-valued function sampled on a time grid.

    `derivative`, when given, holds analytic samples of the time derivative
    on the same grid and is preferred over finite differences.
    """

    t: np.ndarray
    values: np.ndarray
    derivative: np.ndarray | None = field(default=None)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        if t.shape != v.shape:
            raise InvalidParameterError("grid and values must have the same shape")
        if t.size >= 2:
            if not np.all(np.diff(t) > 0):
                raise InvalidParameterError("path grid must be strictly increasing")
        if self.derivative is not None:
            d = np.asarray(self.derivative, dtype=float)
            if d.shape != v.shape:
                raise InvalidParameterError("derivative samples must match the grid")
            object.__setattr__(self, "derivative", d)

    def __len__(self):
        return self.t.size

    def deriv(self) -> np.ndarray:
        """Derivative samples: analytic if attached, else second-order
        centered differences with one-sided stencils at the endpoints."""
        if self.derivative is not None:
            return self.derivative
        return np.gradient(self.values, self.t, edge_order=1)

    def at(self, s) -> np.ndarray:
        """Linear interpolation of the path at times `s`."""
        return np.interp(s, self.t, self.values)

    @classmethod
    def from_function(cls, f, t, df=None) -> "ScalarPath":
        t = validate_grid(t)
        d = None if df is None else np.asarray(df(t), dtype=float)
        return cls(t, np.asarray(f(t), dtype=float), d)

    def write_csv(self, path):
        """Two-column CSV `t,value` with round-trip exact floats."""
        arr = np.column_stack([self.t, self.values])
        np.savetxt(path, arr, delimiter=",", header="t,value", comments="", fmt="%.17g")

    @classmethod
    def read_csv(cls, path) -> "ScalarPath":
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if arr.shape[1] < 2:
            raise InvalidParameterError(f"{path}: expected two columns t,value")
        return cls(arr[:, 0], arr[:, 1])
