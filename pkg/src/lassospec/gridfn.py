"""Real-valued functions on [0, l] stored on a uniform grid.

A GridFunction holds node values at x_i = i*l/(M-1) and interpolates
linearly between nodes.  It is the common representation for edge
potentials and for reconstructed kernels.
"""

from __future__ import annotations

import numpy as np

__all__ = ["GridFunction", "l2_error_mod_constant"]


class GridFunction:
    """Piecewise-linear function on [0, length] with M >= 2 uniform nodes.

    The node array is frozen at construction; evaluation outside the
    domain raises ValueError.
    """

    __slots__ = ("length", "values")

    def __init__(self, length: float, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("need a 1-d array of at least 2 node values")
        if not np.all(np.isfinite(values)):
            raise ValueError("node values must be finite")
        length = float(length)
        if not (length > 0.0 and np.isfinite(length)):
            raise ValueError("length must be positive and finite")
        object.__setattr__(self, "length", length)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @classmethod
    def from_callable(cls, f, length: float, n_nodes: int = 201) -> "GridFunction":
        x = np.linspace(0.0, length, n_nodes)
        return cls(length, np.asarray([f(xi) for xi in x], dtype=float))

    @classmethod
    def zero(cls, length: float, n_nodes: int = 2) -> "GridFunction":
        return cls(length, np.zeros(n_nodes))

    @property
    def n_nodes(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.values.size)

    @property
    def spacing(self) -> float:
        return self.length / (self.values.size - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-12) or np.any(x > self.length + 1e-12):
            raise ValueError(f"evaluation outside [0, {self.length}]")
        t = np.clip(x / self.spacing, 0.0, self.values.size - 1)
        i = np.minimum(t.astype(int), self.values.size - 2)
        frac = t - i
        out = self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
        return float(out) if np.isscalar(x) or x.ndim == 0 else out

    def cell(self, i: int):
        """Value at node i and slope on cell [x_i, x_{i+1}]."""
        h = self.spacing
        return self.values[i], (self.values[i + 1] - self.values[i]) / h

    def __repr__(self):
        return f"GridFunction(length={self.length}, n_nodes={self.n_nodes})"


def l2_error_mod_constant(g: GridFunction, f, n_quad: int = 1001) -> float:
    """L2 distance between g and callable f on [0, g.length], minimized
    over an additive constant (the gauge freedom of potentials)."""
    x = np.linspace(0.0, g.length, n_quad)
    d = g(x) - np.asarray([f(xi) for xi in x], dtype=float)
    d = d - np.trapezoid(d, x) / g.length
    return float(np.sqrt(np.trapezoid(d * d, x)))
