"""Grid-sampled functions on [0, 1] and the geometry every other module uses.

A :class:`Curve` holds samples of a real function on a shared uniform grid.
All L2 quantities use trapezoid quadrature, which is exact for the piecewise
linear interpolant of the samples. Path statistics (sup norm, time above a
level, longest excursion) are evaluated on the grid only; their error
vanishes as the grid is refined.

Covariates are ordered tuples of curves plus scalars. Their flattened
"weighted coordinates" (curve samples scaled by the square root of the
quadrature weights, then raw scalars) turn every inner product in the
package into a plain Euclidean dot product, so covariance operators can be
handed to a standard symmetric eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StructureError, UsageError


@dataclass(frozen=True)
class Grid:
    """Uniform grid 0 = t_0 < t_1 < ... < t_D = 1 with t_i = i/D."""

    resolution: int

    def __post_init__(self):
        if self.resolution < 2:
            raise UsageError(f"grid resolution must be >= 2, got {self.resolution}")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.resolution + 1)

    @property
    def size(self) -> int:
        """Number of sample points, resolution + 1."""
        return self.resolution + 1

    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights: 1/(2D) at the endpoints, 1/D inside."""
        d = self.resolution
        w = np.full(d + 1, 1.0 / d)
        w[0] = w[-1] = 0.5 / d
        return w

    def quad_weights_sqrt(self) -> np.ndarray:
        return np.sqrt(self.quad_weights())


@dataclass(frozen=True, eq=False)
class Curve:
    """Samples of a real function on a shared :class:`Grid`."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] != self.grid.size:
            raise StructureError(
                f"curve needs {self.grid.size} samples, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise StructureError("curve values must be finite")
        object.__setattr__(self, "values", vals)

    def __eq__(self, other):
        if not isinstance(other, Curve):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    __hash__ = None

    @staticmethod
    def constant(grid: Grid, value: float) -> "Curve":
        return Curve(grid, np.full(grid.size, float(value)))

    @staticmethod
    def from_function(grid: Grid, fn) -> "Curve":
        return Curve(grid, np.asarray([fn(t) for t in grid.points], dtype=float))

    def __add__(self, other: "Curve") -> "Curve":
        _check_same_grid(self, other)
        return Curve(self.grid, self.values + other.values)

    def __sub__(self, other: "Curve") -> "Curve":
        _check_same_grid(self, other)
        return Curve(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "Curve":
        return Curve(self.grid, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class Covariate:
    """Ordered tuple of curves and scalars, an element of the product covariate space."""

    curve_parts: tuple
    scalar_parts: tuple = ()

    def __post_init__(self):
        parts = tuple(self.curve_parts)
        scalars = tuple(float(s) for s in self.scalar_parts)
        grids = {p.grid.resolution for p in parts}
        if len(grids) > 1:
            raise StructureError("all curve parts of a covariate must share one grid")
        for s in scalars:
            if not np.isfinite(s):
                raise StructureError("scalar parts must be finite")
        object.__setattr__(self, "curve_parts", parts)
        object.__setattr__(self, "scalar_parts", scalars)

    @property
    def grid(self) -> Grid | None:
        return self.curve_parts[0].grid if self.curve_parts else None

    def structure(self) -> tuple:
        """(number of curve parts, grid resolution or None, number of scalars)."""
        d = self.grid.resolution if self.curve_parts else None
        return (len(self.curve_parts), d, len(self.scalar_parts))

    def coords(self) -> np.ndarray:
        """Flattened weighted coordinates; Euclidean dot = covariate inner product."""
        pieces = []
        if self.curve_parts:
            sw = self.grid.quad_weights_sqrt()
            pieces.extend(p.values * sw for p in self.curve_parts)
        if self.scalar_parts:
            pieces.append(np.asarray(self.scalar_parts, dtype=float))
        if not pieces:
            return np.zeros(0)
        return np.concatenate(pieces)


def _check_same_grid(a: Curve, b: Curve) -> None:
    if a.grid.resolution != b.grid.resolution:
        raise StructureError(
            f"grid mismatch: D={a.grid.resolution} vs D={b.grid.resolution}"
        )


def inner_product(a: Curve, b: Curve) -> float:
    """Trapezoid approximation of the L2 inner product of two curves."""
    _check_same_grid(a, b)
    return float(np.sum(a.grid.quad_weights() * a.values * b.values))


def l2_norm(a: Curve) -> float:
    return float(np.sqrt(max(inner_product(a, a), 0.0)))


def covariate_inner_product(a: Covariate, b: Covariate) -> float:
    """Direct-sum inner product: curve-part L2 inner products plus scalar dot."""
    if a.structure() != b.structure():
        raise StructureError(
            f"covariate structure mismatch: {a.structure()} vs {b.structure()}"
        )
    total = sum(inner_product(p, q) for p, q in zip(a.curve_parts, b.curve_parts))
    total += float(np.dot(a.scalar_parts, b.scalar_parts)) if a.scalar_parts else 0.0
    return float(total)


def covariate_norm(a: Covariate) -> float:
    return float(np.sqrt(max(covariate_inner_product(a, a), 0.0)))


def sup_norm(a: Curve) -> float:
    """Maximum of |a(t_i)| over the grid."""
    return float(np.max(np.abs(a.values)))


def exceedance_measure(a: Curve, alpha: float) -> float:
    """Fraction of grid points with a(t_i) > alpha, a grid proxy for
    the Lebesgue measure of the exceedance set."""
    return float(np.count_nonzero(a.values > alpha)) / a.grid.size


def longest_excursion(a: Curve, d: float) -> float:
    """Length in t-units of the longest unbroken run of samples with a(t_i) > d.

    A run of r >= 2 consecutive points spans (r - 1)/D; isolated points and
    empty exceedance both give 0.
    """
    run = _longest_run_lengths(a.values[np.newaxis, :] > d)[0]
    return max(run - 1, 0) / a.grid.resolution


def _longest_run_lengths(mask: np.ndarray) -> np.ndarray:
    """Row-wise longest run of True in a boolean matrix (vectorized reset-cumsum)."""
    mask = np.asarray(mask, dtype=bool)
    csum = np.cumsum(mask, axis=1)
    anchors = np.maximum.accumulate(np.where(mask, 0, csum), axis=1)
    return np.max(csum - anchors, axis=1, initial=0)
