"""Fourier basis on [0, 1] and conversion between grid samples and coefficients."""

from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse, NonFiniteInput, PointOutOfDomain, ValidationError

DEFAULT_DIM = 30


@dataclass(frozen=True)
class BasisSpec:
    """First ``dim`` functions of the Fourier system on [0, 1].

    Ordering is ``1, sqrt2 sin(2 pi t), sqrt2 cos(2 pi t), sqrt2 sin(4 pi t), ...``.
    """

    dim: int = DEFAULT_DIM
    kind: str = "fourier"

    def __post_init__(self):
        if self.kind != "fourier":
            raise ValidationError(f"unsupported basis kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError(f"basis dimension must be a positive integer, got {self.dim}")

    def design(self, points):
        """Matrix of basis functions evaluated at ``points`` (m x dim)."""
        t = np.asarray(points, dtype=float)
        out = np.empty((t.size, self.dim))
        out[:, 0] = 1.0
        for i in range(1, self.dim):
            m = (i + 1) // 2
            if i % 2:
                out[:, i] = np.sqrt(2.0) * np.sin(2 * np.pi * m * t)
            else:
                out[:, i] = np.sqrt(2.0) * np.cos(2 * np.pi * m * t)
        return out


@dataclass(frozen=True)
class CurveGrid:
    """Curves sampled on a common grid: ``values[j, :]`` is curve j at ``points``."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if points.ndim != 1 or points.size < 2:
            raise ValidationError("a curve grid needs at least two points")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(values))):
            raise NonFiniteInput("grid points and curve values must be finite")
        if points.min() < 0.0 or points.max() > 1.0:
            raise PointOutOfDomain("grid points must lie in [0, 1]")
        if np.any(np.diff(points) <= 0):
            raise ValidationError("grid points must be strictly increasing")
        if values.shape[1] != points.size:
            raise ValidationError(
                f"values have {values.shape[1]} columns but the grid has {points.size} points"
            )
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)


def project_curves(grid: CurveGrid, spec: BasisSpec) -> np.ndarray:
    """Least-squares basis coefficients of every curve in ``grid``.

    Returns an ``n x spec.dim`` table. Plain least squares, no roughness
    penalty; the grid need not be uniform.
    """
    if grid.points.size < spec.dim:
        raise GridTooCoarse(
            f"{grid.points.size} grid points cannot determine {spec.dim} coefficients"
        )
    A = spec.design(grid.points)
    coef, *_ = np.linalg.lstsq(A, grid.values.T, rcond=None)
    return coef.T


def evaluate(coeffs, points, spec: BasisSpec | None = None) -> np.ndarray:
    """Evaluate ``sum_i coeffs[..., i] f_i(t)`` at each point.

    ``coeffs`` may be a single vector or a table of row vectors; the basis
    dimension is taken from its last axis unless ``spec`` is given.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if not np.all(np.isfinite(coeffs)):
        raise NonFiniteInput("coefficients must be finite")
    t = np.atleast_1d(np.asarray(points, dtype=float))
    if np.any((t < 0.0) | (t > 1.0)) or not np.all(np.isfinite(t)):
        raise PointOutOfDomain("evaluation points must lie in [0, 1]")
    if spec is None:
        spec = BasisSpec(coeffs.shape[-1])
    return coeffs @ spec.design(t).T


def kernel_on_grid(op, grid_size: int, spec: BasisSpec | None = None):
    """Kernel ``K(s, t) = sum_{i,i'} op[i, i'] f_i(s) f_i'(t)`` on an equispaced grid.

    Returns ``(points, K)`` with ``K[a, b] = K(points[a], points[b])``.
    """
    op = np.asarray(op, dtype=float)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValidationError("kernel table must be square")
    if int(grid_size) != grid_size or grid_size < 2:
        raise ValidationError("grid_size must be an integer of at least 2")
    spec = spec or BasisSpec(op.shape[0])
    t = np.linspace(0.0, 1.0, int(grid_size))
    F = spec.design(t)
    return t, F @ op @ F.T
