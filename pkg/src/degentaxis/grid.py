"""Structured 2D rectangular grid with cell-centered fields and zero-flux calculus.

Cells are indexed ``values[j, i]`` with ``i`` counting along x and ``j`` along y
(row-major, x fastest).  Cell centers sit at ``((i + 1/2) hx, (j + 1/2) hy)``.
Fluxes live on faces: vertical faces carry x-fluxes, horizontal faces carry
y-fluxes, and every boundary face is pinned to zero, which is how the
homogeneous Neumann (no-flux) condition enters every divergence-form operator.
Pointwise stencils (Laplacian, Hessian) close the boundary by ghost reflection,
which agrees with the flux form for the Laplacian.

All reductions are plain serial sums in a fixed order, so results are
reproducible bit-for-bit for a fixed grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    GridMismatch,
    NegativeFieldForFractionalPower,
    NonPositiveField,
)


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid: nx-by-ny cells covering (0, lx) x (0, ly)."""

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"need at least 2 cells per direction, got {self.nx}x{self.ny}")
        if not (self.lx > 0.0 and self.ly > 0.0):
            raise ValueError(f"domain extents must be positive, got lx={self.lx}, ly={self.ly}")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_volume(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid arrays (X, Y) of cell-center coordinates, shape (ny, nx)."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y)


@dataclass
class ScalarField:
    """Cell-centered scalar function on a :class:`GridSpec`."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains NaN or Inf")

    @classmethod
    def full(cls, grid: GridSpec, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        """Sample ``fn(X, Y)`` at cell centers."""
        X, Y = grid.cell_centers()
        return cls(grid, np.asarray(fn(X, Y), dtype=np.float64) * np.ones(grid.shape))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


@dataclass
class FaceField:
    """Face-normal flux components; boundary faces are identically zero.

    ``x`` has shape (ny, nx+1): entry [j, i] is the flux through the vertical
    face between cells (j, i-1) and (j, i).  ``y`` has shape (ny+1, nx).
    """

    grid: GridSpec
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        ny, nx = self.grid.shape
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.shape != (ny, nx + 1) or self.y.shape != (ny + 1, nx):
            raise ValueError("face array shapes do not match grid")
        if (np.any(self.x[:, 0] != 0.0) or np.any(self.x[:, -1] != 0.0)
                or np.any(self.y[0, :] != 0.0) or np.any(self.y[-1, :] != 0.0)):
            raise ValueError("boundary faces must be exactly zero")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FaceField":
        ny, nx = grid.shape
        return cls(grid, np.zeros((ny, nx + 1)), np.zeros((ny + 1, nx)))


def require_same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")


# -- reductions --------------------------------------------------------------

def integrate(f: ScalarField) -> float:
    """Midpoint-rule integral over the domain: hx*hy*sum of cell values."""
    return f.grid.cell_volume * float(f.values.sum())


def linf(f: ScalarField) -> float:
    return float(np.abs(f.values).max())


def lp_norm(f: ScalarField, p: float) -> float:
    """(integral of |f|^p)^(1/p); non-integer p requires a nonnegative field."""
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if p != int(p) and f.values.min() < 0.0:
        raise NegativeFieldForFractionalPower(
            f"fractional power p={p} on a field with min {f.values.min()}")
    return float(integrate(ScalarField(f.grid, np.abs(f.values) ** p)) ** (1.0 / p))


# -- discrete calculus -------------------------------------------------------

def grad_faces(f: ScalarField) -> FaceField:
    """Two-point normal gradient on interior faces; boundary faces stay zero."""
    g = f.grid
    out = FaceField.zeros(g)
    out.x[:, 1:-1] = (f.values[:, 1:] - f.values[:, :-1]) / g.hx
    out.y[1:-1, :] = (f.values[1:, :] - f.values[:-1, :]) / g.hy
    return out


def div_faces(F: FaceField) -> ScalarField:
    """Per-cell net outflux divided by cell volume (telescopes to zero mass)."""
    g = F.grid
    d = (F.x[:, 1:] - F.x[:, :-1]) / g.hx + (F.y[1:, :] - F.y[:-1, :]) / g.hy
    return ScalarField(g, d)


def laplacian(f: ScalarField) -> ScalarField:
    """5-point Laplacian with zero-flux closure: div_faces(grad_faces(f))."""
    return div_faces(grad_faces(f))


def face_means(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Arithmetic means of adjacent cells on interior faces.

    Returns (mx, my) with shapes (ny, nx-1) and (ny-1, nx); boundary faces are
    omitted because every face-based quadrature weights them by a zero
    gradient or flux.
    """
    v = f.values
    return 0.5 * (v[:, 1:] + v[:, :-1]), 0.5 * (v[1:, :] + v[:-1, :])


def interior_grads(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Normal gradients on interior faces only, shapes (ny, nx-1)/(ny-1, nx)."""
    g = f.grid
    v = f.values
    return (v[:, 1:] - v[:, :-1]) / g.hx, (v[1:, :] - v[:-1, :]) / g.hy


def grad_sq_cells(f: ScalarField) -> ScalarField:
    """Cell-centered |grad f|^2: per-direction average of squared face gradients.

    Boundary faces contribute zero, matching the no-flux closure.
    """
    g = f.grid
    gx, gy = interior_grads(f)
    gx2 = gx * gx
    gy2 = gy * gy
    out = np.zeros(g.shape)
    out[:, :-1] += 0.5 * gx2
    out[:, 1:] += 0.5 * gx2
    out[:-1, :] += 0.5 * gy2
    out[1:, :] += 0.5 * gy2
    return ScalarField(g, out)


def hessian_sq(f: ScalarField, floor: float = 0.0, log: bool = False) -> ScalarField:
    """Squared Frobenius norm of the Hessian, |D^2 f|^2 = fxx^2 + 2 fxy^2 + fyy^2.

    Central differences with reflected ghost cells (corners doubly reflected).
    With ``log=True`` the Hessian of ln(f) is formed instead, which requires
    ``min f >= floor > 0``.
    """
    g = f.grid
    if log:
        if floor <= 0.0:
            raise ValueError("log mode needs a positive floor")
        if f.values.min() < floor:
            raise NonPositiveField(
                f"min {f.values.min()} below floor {floor} in log-Hessian mode")
        vals = np.log(f.values)
    else:
        vals = f.values
    p = np.pad(vals, 1, mode="edge")
    c = p[1:-1, 1:-1]
    fxx = (p[1:-1, 2:] - 2.0 * c + p[1:-1, :-2]) / g.hx ** 2
    fyy = (p[2:, 1:-1] - 2.0 * c + p[:-2, 1:-1]) / g.hy ** 2
    fxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4.0 * g.hx * g.hy)
    return ScalarField(g, fxx * fxx + 2.0 * fxy * fxy + fyy * fyy)
