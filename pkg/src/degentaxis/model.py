"""Right-hand sides of the regularized doubly degenerate nutrient taxis system.

The cell density u diffuses with mobility u*v and drifts up the nutrient
gradient with mobility chi*u^2*v, while the nutrient v diffuses with unit
coefficient and is consumed at rate u*v:

    u_t = div(u v grad u) - chi * div(u^2 v grad v) + ell * u * v
    v_t = lap v - u * v

with zero-flux boundary conditions on both combined fluxes.  The double
degeneracy (mobilities vanish with u or with v) is kept exactly by the face
averaging used here: the u*v mobility is the arithmetic mean of the adjacent
cell products, and u^2*v on a face is (mean u)^2 * (mean v).  Initial data are
lifted by the regularization parameter eps, u0 -> u0 + eps, so the discrete
flow starts strictly positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeInitialData
from .grid import FaceField, ScalarField, div_faces, interior_grads, laplacian, require_same_grid


@dataclass(frozen=True)
class Params:
    """Model constants: taxis strength chi > 0, growth ell >= 0, lift eps in [0, 1)."""

    chi: float
    ell: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        if not self.chi > 0.0:
            raise ValueError(f"chi must be > 0, got {self.chi}")
        if self.ell < 0.0:
            raise ValueError(f"ell must be >= 0, got {self.ell}")
        if not (0.0 <= self.eps < 1.0):
            raise ValueError(f"eps must be in [0, 1), got {self.eps}")


@dataclass
class State:
    """The pair (u, v) at simulation time t; both strictly positive on one grid."""

    u: ScalarField
    v: ScalarField
    t: float = 0.0

    def __post_init__(self):
        require_same_grid(self.u, self.v)

    @property
    def grid(self):
        return self.u.grid


def regularize_initial(u0: ScalarField, eps: float) -> ScalarField:
    """Lift the initial density to u0 + eps pointwise.

    eps = 0 is allowed only for initial data that are already strictly
    positive; negative initial data are rejected outright.
    """
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"eps must be in [0, 1), got {eps}")
    m = u0.values.min()
    if m < 0.0:
        raise NegativeInitialData(f"min u0 = {m} < 0")
    if eps == 0.0 and m <= 0.0:
        raise ValueError("eps = 0 requires strictly positive initial density")
    return ScalarField(u0.grid, u0.values + eps)


def _face_mobilities(u: np.ndarray, v: np.ndarray):
    """Interior-face mobilities: mean(u*v) and (mean u)^2 * (mean v)."""
    uv = u * v
    uv_x = 0.5 * (uv[:, 1:] + uv[:, :-1])
    uv_y = 0.5 * (uv[1:, :] + uv[:-1, :])
    ux = 0.5 * (u[:, 1:] + u[:, :-1])
    uy = 0.5 * (u[1:, :] + u[:-1, :])
    vx = 0.5 * (v[:, 1:] + v[:, :-1])
    vy = 0.5 * (v[1:, :] + v[:-1, :])
    return uv_x, uv_y, ux * ux * vx, uy * uy * vy


def flux_u(u: ScalarField, v: ScalarField, p: Params) -> FaceField:
    """Combined face flux (u v grad u) - chi (u^2 v grad v); zero on the boundary."""
    require_same_grid(u, v)
    gxu, gyu = interior_grads(u)
    gxv, gyv = interior_grads(v)
    uv_x, uv_y, u2v_x, u2v_y = _face_mobilities(u.values, v.values)
    out = FaceField.zeros(u.grid)
    out.x[:, 1:-1] = uv_x * gxu - p.chi * u2v_x * gxv
    out.y[1:-1, :] = uv_y * gyu - p.chi * u2v_y * gyv
    return out


def rhs_u(u: ScalarField, v: ScalarField, p: Params) -> ScalarField:
    """div_faces(flux_u) + ell * u * v."""
    d = div_faces(flux_u(u, v, p))
    return ScalarField(u.grid, d.values + p.ell * u.values * v.values)


def rhs_v(u: ScalarField, v: ScalarField) -> ScalarField:
    """lap v - u * v."""
    require_same_grid(u, v)
    return ScalarField(v.grid, laplacian(v).values - u.values * v.values)
