"""Uniform grids on square domains, difference stencils, radial cutoffs.

Nodes live at x_ij = (-L + i*h, -L + j*h) with h = 2L/(n-1); values arrays
are indexed [i, j] so axis 0 is the x1 direction.  Discrete integrals are
nodal Riemann sums h^2 * sum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Grid", "DiscreteField", "CutoffField", "build_grid",
    "discrete_gradient", "discrete_hessian", "build_cutoff",
    "smoothstep", "smoothstep_slope", "nodal_integral", "w1p_norm",
    "field_to_csv", "field_from_csv", "field_to_binary", "field_from_binary",
]


@dataclass(frozen=True)
class Grid:
    """Uniform n x n grid on the square [-L, L]^2 (n odd, so the origin is a node)."""

    n: int
    L: float

    @property
    def dimension(self) -> int:
        return 2

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def node_count(self) -> int:
        return self.n * self.n

    @property
    def boundary_count(self) -> int:
        return 4 * self.n - 4

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape (n, n, 2)."""
        x1, x2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([x1, x2], axis=-1)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros((self.n, self.n), dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask

    @cached_property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    def inner_mask(self, depth: int) -> np.ndarray:
        """Nodes at index distance >= depth from every edge."""
        mask = np.zeros((self.n, self.n), dtype=bool)
        mask[depth:self.n - depth, depth:self.n - depth] = True
        return mask

    def radius_mask(self, radius: float) -> np.ndarray:
        """Nodes with |x| <= radius."""
        return np.linalg.norm(self.coords, axis=-1) <= radius


def build_grid(n: int, L: float) -> Grid:
    if n < 9 or n % 2 == 0:
        raise InvalidInputError(f"node count must be odd and >= 9, got {n}")
    if not (np.isfinite(L) and L > 0):
        raise InvalidInputError(f"half-width must be positive, got {L}")
    return Grid(int(n), float(L))


@dataclass(frozen=True)
class DiscreteField:
    """Nodal scalar values on a Grid; boundary entries are the imposed trace."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n, self.grid.n):
            raise InvalidInputError(
                f"values shape {vals.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def trace(self) -> np.ndarray:
        """Boundary values in canonical (row-major masked) order."""
        return self.values[self.grid.boundary_mask]


def discrete_gradient(field: DiscreteField) -> np.ndarray:
    """Nodal gradient, shape (n, n, 2): central differences at interior
    nodes, second-order one-sided at the boundary.  Exact for affine and
    quadratic fields at interior nodes."""
    h = field.grid.h
    d1, d2 = np.gradient(field.values, h, edge_order=2)
    return np.stack([d1, d2], axis=-1)


def discrete_hessian(field: DiscreteField) -> np.ndarray:
    """Nodal Hessian, shape (n, n, 2, 2), from the standard second-order
    stencils.  Valid on interior nodes only; the outermost ring is filled
    with zeros, not estimates."""
    u = field.values
    h = field.grid.h
    n = field.grid.n
    hess = np.zeros((n, n, 2, 2))
    inner = (slice(1, -1), slice(1, -1))
    uxx = (u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1]) / h ** 2
    uyy = (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / h ** 2
    uxy = (u[2:, 2:] + u[:-2, :-2] - u[2:, :-2] - u[:-2, 2:]) / (4 * h ** 2)
    hess[inner + (0, 0)] = uxx
    hess[inner + (1, 1)] = uyy
    hess[inner + (0, 1)] = uxy
    hess[inner + (1, 0)] = uxy
    return hess


# -- radial cutoff -----------------------------------------------------------

def smoothstep(t):
    """Quintic smoothstep: 0 for t <= 0, 1 for t >= 1, 6t^5 - 15t^4 + 10t^3 between."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def smoothstep_slope(t):
    """Derivative of the quintic smoothstep; maximum value 15/8 at t = 1/2."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tt = np.where(inside, t, 0.0)
    return np.where(inside, 30.0 * tt * tt * (tt - 1.0) ** 2, 0.0)


@dataclass(frozen=True)
class CutoffField:
    """Radial plateau cutoff: 1 on |x| <= r, 0 on |x| >= R, quintic in between.

    ``grad`` holds the analytic gradient at the nodes; its norm is bounded by
    (15/8)/(R - r).
    """

    grid: Grid
    r: float
    R: float
    values: np.ndarray
    grad: np.ndarray


def build_cutoff(grid: Grid, r: float, R: float) -> CutoffField:
    if not (0.0 < r < R <= grid.L):
        raise InvalidInputError(
            f"cutoff radii must satisfy 0 < r < R <= L, got r={r}, R={R}, L={grid.L}")
    x = grid.coords
    rho = np.linalg.norm(x, axis=-1)
    t = (R - rho) / (R - r)
    values = smoothstep(t)
    # d eta / dx = zeta'(t) * (-x/|x|) / (R - r); zero on both plateaus.
    slope = smoothstep_slope(t) / (R - r)
    safe = np.where(rho > 0, rho, 1.0)
    grad = -slope[..., None] * x / safe[..., None]
    grad = np.where(rho[..., None] > 0, grad, 0.0)
    return CutoffField(grid=grid, r=float(r), R=float(R), values=values, grad=grad)


# -- integrals and norms -----------------------------------------------------

def nodal_integral(grid: Grid, values: np.ndarray, mask: np.ndarray | None = None) -> float:
    """h^2 * sum of nodal values, optionally restricted to a mask."""
    v = values if mask is None else values[mask]
    return float(grid.h ** 2 * np.sum(v))


def w1p_norm(field: DiscreteField, p: float) -> float:
    """Discrete W^{1,p} norm: (h^2 sum |u|^p + h^2 sum |grad u|^p)^(1/p)."""
    g = discrete_gradient(field)
    gnorm = np.linalg.norm(g, axis=-1)
    total = nodal_integral(field.grid, np.abs(field.values) ** p) \
        + nodal_integral(field.grid, gnorm ** p)
    return float(total ** (1.0 / p))


# -- serialization -----------------------------------------------------------

CSV_HEADER = "i,j,x1,x2,value"


def field_to_csv(field: DiscreteField, path) -> None:
    n = field.grid.n
    x = field.grid.coords
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for i in range(n):
            for j in range(n):
                fh.write(f"{i},{j},{x[i, j, 0]!r},{x[i, j, 1]!r},"
                         f"{field.values[i, j]!r}\n")


def field_from_csv(path) -> DiscreteField:
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    ii = data[:, 0].astype(int)
    jj = data[:, 1].astype(int)
    n = ii.max() + 1
    L = float(np.max(np.abs(data[:, 2])))
    values = np.empty((n, n))
    values[ii, jj] = data[:, 4]
    return DiscreteField(build_grid(n, L), values)


def field_to_binary(field: DiscreteField, basepath) -> None:
    """JSON header plus flat little-endian float64 block (row-major)."""
    basepath = str(basepath)
    header = {
        "n": field.grid.n,
        "L": field.grid.L,
        "h": field.grid.h,
        "dtype": "<f8",
        "order": "C",
        "count": field.grid.node_count,
    }
    with open(basepath + ".json", "w") as fh:
        json.dump(header, fh, sort_keys=True)
    field.values.astype("<f8").tofile(basepath + ".bin")


def field_from_binary(basepath) -> DiscreteField:
    basepath = str(basepath)
    with open(basepath + ".json") as fh:
        header = json.load(fh)
    n = int(header["n"])
    values = np.fromfile(basepath + ".bin", dtype=header["dtype"]).reshape(n, n)
    return DiscreteField(build_grid(n, header["L"]), values)
