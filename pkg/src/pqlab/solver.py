"""Damped-Newton minimization of the regularized discrete energy.

The discrete energy is cell-based: on every grid cell the field is bilinearly
interpolated and the integrand is sampled at 2x2 Gauss points, so

    E_h(v) = sum_cells (h^2/4) * sum_gauss f_sigma(grad v at gauss point).

Composing the convex f_sigma with linear maps keeps E_h convex, which makes
Newton descent with Armijo backtracking globally convergent.  For sigma > 0
the energy is strictly convex in the interior values, mirroring the
uniqueness of the regularized minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (InvalidInputError, NonConvergenceError,
                     NumericalBlowupError, OutOfRangeError)
from .integrand import Integrand
from .mesh import DiscreteField, Grid, smoothstep

__all__ = [
    "BoundarySpec", "SolveConfig", "Solution",
    "mollify_boundary", "minimize", "energy",
    "minimality_probe", "max_principle_check", "MaxPrincipleReport",
    "affine_fit_field",
]

# Reference-cell Gauss ordinates for 2x2 quadrature on [0, 1].
_GPTS = ((1.0 - 1.0 / math.sqrt(3.0)) / 2.0, (1.0 + 1.0 / math.sqrt(3.0)) / 2.0)


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary datum U, evaluable anywhere near the square.

    kinds: affine (a.x + b), trig (amplitude * sin(f1 x1) * cos(f2 x2)),
    custom (vectorized callable of shape (..., 2) -> (...)).  ``epsilon`` is
    the default mollification radius.
    """

    kind: str
    a: tuple = (0.0, 0.0)
    b: float = 0.0
    amplitude: float = 1.0
    frequencies: tuple = (math.pi, math.pi)
    fn: Optional[Callable] = None
    epsilon: float = 0.0

    def __post_init__(self):
        if self.kind not in ("affine", "trig", "custom"):
            raise InvalidInputError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "custom" and self.fn is None:
            raise InvalidInputError("custom boundary needs a callable")
        if self.epsilon < 0:
            raise InvalidInputError("epsilon must be >= 0")

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "affine":
            return x[..., 0] * self.a[0] + x[..., 1] * self.a[1] + self.b
        if self.kind == "trig":
            f1, f2 = self.frequencies
            return self.amplitude * np.sin(f1 * x[..., 0]) * np.cos(f2 * x[..., 1])
        return np.asarray(self.fn(x), dtype=float)

    def sup_on_boundary(self, grid: Grid) -> float:
        """max |U| over the grid's boundary nodes."""
        vals = self.evaluate(grid.coords[grid.boundary_mask])
        return float(np.max(np.abs(vals)))


def from_boundary_spec(spec: dict) -> BoundarySpec:
    """Build a BoundarySpec from a config mapping."""
    kind = spec.get("kind")
    eps = float(spec.get("epsilon", 0.0))
    if kind == "affine":
        return BoundarySpec("affine", a=tuple(spec["a"]), b=float(spec["b"]),
                            epsilon=eps)
    if kind == "trig":
        return BoundarySpec("trig", amplitude=float(spec["amplitude"]),
                            frequencies=tuple(spec["frequencies"]), epsilon=eps)
    raise InvalidInputError(f"config boundary kind {kind!r} not recognized")


# -- mollification -----------------------------------------------------------

def _bump_quadrature():
    """4x4 tensor Gauss-Legendre points on [-1,1]^2 weighted by the standard
    C-infinity bump exp(-1/(1-|y|^2)); points outside the unit disc get weight
    zero.  Weights are normalized at use time, so constants and (by symmetry)
    affine data are preserved exactly."""
    nodes, weights = np.polynomial.legendre.leggauss(4)
    ya, yb = np.meshgrid(nodes, nodes, indexing="ij")
    pts = np.stack([ya.ravel(), yb.ravel()], axis=-1)
    r2 = np.sum(pts * pts, axis=-1)
    w = np.outer(weights, weights).ravel()
    inside = r2 < 1.0
    bump = np.zeros_like(r2)
    bump[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return pts, w * bump


_BUMP_PTS, _BUMP_W = _bump_quadrature()


def mollifier_epsilon_max(grid: Grid) -> float:
    """Admissible mollification range bound: min(1, diam/2) for the square."""
    return min(1.0, math.sqrt(2.0) * grid.L)


def mollify_boundary(spec: BoundarySpec, epsilon: float, grid: Grid) -> np.ndarray:
    """Trace of the mollified datum U_eps = U * rho_eps on the boundary nodes.

    Sixteen-point quadrature per node against a normalized smooth bump of
    radius eps; eps = 0 returns U itself.  The normalized weights are a convex
    combination, so sup |U_eps| <= sup |U|.
    """
    if epsilon < 0 or not np.isfinite(epsilon):
        raise InvalidInputError("epsilon must be finite and >= 0")
    if epsilon >= mollifier_epsilon_max(grid):
        raise OutOfRangeError(
            f"epsilon {epsilon} not below eps0 = {mollifier_epsilon_max(grid)}")
    xb = grid.coords[grid.boundary_mask]
    if epsilon == 0.0:
        return spec.evaluate(xb)
    shifted = xb[:, None, :] - epsilon * _BUMP_PTS[None, :, :]
    vals = spec.evaluate(shifted)
    return vals @ _BUMP_W / np.sum(_BUMP_W)


# -- discrete energy and its derivatives --------------------------------------

def _corner_views(u: np.ndarray):
    return u[:-1, :-1], u[1:, :-1], u[:-1, 1:], u[1:, 1:]


def _gauss_gradient(u: np.ndarray, h: float, s: float, t: float):
    """Gradient of the bilinear interpolant at local point (s, t) of every cell."""
    v00, v10, v01, v11 = _corner_views(u)
    dx = ((v10 - v00) * (1 - t) + (v11 - v01) * t) / h
    dy = ((v01 - v00) * (1 - s) + (v11 - v10) * s) / h
    return dx, dy


def _shape_gradients(h: float, s: float, t: float):
    """Constant shape-function gradients at (s, t); corner order 00,10,01,11."""
    ax = np.array([-(1 - t), (1 - t), -t, t]) / h
    ay = np.array([-(1 - s), -s, (1 - s), s]) / h
    return ax, ay


def energy(field, integrand: Integrand, grid: Grid | None = None) -> float:
    """Discrete energy E_h of a field (DiscreteField or values array)."""
    if isinstance(field, DiscreteField):
        grid = field.grid
        u = field.values
    else:
        u = np.asarray(field, dtype=float)
    if not np.all(np.isfinite(u)):
        raise InvalidInputError("field values must be finite")
    h = grid.h
    w = h * h / 4.0
    total = 0.0
    for s in _GPTS:
        for t in _GPTS:
            dx, dy = _gauss_gradient(u, h, s, t)
            z = np.stack([dx, dy], axis=-1)
            total += w * float(np.sum(integrand.value(z)))
    return total


def gradient_power_integral(field, power: float, grid: Grid | None = None) -> float:
    """Quadrature of |grad v|^power with the same cell Gauss rule as the energy."""
    if isinstance(field, DiscreteField):
        grid = field.grid
        u = field.values
    else:
        u = np.asarray(field, dtype=float)
    h = grid.h
    w = h * h / 4.0
    total = 0.0
    for s in _GPTS:
        for t in _GPTS:
            dx, dy = _gauss_gradient(u, h, s, t)
            total += w * float(np.sum((dx * dx + dy * dy) ** (power / 2.0)))
    return total


def _energy_and_gradient(u: np.ndarray, integrand: Integrand, grid: Grid):
    h = grid.h
    n = grid.n
    w = h * h / 4.0
    g = np.zeros(n * n)
    total = 0.0
    idx = _corner_flat_indices(n)
    for s in _GPTS:
        for t in _GPTS:
            dx, dy = _gauss_gradient(u, h, s, t)
            z = np.stack([dx, dy], axis=-1)
            total += w * float(np.sum(integrand.value(z)))
            df = integrand.gradient(z)
            ax, ay = _shape_gradients(h, s, t)
            for c in range(4):
                contrib = w * (df[..., 0] * ax[c] + df[..., 1] * ay[c])
                np.add.at(g, idx[c], contrib.ravel())
    return total, g


def _corner_flat_indices(n: int):
    ii, jj = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="ij")
    return (
        (ii * n + jj).ravel(),
        ((ii + 1) * n + jj).ravel(),
        (ii * n + jj + 1).ravel(),
        ((ii + 1) * n + jj + 1).ravel(),
    )


def _energy_hessian(u: np.ndarray, integrand: Integrand, grid: Grid) -> sp.csr_matrix:
    h = grid.h
    n = grid.n
    w = h * h / 4.0
    idx = _corner_flat_indices(n)
    ncells = (n - 1) ** 2
    rows, cols, vals = [], [], []
    for s in _GPTS:
        for t in _GPTS:
            dx, dy = _gauss_gradient(u, h, s, t)
            z = np.stack([dx, dy], axis=-1)
            hz = integrand.hessian(z)
            hxx = hz[..., 0, 0].ravel()
            hxy = hz[..., 0, 1].ravel()
            hyy = hz[..., 1, 1].ravel()
            ax, ay = _shape_gradients(h, s, t)
            for c in range(4):
                for d in range(4):
                    coef = w * (ax[c] * ax[d] * hxx
                                + (ax[c] * ay[d] + ay[c] * ax[d]) * hxy
                                + ay[c] * ay[d] * hyy)
                    rows.append(idx[c])
                    cols.append(idx[d])
                    vals.append(coef)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.coo_matrix((vals, (rows, cols)), shape=(n * n, n * n)).tocsr()


# -- solve --------------------------------------------------------------------

@dataclass(frozen=True)
class SolveConfig:
    """Newton/line-search parameters.  The gradient tolerance is scaled by the
    node count at solve time (the residual is a sum over nodes)."""

    tol: float = 1e-10
    max_iterations: int = 100
    armijo_slope: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-12

    def __post_init__(self):
        for name in ("tol", "max_iterations", "armijo_slope", "backtrack", "min_step"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")


@dataclass(frozen=True)
class Solution:
    """Converged minimizer with its audit trail."""

    field: DiscreteField
    energy: float
    residual_norm: float
    iterations: int
    integrand: Integrand
    grid: Grid
    energy_trace: tuple = dc_field(default_factory=tuple)
    converged: bool = True


def affine_fit_field(grid: Grid, trace: np.ndarray) -> np.ndarray:
    """Least-squares affine fit of the boundary trace, with the exact trace
    imposed on the boundary nodes.  Exact whenever the trace is affine."""
    xb = grid.coords[grid.boundary_mask]
    design = np.column_stack([xb, np.ones(len(xb))])
    coef, *_ = np.linalg.lstsq(design, trace, rcond=None)
    u = grid.coords @ coef[:2] + coef[2]
    u[grid.boundary_mask] = trace
    return u


def minimize(integrand: Integrand, trace: np.ndarray, grid: Grid,
             cfg: SolveConfig | None = None, initial: str = "affine") -> Solution:
    """Minimize the discrete energy over interior nodal values.

    Requires sigma > 0 except in the uniformly elliptic case p = q = 2
    (whose own coercivity suffices).  Starts from the affine fit of the
    boundary data (``initial="zero"`` starts from zero interior values
    instead) and runs damped Newton until the Euler-Lagrange residual (the
    gradient of E_h with respect to interior values) drops below
    tol * node_count.
    """
    cfg = cfg or SolveConfig()
    trace = np.asarray(trace, dtype=float)
    if trace.shape != (grid.boundary_count,):
        raise InvalidInputError(
            f"trace must have {grid.boundary_count} entries, got {trace.shape}")
    if not np.all(np.isfinite(trace)):
        raise InvalidInputError("boundary trace must be finite")
    if integrand.sigma <= 0 and not (integrand.params.p == integrand.params.q == 2):
        raise OutOfRangeError(
            "sigma > 0 required unless p = q = 2; regularize the integrand first")

    interior_flat = np.flatnonzero(grid.interior_mask.ravel())
    tol_eff = cfg.tol * grid.node_count

    if initial == "affine":
        u = affine_fit_field(grid, trace)
    elif initial == "zero":
        u = np.zeros((grid.n, grid.n))
        u[grid.boundary_mask] = trace
    else:
        raise InvalidInputError(f"unknown initial iterate {initial!r}")
    e0, g_full = _energy_and_gradient(u, integrand, grid)
    if not np.isfinite(e0):
        raise NumericalBlowupError("non-finite energy at the initial iterate")
    trace_energy = [e0]

    iterations = 0
    for _ in range(cfg.max_iterations):
        g_int = g_full[interior_flat]
        residual = float(np.linalg.norm(g_int))
        if residual <= tol_eff:
            break
        hess = _energy_hessian(u, integrand, grid)
        hess_ii = hess[interior_flat][:, interior_flat]
        step = spla.spsolve(hess_ii.tocsc(), -g_int)
        slope = float(g_int @ step)
        if not np.isfinite(slope) or slope >= 0:
            raise NumericalBlowupError("Newton direction is not a descent direction")

        lam = 1.0
        accepted = False
        while lam >= cfg.min_step:
            candidate = u.copy()
            candidate.reshape(-1)[interior_flat] += lam * step
            try:
                e_new = energy(candidate, integrand, grid)
            except InvalidInputError:
                e_new = np.inf
            if np.isfinite(e_new) and e_new <= e0 + cfg.armijo_slope * lam * slope:
                accepted = True
                break
            lam *= cfg.backtrack
        if not accepted:
            best = _solution(u, e0, residual, iterations, integrand, grid,
                             trace_energy, converged=False)
            raise NonConvergenceError(
                f"line search stalled below min step at iteration {iterations}",
                best=best)

        u = candidate
        e0 = e_new
        trace_energy.append(e0)
        iterations += 1
        _, g_full = _energy_and_gradient(u, integrand, grid)
    else:
        g_int = g_full[interior_flat]
        residual = float(np.linalg.norm(g_int))
        if residual > tol_eff:
            best = _solution(u, e0, residual, iterations, integrand, grid,
                             trace_energy, converged=False)
            raise NonConvergenceError(
                f"residual {residual:.3e} above tolerance {tol_eff:.3e} "
                f"after {iterations} iterations", best=best)

    g_int = g_full[interior_flat]
    residual = float(np.linalg.norm(g_int))
    return _solution(u, e0, residual, iterations, integrand, grid,
                     trace_energy, converged=True)


def _solution(u, e, residual, iterations, integrand, grid, trace_energy, converged):
    return Solution(
        field=DiscreteField(grid, u.copy()),
        energy=float(e),
        residual_norm=residual,
        iterations=iterations,
        integrand=integrand,
        grid=grid,
        energy_trace=tuple(trace_energy),
        converged=converged,
    )


# -- minimality and maximum principle probes ----------------------------------

def minimality_probe(solution: Solution, trials: int = 100,
                     amplitude: float = 1e-3, seed: int = 0) -> float:
    """Worst energy change over random compactly supported perturbations.

    Each probe is a signed radial quintic bump of the given amplitude whose
    support stays strictly inside the domain.  For a true minimizer the
    returned minimum of E(u + phi) - E(u) is >= -1e-12 * node_count.
    """
    rng = np.random.default_rng(seed)
    grid = solution.grid
    u = solution.field.values
    e0 = energy(u, solution.integrand, grid)
    coords = grid.coords
    h = grid.h
    worst = np.inf
    for _ in range(trials):
        radius = rng.uniform(3 * h, 0.4 * grid.L)
        margin = radius + 2 * h
        center = rng.uniform(-grid.L + margin, grid.L - margin, size=2)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        dist = np.linalg.norm(coords - center, axis=-1)
        bump = sign * amplitude * smoothstep(1.0 - dist / radius)
        bump[grid.boundary_mask] = 0.0
        diff = energy(u + bump, solution.integrand, grid) - e0
        worst = min(worst, diff)
    return float(worst)


@dataclass(frozen=True)
class MaxPrincipleReport:
    interior_max: float
    boundary_max: float
    passed: bool


def max_principle_check(solution: Solution) -> MaxPrincipleReport:
    """Interior values must not exceed the boundary trace in absolute value
    (up to roundoff slack)."""
    grid = solution.grid
    u = solution.field.values
    interior_max = float(np.max(np.abs(u[grid.interior_mask])))
    boundary_max = float(np.max(np.abs(u[grid.boundary_mask])))
    passed = interior_max <= boundary_max + 1e-12 * (1.0 + boundary_max)
    return MaxPrincipleReport(interior_max, boundary_max, passed)
