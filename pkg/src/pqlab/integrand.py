"""Model integrands with (p,q)-growth and their exact derivatives.

The model family is

* ``anisotropic_power``:  f(z) = |z|^p + |z_N|^q
* ``hong``:               f(z) = |z|^2 + |z_N|^4   (the classical counterexample)
* ``quadratic``:          f(z) = |z|^2
* ``custom``:             user-supplied (value, gradient, hessian) callables

plus an optional quadratic regularization weight sigma, which turns f into
f_sigma(z) = f(z) + sigma/2 |z|^2.  Growth and ellipticity hypotheses are
verified by deterministic sampling rather than assumed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError, OutOfRangeError

MODEL_KINDS = ("anisotropic_power", "hong", "quadratic", "custom")

# Relative slack used when deciding whether a sampled inequality "held".
REL_SLACK = 1e-12

DEFAULT_SAMPLE_SEED = 20240601


@dataclass(frozen=True)
class GrowthParams:
    """Growth exponents and ellipticity constants (p, q, m, M).

    Requires 2 <= p <= q < inf and 0 < m <= M.  The flag
    ``satisfies_qlt_p_plus_2`` records whether q < p + 2, the standing
    hypothesis of the estimate modules.
    """

    p: float
    q: float
    m: float
    M: float

    def __post_init__(self):
        vals = (self.p, self.q, self.m, self.M)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidInputError("growth parameters must be finite")
        if not 2.0 <= self.p <= self.q:
            raise InvalidInputError(
                f"need 2 <= p <= q, got p={self.p}, q={self.q}")
        if not 0.0 < self.m <= self.M:
            raise InvalidInputError(
                f"need 0 < m <= M, got m={self.m}, M={self.M}")

    @property
    def satisfies_qlt_p_plus_2(self) -> bool:
        return self.q < self.p + 2


def default_growth_constants(p: float, q: float) -> tuple[float, float]:
    """Analytic (m, M) for the model power integrands.

    m = 1 is exact for |z|^p + |z_N|^q with p >= 2; the upper constant
    M = max(p(p-1), q(q-1), 1) dominates the Hessian's largest eigenvalue
    against (1 + |z|^{q-2}).  Sampling confirms these rather than discovering
    them.
    """
    return 1.0, max(p * (p - 1), q * (q - 1), 1.0)


@dataclass(frozen=True)
class Integrand:
    """An evaluable integrand triple (f, Df, D^2f) with growth parameters.

    Immutable after construction; evaluation is reentrant.  ``sigma`` is the
    quadratic regularization weight (0 means unregularized).  For
    kind="custom" the three callables must accept a single point z of shape
    (N,) and return a float, an (N,) array and an (N, N) symmetric array.
    """

    kind: str
    params: GrowthParams
    sigma: float = 0.0
    value_fn: Optional[Callable] = None
    gradient_fn: Optional[Callable] = None
    hessian_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidInputError(f"unknown integrand kind {self.kind!r}")
        if self.sigma < 0 or not np.isfinite(self.sigma):
            raise InvalidInputError("sigma must be finite and >= 0")
        if self.kind == "custom":
            if not (self.value_fn and self.gradient_fn and self.hessian_fn):
                raise InvalidInputError(
                    "custom integrand needs value_fn, gradient_fn, hessian_fn")

    # -- vectorized evaluation over arrays of shape (..., N) ---------------

    def value(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        r2 = np.sum(z * z, axis=-1)
        if self.kind == "quadratic":
            base = r2
        elif self.kind == "custom":
            base = _apply_pointwise(self.value_fn, z, ())
        else:
            p, q = self.params.p, self.params.q
            base = r2 ** (p / 2) + np.abs(z[..., -1]) ** q
        return base + 0.5 * self.sigma * r2

    def gradient(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.kind == "quadratic":
            g = 2.0 * z
        elif self.kind == "custom":
            g = _apply_pointwise(self.gradient_fn, z, (z.shape[-1],))
        else:
            p, q = self.params.p, self.params.q
            r = np.sqrt(np.sum(z * z, axis=-1))
            g = (p * r ** (p - 2))[..., None] * z
            zn = z[..., -1]
            g[..., -1] += q * np.abs(zn) ** (q - 2) * zn
        return g + self.sigma * z

    def hessian(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        dim = z.shape[-1]
        eye = np.eye(dim)
        if self.kind == "quadratic":
            h = np.broadcast_to(2.0 * eye, z.shape + (dim,)).copy()
        elif self.kind == "custom":
            h = _apply_pointwise(self.hessian_fn, z, (dim, dim))
        else:
            p, q = self.params.p, self.params.q
            r = np.sqrt(np.sum(z * z, axis=-1))
            c1 = p * r ** (p - 2)             # radial isotropic part
            c2 = p * (p - 2) * r ** (p - 2)   # rank-one part, in zhat coords
            # zhat = z/|z|, defined as 0 at the origin; removes the 0/0 there
            # and makes D^2(|z|^p) the zero matrix at z = 0 for p > 2.
            safe_r = np.where(r > 0, r, 1.0)
            zhat = z / safe_r[..., None]
            zhat = np.where(r[..., None] > 0, zhat, 0.0)
            h = c1[..., None, None] * eye
            h = h + c2[..., None, None] * (zhat[..., :, None] * zhat[..., None, :])
            zn = np.abs(z[..., -1])
            h[..., -1, -1] += q * (q - 1) * zn ** (q - 2)
        return h + self.sigma * eye


def _apply_pointwise(fn, z, out_shape):
    flat = z.reshape(-1, z.shape[-1])
    out = np.empty((flat.shape[0],) + out_shape)
    for i, zi in enumerate(flat):
        out[i] = fn(zi)
    return out.reshape(z.shape[:-1] + out_shape)


# -- constructors -----------------------------------------------------------

def anisotropic_power(p: float, q: float, m: float | None = None,
                      M: float | None = None, sigma: float = 0.0) -> Integrand:
    """f(z) = |z|^p + |z_N|^q with analytic default constants."""
    m0, M0 = default_growth_constants(p, q)
    params = GrowthParams(p, q, m0 if m is None else m, M0 if M is None else M)
    return Integrand("anisotropic_power", params, sigma)


def hong(sigma: float = 0.0) -> Integrand:
    """f(z) = |z|^2 + |z_N|^4, i.e. the (p,q) = (2,4) model."""
    m0, M0 = default_growth_constants(2.0, 4.0)
    return Integrand("hong", GrowthParams(2.0, 4.0, m0, M0), sigma)


def quadratic(sigma: float = 0.0) -> Integrand:
    """f(z) = |z|^2; constants (m, M) = (1, 2)."""
    return Integrand("quadratic", GrowthParams(2.0, 2.0, 1.0, 2.0), sigma)


def custom(value_fn, gradient_fn, hessian_fn, params: GrowthParams,
           sigma: float = 0.0) -> Integrand:
    return Integrand("custom", params, sigma, value_fn, gradient_fn, hessian_fn)


def from_spec(spec: dict) -> Integrand:
    """Build a model integrand from a config mapping {kind, p, q, sigma}."""
    kind = spec.get("kind")
    sigma = float(spec.get("sigma", 0.0))
    if kind == "anisotropic_power":
        return anisotropic_power(float(spec["p"]), float(spec["q"]), sigma=sigma)
    if kind == "hong":
        return hong(sigma=sigma)
    if kind == "quadratic":
        return quadratic(sigma=sigma)
    raise InvalidInputError(f"config integrand kind {kind!r} not recognized")


# -- point evaluation and regularization ------------------------------------

def eval_integrand(integrand: Integrand, z) -> tuple[float, np.ndarray, np.ndarray]:
    """Evaluate (value, gradient, hessian) at a single point z.

    Raises InvalidInputError on non-finite input components.  The returned
    Hessian is symmetric by construction.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 1:
        raise InvalidInputError("z must be a vector")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("z has non-finite components")
    return (float(integrand.value(z)), integrand.gradient(z),
            integrand.hessian(z))


def regularize(integrand: Integrand, sigma: float) -> Integrand:
    """Add the quadratic term sigma/2 |z|^2 to an unregularized integrand."""
    if not 0.0 < sigma < 1.0:
        raise OutOfRangeError(f"sigma must lie in (0, 1), got {sigma}")
    if integrand.sigma != 0.0:
        raise InvalidInputError("base integrand must have sigma = 0")
    return dataclasses.replace(integrand, sigma=sigma)


# -- growth hypothesis verification ------------------------------------------

@dataclass(frozen=True)
class HypothesisCheck:
    """Outcome of one sampled inequality A(z, xi) <= B(z, xi)."""

    passed: bool
    worst_ratio: float
    witness_z: tuple
    witness_xi: tuple | None = None


@dataclass(frozen=True)
class GrowthReport:
    """Per-hypothesis pass/fail flags with worst-case violation ratios.

    ``regularized`` tells whether the sigma-augmented forms of the bounds
    were checked (sigma > 0) or the plain ones (sigma = 0).  A hypothesis is
    marked pass iff its inequality held at every sampled (z, xi) pair within
    relative slack 1e-12.
    """

    sigma: float
    regularized: bool
    checks: dict
    sample_z: np.ndarray
    sample_xi: np.ndarray

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks.values())


def default_growth_samples(dim: int = 2, seed: int = DEFAULT_SAMPLE_SEED,
                           n_radii: int = 64, n_directions: int = 16,
                           n_xi: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic sample set: log-spaced radii |z| in [0, 1e3] times random
    directions, paired with random unit test vectors xi."""
    rng = np.random.default_rng(seed)
    radii = np.concatenate([[0.0], np.logspace(-3, 3, n_radii - 1)])
    dirs = rng.normal(size=(n_directions, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    xis = rng.normal(size=(n_xi, dim))
    xis /= np.linalg.norm(xis, axis=1, keepdims=True)
    z = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
    z = np.repeat(z, n_xi, axis=0)
    xi = np.tile(xis, (n_radii * n_directions, 1))
    return z, xi


def _check(name, lhs, rhs, z, xi=None):
    slack = REL_SLACK * (1.0 + np.abs(rhs))
    passed = bool(np.all(lhs <= rhs + slack))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs,
                         np.where(lhs <= slack, 0.0, np.inf))
    k = int(np.argmax(ratio))
    return name, HypothesisCheck(
        passed=passed,
        worst_ratio=float(ratio[k]),
        witness_z=tuple(z[k]),
        witness_xi=None if xi is None else tuple(xi[k]),
    )


def check_growth(integrand: Integrand, samples=None) -> GrowthReport:
    """Verify the growth/ellipticity bounds on a sample set.

    With sigma = 0 this checks the plain two-sided bounds on f, Df and D^2f;
    with sigma > 0 it checks their sigma-augmented counterparts (every bound
    gains the exact contribution of the quadratic term).  Reports the worst
    ratio and its witness point per inequality.
    """
    if samples is None:
        z, xi = default_growth_samples()
    else:
        z, xi = samples
        z = np.asarray(z, dtype=float)
        xi = np.asarray(xi, dtype=float)
    if z.size == 0:
        raise InvalidInputError("sample set must be non-empty")
    if z.shape != xi.shape:
        raise InvalidInputError("z and xi samples must have matching shapes")

    p, q = integrand.params.p, integrand.params.q
    m, M = integrand.params.m, integrand.params.M
    s = integrand.sigma

    f = integrand.value(z)
    df = integrand.gradient(z)
    d2f = integrand.hessian(z)

    r = np.linalg.norm(z, axis=-1)
    inner = np.einsum("sn,sn->s", df, z)
    quad = np.einsum("sn,snm,sm->s", xi, d2f, xi)
    xi2 = np.sum(xi * xi, axis=-1)

    sig_half_r2 = 0.5 * s * r ** 2
    checks = dict([
        _check("value_lower", m * r ** p + sig_half_r2, f, z),
        _check("value_upper", f, M * (1 + r) ** q + sig_half_r2, z),
        _check("gradient_coercivity", m * r ** p + sig_half_r2, inner, z),
        # The sigma term contributes exactly sigma*|z| to |Df_sigma|, so the
        # regularized upper bound carries it explicitly.
        _check("gradient_norm", np.linalg.norm(df, axis=-1),
               M * (1 + r ** (q - 1)) + s * r, z),
        _check("hessian_lower", (m * r ** (p - 2) + s) * xi2, quad, z, xi),
        _check("hessian_upper", quad,
               (M * (1 + r ** (q - 2)) + s) * xi2, z, xi),
    ])
    return GrowthReport(sigma=s, regularized=s > 0, checks=checks,
                        sample_z=z, sample_xi=xi)
