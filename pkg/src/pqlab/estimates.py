"""Discrete measurements of the a-priori gradient estimates.

Everything here evaluates inequalities on computed solutions or in exact
arithmetic; nothing certifies the continuum statements.  All constants that
the theory leaves uninstantiated are set to 1 and reported as
"up to constant".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidInputError, OutOfRangeError, UnsupportedRegimeError
from .mesh import CutoffField, discrete_gradient, discrete_hessian
from .solver import Solution

__all__ = [
    "CaccioppoliReport", "caccioppoli_report",
    "HigherIntegrabilityReport", "higher_integrability_report",
    "integrability_bracket",
    "MoserSchedule", "moser_schedule",
    "LipschitzBudget", "lipschitz_budget",
    "IterationBound", "iteration_lemma_bound",
    "sup_gradient", "moser_iterate_diagnostic",
]

# Summation for second derivatives stays two rings away from the boundary so
# every stencil has a full neighborhood.
_HESSIAN_DEPTH = 2


# -- Caccioppoli --------------------------------------------------------------

@dataclass(frozen=True)
class CaccioppoliReport:
    """Two-sided measurement of the gradient Caccioppoli inequality.

    lhs = h^2 sum |grad u|^(p-2+alpha) |hess u|^2 eta^2
    rhs = h^2 sum (|grad u|^(q+alpha) + |grad u|^(2+alpha)) |grad eta|^2

    ``constant`` is the empirical ratio lhs/rhs (inf if rhs = 0 < lhs); the
    pass flag compares it against a configured cap, since the theory only
    asserts finiteness of the constant.
    """

    alpha: float
    lhs: float
    rhs: float
    constant: float
    cap: float
    passed: bool


def caccioppoli_report(solution: Solution, cutoff: CutoffField,
                       alpha: float, cap: float = 1e4) -> CaccioppoliReport:
    if alpha < 0:
        raise InvalidInputError("alpha must be >= 0")
    grid = solution.grid
    if cutoff.grid != grid:
        raise InvalidInputError("cutoff and solution grids differ")
    p, q = solution.integrand.params.p, solution.integrand.params.q

    grad = discrete_gradient(solution.field)
    hess = discrete_hessian(solution.field)
    gnorm = np.linalg.norm(grad, axis=-1)
    hnorm2 = np.sum(hess * hess, axis=(-2, -1))
    eta2 = cutoff.values ** 2
    geta2 = np.sum(cutoff.grad * cutoff.grad, axis=-1)

    mask = grid.inner_mask(_HESSIAN_DEPTH)
    h2 = grid.h ** 2
    lhs = h2 * float(np.sum((gnorm ** (p - 2 + alpha) * hnorm2 * eta2)[mask]))
    rhs = h2 * float(np.sum(
        ((gnorm ** (q + alpha) + gnorm ** (2 + alpha)) * geta2)[mask]))

    if rhs > 0:
        constant = lhs / rhs
    else:
        constant = 0.0 if lhs == 0.0 else math.inf
    return CaccioppoliReport(alpha=float(alpha), lhs=lhs, rhs=rhs,
                             constant=constant, cap=cap,
                             passed=lhs <= cap * rhs)


# -- higher integrability ------------------------------------------------------

def integrability_bracket(p: float, q: float, beta: float, sup_u: float,
                          r0: float, R0: float, N: int) -> tuple[float, tuple]:
    """Unit-constant right-hand bracket of the gradient integrability bound.

    Returns (bracket, exponents) with
    bracket = R0^N [ rho^(2(beta+p)/p) + rho^(2(beta+p)/(2-q+p)) + rho^(p+beta) ],
    rho = sup_u / (R0 - r0).  Requires q < p + 2: at q = p + 2 the second
    exponent's denominator vanishes, and the regime is rejected.
    """
    if q >= p + 2:
        raise UnsupportedRegimeError(
            f"higher integrability requires q < p + 2, got p={p}, q={q}")
    if beta < 2:
        raise InvalidInputError("beta must be >= 2")
    if not 0 < r0 < R0:
        raise InvalidInputError("need 0 < r0 < R0")
    exps = (2 * (beta + p) / p, 2 * (beta + p) / (2 - q + p), p + beta)
    rho = sup_u / (R0 - r0)
    bracket = R0 ** N * sum(rho ** e for e in exps)
    return float(bracket), exps


@dataclass(frozen=True)
class HigherIntegrabilityReport:
    beta: float
    lhs: float
    bracket: float
    exponents: tuple
    ratio: float
    sup_boundary: float
    r0: float
    R0: float


def higher_integrability_report(solution: Solution, beta: float, r0: float,
                                R0: float, sup_boundary: float
                                ) -> HigherIntegrabilityReport:
    """Empirical gradient integral over the inner disc against the
    closed-form bracket (constant set to 1)."""
    grid = solution.grid
    p, q = solution.integrand.params.p, solution.integrand.params.q
    bracket, exps = integrability_bracket(p, q, beta, sup_boundary, r0, R0,
                                          grid.dimension)
    if R0 > grid.L:
        raise InvalidInputError("R0 must lie within the grid half-width")
    grad = discrete_gradient(solution.field)
    gnorm = np.linalg.norm(grad, axis=-1)
    mask = grid.radius_mask(r0) & grid.interior_mask
    lhs = grid.h ** 2 * float(np.sum(gnorm[mask] ** (p + beta)))
    ratio = lhs / bracket if bracket > 0 else math.inf
    return HigherIntegrabilityReport(beta=float(beta), lhs=lhs, bracket=bracket,
                                     exponents=exps, ratio=ratio,
                                     sup_boundary=float(sup_boundary),
                                     r0=float(r0), R0=float(R0))


# -- Moser exponent schedule ---------------------------------------------------

def _as_fraction(x, name):
    try:
        return Fraction(x)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} must be rational-convertible") from exc


@dataclass(frozen=True)
class MoserSchedule:
    """Exponent bootstrap alpha_n with (p + alpha_n) * 2s/2 = alpha_{n+1} + q.

    Exact rational data: ``alphas[n]`` equals the closed form
    (2s/2)^n alpha0 + (2s p/2 - q) ((2s/2)^n - 1)/(2s/2 - 1) for every n.
    ``limit_exponent`` is 1/(alpha0 + (2s p - 2q)/(2s - 2)) when that
    denominator is positive (the divergent case) and None otherwise.
    ``observations`` holds the three bounded quotients of the iteration tail,
    evaluated at n_max: ((2s/2)^n/(alpha_n+q), weighted-sum quotient,
    geometric-sum quotient).
    """

    p: Fraction
    q: Fraction
    N: int
    two_star: Fraction
    alpha0: Fraction
    alphas: tuple
    limit_exponent: Fraction | None
    diverges: bool
    observations: tuple

    @property
    def n_max(self) -> int:
        return len(self.alphas) - 1

    def alpha_closed_form(self, n: int) -> Fraction:
        half = self.two_star / 2
        return (half ** n * self.alpha0
                + (half * self.p - self.q) * (half ** n - 1) / (half - 1))

    def limit_ratio(self, n: int) -> Fraction:
        half = self.two_star / 2
        return half ** n / (self.alpha_closed_form(n) + self.q)

    def limit_ratio_gap(self, n: int) -> float:
        """|ratio_n - limit| as a float; inf when the schedule stalls."""
        if self.limit_exponent is None:
            return math.inf
        return abs(float(self.limit_ratio(n) - self.limit_exponent))

    def iterate_log_bounds(self, log_y0: float, steps: int,
                           log_c: float = 0.0) -> list[float]:
        """log of the per-step iterate bounds Y_{n+1} <= C^n (Y_n + 1)^(2s/2),
        computed in log space (the raw bounds overflow within a few steps)."""
        half = float(self.two_star) / 2.0
        logs = [log_y0]
        for n in range(steps):
            prev = logs[-1]
            log_plus_one = prev + math.log1p(math.exp(-prev)) if prev > 0 \
                else math.log1p(math.exp(prev))
            logs.append(n * log_c + half * log_plus_one)
        return logs


def moser_schedule(p, q, N: int, n_max: int = 20,
                   two_star_for_N2=None) -> MoserSchedule:
    """Build the exponent schedule in exact rational arithmetic.

    For N = 2 a Sobolev exponent in (2, inf) must be supplied or defaulted
    (default 4, which keeps the step ratio 2s/2 = 2 rational).
    """
    p = _as_fraction(p, "p")
    q = _as_fraction(q, "q")
    if not 2 <= p <= q:
        raise InvalidInputError(f"need 2 <= p <= q, got p={p}, q={q}")
    if not (isinstance(N, int) and N >= 2):
        raise InvalidInputError("N must be an integer >= 2")
    if N == 2:
        two_star = _as_fraction(4 if two_star_for_N2 is None else two_star_for_N2,
                                "two_star_for_N2")
        if not two_star > 2:
            raise OutOfRangeError("for N = 2 the Sobolev exponent must exceed 2")
    else:
        if two_star_for_N2 is not None:
            raise InvalidInputError("two_star_for_N2 only applies to N = 2")
        two_star = Fraction(2 * N, N - 2)
    if n_max < 1:
        raise InvalidInputError("n_max must be >= 1")

    half = two_star / 2
    alpha0 = max((2 * q - two_star * p) / (two_star - 2), Fraction(2))
    alphas = [alpha0]
    for _ in range(n_max):
        alphas.append((p + alphas[-1]) * half - q)

    gap = alpha0 + (two_star * p - 2 * q) / (two_star - 2)
    diverges = gap > 0
    limit_exponent = 1 / gap if diverges else None

    # Tail quotients of the iteration at n_max: the ratio tending to the
    # limit exponent and the two sums that stay bounded.
    n = n_max
    denom = alphas[n] + q
    weighted = sum(half ** j * (n - j) for j in range(n))
    geometric = sum(half ** (j + 1) for j in range(n))
    observations = (half ** n / denom, weighted / denom, geometric / denom)

    return MoserSchedule(p=p, q=q, N=N, two_star=two_star, alpha0=alpha0,
                         alphas=tuple(alphas), limit_exponent=limit_exponent,
                         diverges=diverges, observations=observations)


# -- Lipschitz budget ----------------------------------------------------------

@dataclass(frozen=True)
class LipschitzBudget:
    """Closed-form gradient sup bound (constants set to 1)."""

    gamma1: float
    exponent: float
    bound: float


def lipschitz_budget(p: float, q: float, N: int, R0: float, sup_boundary: float,
                     schedule: MoserSchedule) -> LipschitzBudget:
    """Evaluate the budget Gamma1 and (Gamma1 + 1)^(limit exponent).

    Requires q < p + 2 and a divergent schedule; both are hard hypotheses of
    the underlying bootstrap, not tunables.
    """
    if q >= p + 2:
        raise UnsupportedRegimeError(
            f"Lipschitz budget requires q < p + 2, got p={p}, q={q}")
    if schedule.limit_exponent is None:
        raise UnsupportedRegimeError(
            "exponent schedule does not diverge; no sup bound available")
    if R0 <= 0:
        raise InvalidInputError("R0 must be positive")
    if sup_boundary < 0:
        raise InvalidInputError("sup_boundary must be >= 0")
    a0q = float(schedule.alpha0) + q
    exps = (2 * a0q / p, 2 * a0q / (2 - q + p), a0q)
    rho = sup_boundary / R0
    gamma1 = R0 ** N * sum(rho ** e for e in exps)
    exponent = float(schedule.limit_exponent)
    return LipschitzBudget(gamma1=float(gamma1), exponent=exponent,
                           bound=float((gamma1 + 1.0) ** exponent))


# -- iteration lemma -----------------------------------------------------------

@dataclass(frozen=True)
class IterationBound:
    """Constructive output of the hole-filling iteration.

    ``lam`` is the geometric radius ratio used (None for the single-step
    theta = 0 case); the radius sequence is t_i = rho + (1 - lam^i)(R - rho).
    """

    A: float
    B: float
    C: float
    alpha: float
    beta: float
    theta: float
    rho: float
    R: float
    lam: float | None
    bound: float


def iteration_lemma_bound(A, B, C, alpha, beta, theta, rho, R) -> IterationBound:
    """Bound Z(rho) given Z(t) <= A(s-t)^-alpha + B(s-t)^-beta + C + theta Z(s).

    Sums the geometric-radius iteration in closed form.  theta = 0 is a
    single application over the full gap; theta >= 1 admits no contraction
    and is rejected.
    """
    if min(A, B, C) < 0:
        raise InvalidInputError("A, B, C must be >= 0")
    if alpha <= 0 or beta <= 0:
        raise InvalidInputError("alpha, beta must be positive")
    if not 0 <= theta < 1:
        raise OutOfRangeError(f"theta must lie in [0, 1), got {theta}")
    if not rho < R:
        raise InvalidInputError("need rho < R")
    gap = R - rho
    if theta == 0:
        bound = A * gap ** (-alpha) + B * gap ** (-beta) + C
        return IterationBound(A, B, C, alpha, beta, theta, rho, R, None, float(bound))

    e = max(alpha, beta)
    lam = (theta ** (1.0 / e) + 1.0) / 2.0
    shrink = (1.0 - lam) * gap
    bound = C / (1.0 - theta)
    if A > 0:
        bound += A * shrink ** (-alpha) / (1.0 - theta * lam ** (-alpha))
    if B > 0:
        bound += B * shrink ** (-beta) / (1.0 - theta * lam ** (-beta))
    return IterationBound(A, B, C, alpha, beta, theta, rho, R, lam, float(bound))


# -- gradient sup and iteration diagnostics ------------------------------------

def sup_gradient(solution: Solution, radius: float) -> float:
    """max |grad_h u| over interior nodes with |x| <= radius."""
    grid = solution.grid
    mask = grid.radius_mask(radius) & grid.interior_mask
    if not np.any(mask):
        raise InvalidInputError(f"no interior node within radius {radius}")
    grad = discrete_gradient(solution.field)
    return float(np.max(np.linalg.norm(grad[mask], axis=-1)))


def moser_iterate_diagnostic(solution: Solution, schedule: MoserSchedule,
                             R0: float, steps: int = 5) -> dict:
    """Measured log Y_n = log( h^2 sum_{|x| <= rho_n} |grad u|^(alpha_n + q) )
    on the shrinking discs rho_n = R0/2 (1 + 2^-n), with the per-step constant
    log C_n = log Y_{n+1} - (2s/2) log(Y_n + 1) implied by the iterate bound.

    Purely diagnostic: the theory's n-independent constant is never
    instantiated, so nothing here is asserted.
    """
    grid = solution.grid
    grad = discrete_gradient(solution.field)
    gnorm = np.linalg.norm(grad, axis=-1)
    half = float(schedule.two_star) / 2.0
    log_h2 = 2.0 * math.log(grid.h)
    log_y = []
    for n_step in range(steps + 1):
        rho_n = R0 / 2.0 * (1.0 + 0.5 ** n_step)
        mask = grid.radius_mask(rho_n) & grid.interior_mask
        expo = float(schedule.alphas[n_step] + schedule.q) if n_step <= schedule.n_max \
            else float(schedule.alpha_closed_form(n_step) + schedule.q)
        g = gnorm[mask]
        pos = g[g > 0]
        if pos.size == 0:
            log_y.append(-math.inf)
            continue
        log_y.append(log_h2 + float(logsumexp(expo * np.log(pos))))
    log_c = []
    for n_step in range(steps):
        yn = log_y[n_step]
        log_plus_one = yn + math.log1p(math.exp(-yn)) if yn > 0 else math.log1p(math.exp(yn))
        log_c.append(log_y[n_step + 1] - half * log_plus_one)
    return {"log_y": log_y, "log_c_fit": log_c}
