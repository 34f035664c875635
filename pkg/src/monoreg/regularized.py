"""Solve the shifted equation F(V) + a V = f_delta and expose its
residual/size functions.

For monotone continuous F the shifted equation has a unique solution for
every right-hand side and every a > 0.  On top of the solver this module
provides the two scalar functions of the shift,

    psi(a) = ||V_a||          (non-increasing in a)
    phi(a) = a * psi(a)       (strictly increasing, bounded by ||F(0)-f||)

whose monotone structure is what makes residual-matching parameter choice
a one-dimensional root-finding problem.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import HilbertVector, NonlinearOperator, solve_shifted
from .errors import BudgetExceeded, NoDerivative, NonConvergence, NoRoot

MAX_NEWTON = 200
MAX_RELAX = 10_000
LINE_SEARCH_FLOOR = 1e-4


@dataclass(frozen=True)
class RegularizedSolution:
    """A solution of F(V) + a V = f_delta to a stated residual tolerance."""

    V: HilbertVector
    a: float
    residual: float
    inner_iterations: int


def default_tol(a: float, f_delta: HilbertVector) -> float:
    """Inner tolerance tied to the natural residual scale a * ||V||."""
    return max(1e-12, 1e-4 * a * f_delta.norm())


def solve_regularized(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    a: float,
    tol: float | None = None,
    warm_start: HilbertVector | None = None,
) -> RegularizedSolution:
    """Solve F(V) + a V = f_delta to ||F(V) + a V - f_delta|| <= tol.

    Damped Newton with a backtracking line search on the defect norm when
    a derivative is available; otherwise fixed-point relaxation with step
    1 / (M1 + 2 a) from the declared bounds.  Uniqueness of the solution
    makes the result warm-start independent (up to the tolerance).
    """
    if a <= 0:
        raise ValueError("shift a must be positive")
    if tol is None:
        tol = default_tol(a, f_delta)
    if tol <= 0:
        raise ValueError("tol must be positive")
    V = warm_start if warm_start is not None else HilbertVector.zeros(f_delta.weights)

    if F.has_derivative:
        return _newton(F, f_delta, a, tol, V)
    return _relaxation(F, f_delta, a, tol, V)


def _defect(F, f_delta, a, V):
    return F(V) + a * V - f_delta


def _newton(F, f_delta, a, tol, V) -> RegularizedSolution:
    G = _defect(F, f_delta, a, V)
    ng = G.norm()
    for it in range(MAX_NEWTON):
        if ng <= tol:
            return RegularizedSolution(V, a, ng, it)
        direction = solve_shifted(F.deriv(V), a, G, tol=1e-10)
        s = 1.0
        while s >= LINE_SEARCH_FLOOR:
            V_try = V - s * direction
            G_try = _defect(F, f_delta, a, V_try)
            ng_try = G_try.norm()
            if ng_try < ng:
                V, G, ng = V_try, G_try, ng_try
                break
            s *= 0.5
        else:
            raise NonConvergence(
                f"line search stalled at defect {ng:g} (tol {tol:g}); "
                "the operator may violate its monotonicity contract or the "
                "tolerance is below the conditioning floor"
            )
    raise NonConvergence(
        f"no convergence in {MAX_NEWTON} damped Newton steps "
        f"(defect {ng:g}, tol {tol:g})"
    )


def _relaxation(F, f_delta, a, tol, V) -> RegularizedSolution:
    if F.bounds is None:
        raise NoDerivative(
            "derivative-free solve needs declared bounds (m1) for its step size"
        )
    s = 1.0 / (F.bounds.m1 + 2.0 * a)
    for it in range(MAX_RELAX):
        G = _defect(F, f_delta, a, V)
        ng = G.norm()
        if ng <= tol:
            return RegularizedSolution(V, a, ng, it)
        V = V - s * G
    raise NonConvergence(
        f"no convergence in {MAX_RELAX} relaxation steps (defect {ng:g}, tol {tol:g})"
    )


def phi_psi(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    a: float,
    tol: float | None = None,
    warm_start: HilbertVector | None = None,
) -> tuple[float, float]:
    """Return (phi, psi) = (a * ||V_a||, ||V_a||) at the shift a.

    At the exact solution phi equals the data residual ||F(V_a) - f_delta||;
    with an inexact inner solve the two agree within the inner tolerance.
    """
    sol = solve_regularized(F, f_delta, a, tol=tol, warm_start=warm_start)
    psi = sol.V.norm()
    return a * psi, psi


def bracket_for_target(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    target: float,
    a_init: float,
    tol: float | None = None,
    max_doublings: int = 200,
) -> tuple[float, float]:
    """Geometric bracket (a_lo, a_hi] with phi(a_lo) < target <= phi(a_hi).

    phi is strictly increasing in a and tends to ||F(0) - f_delta|| from
    below, so a target at or above that ceiling has no root (NoRoot) and
    any smaller positive target brackets after finitely many doublings.
    """
    lo, hi, _, _ = _bracket_search(F, f_delta, target, a_init, tol, max_doublings)
    return lo, hi


def _bracket_search(F, f_delta, target, a_init, tol, max_doublings):
    """As bracket_for_target, also returning (evaluations, last solution)."""
    if target <= 0:
        raise ValueError("target must be positive")
    if a_init <= 0:
        raise ValueError("a_init must be positive")
    zero = HilbertVector.zeros(f_delta.weights)
    ceiling = (F(zero) - f_delta).norm()
    if target >= ceiling:
        raise NoRoot(
            f"target {target:g} is not attainable: phi is bounded above by "
            f"||F(0) - f_delta|| = {ceiling:g}"
        )

    a = a_init
    warm = None
    evals = 0

    def phi_at(x, warm):
        nonlocal evals
        evals += 1
        sol = solve_regularized(F, f_delta, x, tol=tol, warm_start=warm)
        return x * sol.V.norm(), sol.V

    p, warm = phi_at(a, warm)
    if p >= target:
        # contract downward until phi drops below the target
        for _ in range(max_doublings):
            a_hi, a = a, a / 2.0
            p, warm = phi_at(a, warm)
            if p < target:
                return a, a_hi, evals, warm
        raise BudgetExceeded(
            f"no lower bracket endpoint after {max_doublings} halvings"
        )
    for _ in range(max_doublings):
        a_lo, a = a, a * 2.0
        p, warm = phi_at(a, warm)
        if p >= target:
            return a_lo, a, evals, warm
    raise BudgetExceeded(f"no upper bracket endpoint after {max_doublings} doublings")
