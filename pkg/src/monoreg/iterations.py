"""Discrete counterparts of the flows, with the same stopping rule.

    newton    u_{n+1} = u_n - (F'(u_n) + a_n I)^{-1} G_n
    gradient  u_{n+1} = u_n - alpha_n (F'(u_n) + a_n I)* G_n
    simple    u_{n+1} = u_n - alpha_n G_n

with G_n = F(u_n) + a_n u_n - f_delta.  Iterations stop at the first
iterate whose data residual is at or below C1 * delta**e (ties accepted);
the gradient and simple variants take damped steps inside the stability
band [alpha_tilde, 2 / (a_n^2 + (M1 + a_n)^2)] respectively
[alpha_tilde, 2 / (M1 + 2 a_n)], defaulting to the band's upper endpoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import HilbertVector, LinearMap, NonlinearOperator, solve_shifted
from .errors import HorizonExceeded, InvalidConfig, InvalidStepSize
from .reports import EXHAUSTED_HORIZON, STOPPED_BY_DISCREPANCY, SolveReport
from .schedules import (
    GRADIENT_ITER,
    NEWTON_ITER,
    SIMPLE_ITER,
    DiscreteSchedule,
)

DEFAULT_N_MAX = 100_000


@dataclass(frozen=True)
class IterConfig:
    """Stopping constants, schedule, and step-size rule for one iteration.

    m1 left as None falls back to the operator's declared bounds, else to
    1.1 times a power-iteration estimate at the start (flagged in the
    report notes).  alpha_rule maps (n, a_n) to a step size and must stay
    inside the band; the default is the band's upper endpoint.  n_max left
    as None resolves to ten times the a-priori stopping estimate when
    y_norm is given, else to 100000.
    """

    schedule: DiscreteSchedule
    C1: float = 1.5
    gamma_or_zeta: float = 0.9
    n_max: int | None = None
    m1: float | None = None
    alpha_rule: Callable[[int, float], float] | None = None
    alpha_floor: float | None = None
    inner_tol: float = 1e-10
    y_norm: float | None = None
    keep_iterates: bool = False

    def __post_init__(self):
        if not self.C1 > 1:
            raise InvalidConfig("C1 must exceed 1")
        if not 0 < self.gamma_or_zeta <= 1:
            raise InvalidConfig("gamma_or_zeta must lie in (0, 1]")

    def threshold(self, delta: float) -> float:
        return self.C1 * delta ** self.gamma_or_zeta

    def resolve_n_max(self, delta: float) -> int:
        if self.n_max is not None:
            return self.n_max
        if self.y_norm is not None:
            C = (self.C1 + 1.0) / 2.0
            a_end = delta * (C - 1.0) / self.y_norm
            # first index whose schedule value is at or below a_end
            n = 0
            while self.schedule.a(n) > a_end and n < DEFAULT_N_MAX:
                n += 1
            return max(10 * (n + 1), 10)
        return DEFAULT_N_MAX


def iter_newton(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    delta: float,
    cfg: IterConfig,
    u0: HilbertVector,
) -> SolveReport:
    """Newton-type iteration; each step is one shifted solve.

    Monotonicity makes the shifted derivative invertible with inverse norm
    at most 1/a_n, so the step length never exceeds ||G_n|| / a_n.
    """
    _require_kind(cfg, NEWTON_ITER)

    def step(u, n, a):
        G = F(u) + a * u - f_delta
        return u - solve_shifted(F.deriv(u), a, G, tol=cfg.inner_tol)

    return _run(F, f_delta, delta, cfg, u0, step, ())


def iter_gradient(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    delta: float,
    cfg: IterConfig,
    u0: HilbertVector,
) -> SolveReport:
    """Gradient-type iteration: adjoint-times-defect steps inside the
    contraction band."""
    _require_kind(cfg, GRADIENT_ITER)
    m1, notes = _resolve_m1(F, cfg, u0)
    band_top = lambda a: 2.0 / (a * a + (m1 + a) ** 2)
    floor = _resolve_floor(cfg, band_top)

    def step(u, n, a):
        alpha = _step_size(cfg, n, a, band_top, floor)
        G = F(u) + a * u - f_delta
        return u - alpha * (F.deriv(u).adjoint_apply(G) + a * G)

    return _run(F, f_delta, delta, cfg, u0, step, notes)


def iter_simple(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    delta: float,
    cfg: IterConfig,
    u0: HilbertVector,
) -> SolveReport:
    """Defect-relaxation iteration; no derivative evaluation at all."""
    _require_kind(cfg, SIMPLE_ITER)
    m1, notes = _resolve_m1(F, cfg, u0)
    band_top = lambda a: 2.0 / (m1 + 2.0 * a)
    floor = _resolve_floor(cfg, band_top)

    def step(u, n, a):
        alpha = _step_size(cfg, n, a, band_top, floor)
        G = F(u) + a * u - f_delta
        return u - alpha * G

    return _run(F, f_delta, delta, cfg, u0, step, notes)


def _require_kind(cfg: IterConfig, kind: str) -> None:
    if cfg.schedule.kind != kind:
        raise InvalidConfig(
            f"schedule kind {cfg.schedule.kind!r} does not match this "
            f"iteration (expected {kind!r})"
        )


def _resolve_m1(F, cfg, u0) -> tuple[float, tuple[str, ...]]:
    if cfg.m1 is not None:
        return cfg.m1, ()
    if F.bounds is not None:
        return F.bounds.m1, ()
    est = 1.1 * operator_norm_estimate(F.deriv(u0))
    return est, (f"m1_estimated={est:.6g}",)


def _resolve_floor(cfg, band_top) -> float:
    if cfg.alpha_floor is not None:
        return cfg.alpha_floor
    # the band top grows as a_n decays, so its smallest value is at n = 0
    return 0.5 * band_top(float(cfg.schedule.a(0)))


def _step_size(cfg, n, a, band_top, floor) -> float:
    top = band_top(a)
    if floor > top:
        raise InvalidStepSize(
            f"empty step band at n={n}: floor {floor:g} exceeds top {top:g} "
            "(m1 mis-specified?)"
        )
    if cfg.alpha_rule is None:
        return top
    alpha = cfg.alpha_rule(n, a)
    if not floor <= alpha <= top:
        raise InvalidStepSize(
            f"alpha_rule({n}) = {alpha:g} outside [{floor:g}, {top:g}]"
        )
    return alpha


def operator_norm_estimate(A: LinearMap, n_iter: int = 50, seed: int = 0) -> float:
    """Power-iteration estimate of the weighted operator norm of A."""
    rng = np.random.Generator(np.random.PCG64(seed))
    v = HilbertVector(rng.standard_normal(A.dimension), A.weights)
    v = v / max(v.norm(), 1e-30)
    sigma = 0.0
    for _ in range(n_iter):
        w = A.adjoint_apply(A(v))
        nw = w.norm()
        if nw == 0.0:
            return 0.0
        sigma = math.sqrt(nw)
        v = w / nw
    return sigma


def _run(F, f_delta, delta, cfg, u0, step, notes) -> SolveReport:
    if delta <= 0:
        raise InvalidConfig("delta must be positive")
    thresh = cfg.threshold(delta)
    n_max = cfg.resolve_n_max(delta)
    sched = cfg.schedule

    res = (F(u0) - f_delta).norm()
    history = [(0.0, res)]
    iterates = [u0] if cfg.keep_iterates else None
    a_last = float(sched.a(0))
    if res <= thresh:
        return _report(u0, STOPPED_BY_DISCREPANCY, a_last, thresh, 0,
                       history, iterates, notes)
    u = u0
    for n in range(n_max):
        a_n = float(sched.a(n))
        u = step(u, n, a_n)
        res = (F(u) - f_delta).norm()
        history.append((float(n + 1), res))
        if iterates is not None:
            iterates.append(u)
        if res <= thresh:
            return _report(u, STOPPED_BY_DISCREPANCY, a_n, thresh, n,
                           history, iterates, notes)
    partial = _report(u, EXHAUSTED_HORIZON, float(sched.a(n_max - 1)), thresh,
                      n_max - 1, history, iterates, notes)
    raise HorizonExceeded(n_max, report=partial)


def _report(u, status, a_at, thresh, n_stop, history, iterates, notes):
    return SolveReport(
        u_final=u,
        status=status,
        a_at_stop=a_at,
        threshold=thresh,
        n_stop=n_stop,
        residual_history=tuple(history),
        iterates=None if iterates is None else tuple(iterates),
        notes=tuple(notes),
    )
