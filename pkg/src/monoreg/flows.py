"""The three continuation flows with a-posteriori residual stopping.

Each flow integrates a Cauchy problem whose right-hand side is built from
the shifted defect G(u, t) = F(u) + a(t) u - f_delta:

    newton    du/dt = -(F'(u) + a I)^{-1} G
    gradient  du/dt = -(F'(u) + a I)*  G
    simple    du/dt = -G                       (derivative-free)

The trajectory tracks the regularized path V(t) while a(t) decays, and
integration stops at the first time the data residual ||F(u) - f_delta||
falls to C1 * delta**zeta.  The integrator is adaptive explicit Euler
controlled by residual decrease: a step is accepted iff the data
residual does not increase (beyond 1e-12 relative), halved otherwise,
and doubled after five straight acceptances up to step_max.  Along the
tracked path the residual equals the strictly decreasing phi(a(t)), so
acceptance is the monotonicity that the stopping rule relies on.  (The
shifted defect is NOT monotone here: a start near the path must first
climb to the drift equilibrium, so controlling on it would stall.)  With
unit step the newton flow's Euler update coincides exactly with the
newton-type iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

from .core import HilbertVector, NonlinearOperator, solve_shifted
from .errors import InvalidConfig, PreconditionFailed
from .regularized import solve_regularized
from .reports import (
    EXHAUSTED_HORIZON,
    STEP_FLOOR,
    STOPPED_BY_DISCREPANCY,
    SolveReport,
)
from .schedules import GRADIENT_FLOW, NEWTON_FLOW, SIMPLE_FLOW, ContinuousSchedule

RESIDUAL_SLACK = 1e-12  # relative residual increase tolerated before halving
DOUBLE_AFTER = 5  # accepted steps between step doublings


@dataclass(frozen=True)
class FlowConfig:
    """Stopping constants, schedule, and integrator controls for one flow.

    t_max left as None resolves to the time at which delta / a(t) reaches
    y_norm / (C - 1) with C = (C1 + 1) / 2 when y_norm is given (stopping
    is guaranteed before that), else to 1e6.
    """

    schedule: ContinuousSchedule
    C1: float = 1.5
    zeta: float = 0.9
    step_init: float = 0.1
    step_min: float = 1e-8
    step_max: float = 1.0
    t_max: float | None = None
    inner_tol: float = 1e-10
    y_norm: float | None = None
    refine_rtol: float = 1e-3
    keep_iterates: bool = False

    def __post_init__(self):
        if not self.C1 > 1:
            raise InvalidConfig("C1 must exceed 1")
        if not 0 < self.zeta <= 1:
            raise InvalidConfig("zeta must lie in (0, 1]")
        if not 0 < self.step_min <= self.step_init <= self.step_max:
            raise InvalidConfig("need 0 < step_min <= step_init <= step_max")

    def threshold(self, delta: float) -> float:
        return self.C1 * delta ** self.zeta

    def resolve_t_max(self, delta: float) -> float:
        if self.t_max is not None:
            return self.t_max
        if self.y_norm is not None:
            C = (self.C1 + 1.0) / 2.0
            a_end = delta * (C - 1.0) / self.y_norm
            t_end = self.schedule.time_for_level(a_end)
            if t_end > 0:
                return t_end
        return 1e6


def init_u0(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    a0: float,
    zero: bool = False,
    defect_fraction: float = 0.2,
) -> HilbertVector:
    """A starting point compatible with the flows' smallness condition.

    Returns an approximate solution of the shifted equation at a0 whose
    defect sits near defect_fraction * a0 * ||V(0)|| (and never above the
    admissible quarter level).  Starting *at* that level rather than on
    the path itself matters in practice: the flows track a moving target,
    and a start with a near-zero defect must first fall behind before it
    can follow, which shows up as a transient residual rise.  With
    zero=True returns the zero vector instead, after certifying the start
    bound ||V(0)|| <= ||F(0) - f_delta|| / a0 that a zero start satisfies.
    """
    if a0 <= 0:
        raise ValueError("a0 must be positive")
    if not 0 < defect_fraction <= 0.25:
        raise ValueError("defect_fraction must lie in (0, 0.25]")
    sol = solve_regularized(F, f_delta, a0)
    psi = sol.V.norm()
    if zero:
        z = HilbertVector.zeros(f_delta.weights)
        cap = (F(z) - f_delta).norm() / a0
        if psi > cap * (1.0 + 1e-9):
            raise PreconditionFailed("zero_start_bound", a0, cap - psi)
        return z
    bound = 0.25 * a0 * psi
    if sol.residual > bound:
        sol = solve_regularized(F, f_delta, a0, tol=0.5 * bound, warm_start=sol.V)
        psi = sol.V.norm()
    target = defect_fraction * a0 * psi
    if sol.residual >= 0.5 * target or psi == 0.0:
        return sol.V
    # nudge backward along V to land the defect near the target level; a
    # slightly shrunk V sits where the path was at a larger shift, so its
    # data residual starts above the path level and decays from there
    e = -1.0 * (sol.V / psi)
    probe = 1e-6 * max(psi, 1.0)
    slope = ((F(sol.V + probe * e) - F(sol.V)) / probe + a0 * e).norm()
    r = target / max(slope, 1e-30)
    for _ in range(60):
        u0 = sol.V + r * e
        defect = (F(u0) + a0 * u0 - f_delta).norm()
        if defect <= bound:
            return u0
        r *= 0.5
    return sol.V


def flow_newton(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    delta: float,
    cfg: FlowConfig,
    u0: HilbertVector,
) -> SolveReport:
    """Integrate the derivative-inverting flow; one shifted solve per step."""
    _require_kind(cfg, NEWTON_FLOW)

    def direction(u, a, G):
        return solve_shifted(F.deriv(u), a, G, tol=cfg.inner_tol)

    return _integrate(F, f_delta, delta, cfg, u0, direction)


def flow_gradient(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    delta: float,
    cfg: FlowConfig,
    u0: HilbertVector,
) -> SolveReport:
    """Integrate the adjoint-times-defect flow.

    The stopping time need not be unique for this variant; the first
    crossing is returned.  Steps are capped at the explicit-Euler
    stability limit 2 / (M1 + a)**2 of the composed operator (with some
    margin) when bounds are declared; beyond it the fast modes of the
    defect alternate in sign and residual control stalls.
    """
    _require_kind(cfg, GRADIENT_FLOW)

    def direction(u, a, G):
        return F.deriv(u).adjoint_apply(G) + a * G

    cap = None
    if F.bounds is not None:
        a0 = float(cfg.schedule.a(0.0))
        cap = 1.5 / (F.bounds.m1 + a0) ** 2
    return _integrate(F, f_delta, delta, cfg, u0, direction, step_cap=cap)


def flow_simple(
    F: NonlinearOperator,
    f_delta: HilbertVector,
    delta: float,
    cfg: FlowConfig,
    u0: HilbertVector,
) -> SolveReport:
    """Integrate the defect flow; neither derivative nor solve is needed.

    Steps are capped at the stability limit 2 / (M1 + a) with margin when
    bounds are declared.
    """
    _require_kind(cfg, SIMPLE_FLOW)
    cap = None
    if F.bounds is not None:
        a0 = float(cfg.schedule.a(0.0))
        cap = 1.5 / (F.bounds.m1 + a0)
    return _integrate(F, f_delta, delta, cfg, u0, lambda u, a, G: G,
                      step_cap=cap)


def _require_kind(cfg: FlowConfig, kind: str) -> None:
    if cfg.schedule.kind != kind:
        raise InvalidConfig(
            f"schedule kind {cfg.schedule.kind!r} does not match this flow "
            f"(expected {kind!r})"
        )


def _integrate(F, f_delta, delta, cfg, u0, direction,
               step_cap: float | None = None) -> SolveReport:
    if delta <= 0:
        raise InvalidConfig("delta must be positive")
    sched = cfg.schedule
    thresh = cfg.threshold(delta)
    t_max = cfg.resolve_t_max(delta)
    step_max = cfg.step_max if step_cap is None else min(cfg.step_max, step_cap)

    F_u = F(u0)
    res = (F_u - f_delta).norm()
    history = [(0.0, res)]
    iterates = [u0] if cfg.keep_iterates else None
    if res <= thresh:
        return _report(u0, STOPPED_BY_DISCREPANCY, sched.a(0.0), thresh,
                       0.0, history, iterates)

    t = 0.0
    u = u0
    h = min(cfg.step_init, step_max)
    streak = 0
    while t < t_max:
        # one direction evaluation per state, reused across halved retries
        G = F_u + sched.a(t) * u - f_delta
        d = direction(u, sched.a(t), G)
        accepted = False
        while not accepted:
            h_step = min(h, t_max - t)
            u_try = u - h_step * d
            F_try = F(u_try)
            res_try = (F_try - f_delta).norm()
            if res_try <= res * (1.0 + RESIDUAL_SLACK):
                accepted = True
            else:
                h = h_step * 0.5
                streak = 0
                if h < cfg.step_min:
                    return _report(u, STEP_FLOOR, sched.a(t), thresh, t,
                                   history, iterates)
        if res_try <= thresh:
            t_stop, u_stop, res_stop = _refine_crossing(
                F, f_delta, thresh, u, d, t, h_step, cfg.refine_rtol
            )
            history.append((t_stop, res_stop))
            if iterates is not None:
                iterates.append(u_stop)
            return _report(u_stop, STOPPED_BY_DISCREPANCY, sched.a(t_stop),
                           thresh, t_stop, history, iterates)
        t, u, F_u, res = t + h_step, u_try, F_try, res_try
        history.append((t, res))
        if iterates is not None:
            iterates.append(u)
        streak += 1
        if streak >= DOUBLE_AFTER:
            h = min(2.0 * h, step_max)
            streak = 0
    return _report(u, EXHAUSTED_HORIZON, sched.a(t), thresh, t, history,
                   iterates)


def _refine_crossing(F, f_delta, thresh, u_prev, d, t_prev, h, rtol):
    """Bisect the crossing step to locate the stop time within rtol
    relative; the substate u(s) = u_prev - s d stays on the Euler segment."""
    lo, hi = 0.0, h
    u_hi = u_prev - hi * d
    res_hi = (F(u_hi) - f_delta).norm()
    while hi - lo > rtol * max(t_prev + hi, 1e-30):
        mid = 0.5 * (lo + hi)
        u_mid = u_prev - mid * d
        res_mid = (F(u_mid) - f_delta).norm()
        if res_mid <= thresh:
            hi, u_hi, res_hi = mid, u_mid, res_mid
        else:
            lo = mid
    return t_prev + hi, u_hi, res_hi


def _report(u, status, a_at, thresh, t_stop, history, iterates) -> SolveReport:
    return SolveReport(
        u_final=u,
        status=status,
        a_at_stop=float(a_at),
        threshold=thresh,
        t_stop=t_stop,
        residual_history=tuple(history),
        iterates=None if iterates is None else tuple(iterates),
    )
