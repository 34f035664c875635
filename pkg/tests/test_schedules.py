import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monoreg import (
    ConstraintViolated,
    ValidationParams,
    find_continuous,
    find_discrete,
    make_continuous,
    make_discrete,
    validate_conditions,
)
from monoreg.schedules import (
    GRADIENT_FLOW,
    GRADIENT_ITER,
    NEWTON_FLOW,
    NEWTON_ITER,
    SIMPLE_FLOW,
    SIMPLE_ITER,
)


# ------------------------------------------------------------- construction


def test_newton_flow_accepts_strict_decay_margin():
    s = make_continuous(NEWTON_FLOW, b=1.0, c=7.0, d=10.0)
    assert s.a(0.0) == pytest.approx(10.0 / 7.0)


def test_newton_flow_rejects_small_c():
    with pytest.raises(ConstraintViolated) as info:
        make_continuous(NEWTON_FLOW, b=1.0, c=5.0, d=10.0)
    assert info.value.margin == pytest.approx(-1.0)


def test_newton_flow_boundary_is_rejected_with_note():
    with pytest.raises(ConstraintViolated) as info:
        make_continuous(NEWTON_FLOW, b=1.0, c=6.0, d=10.0)
    assert info.value.margin == 0.0
    assert "boundary" in info.value.note


def test_gradient_flow_product_condition():
    # d**2 * c**(1 - 2b) = 1.69 >= 6b = 1.5
    s = make_continuous(GRADIENT_FLOW, b=0.25, c=1.0, d=1.3)
    assert s.kind == GRADIENT_FLOW
    with pytest.raises(ConstraintViolated):
        make_continuous(GRADIENT_FLOW, b=0.25, c=1.0, d=1.2)


def test_simple_flow_product_condition():
    make_continuous(SIMPLE_FLOW, b=0.5, c=1.0, d=3.0)
    with pytest.raises(ConstraintViolated):
        make_continuous(SIMPLE_FLOW, b=0.5, c=1.0, d=2.9)


def test_exponent_ranges_per_kind():
    with pytest.raises(ConstraintViolated):
        make_continuous(GRADIENT_FLOW, b=0.3, c=1.0, d=10.0)
    with pytest.raises(ConstraintViolated):
        make_continuous(SIMPLE_FLOW, b=0.6, c=1.0, d=10.0)
    with pytest.raises(ConstraintViolated):
        make_discrete(SIMPLE_ITER, b=0.6, d_or_c=1.0, d0=1.0)


def test_discrete_ratio_boundary():
    s = make_discrete(NEWTON_ITER, b=1.0, d_or_c=1.0, d0=5.0)
    assert s.a(0) / s.a(1) == pytest.approx(2.0)
    with pytest.raises(ConstraintViolated):
        make_discrete(NEWTON_ITER, b=1.0, d_or_c=0.5, d0=5.0)


def test_benchmark_heuristic_scale():
    from monoreg.bench import schedule_scale

    d0 = schedule_scale(4.0, 0.01)
    assert d0 == pytest.approx(0.0418853, abs=1e-6)
    s = make_discrete(NEWTON_ITER, b=1.0, d_or_c=1.0, d0=d0)
    assert s.a(0) == pytest.approx(d0)


# ------------------------------------------------------------- closed forms


@given(
    st.sampled_from([NEWTON_FLOW, GRADIENT_FLOW, SIMPLE_FLOW]),
    st.floats(min_value=0.05, max_value=1.0),
    st.floats(min_value=7.0, max_value=50.0),
    st.floats(min_value=3.0, max_value=50.0),
)
@settings(max_examples=100)
def test_schedule_positive_decreasing_and_derivative_exact(kind, b, c, d):
    from monoreg.schedules import _B_MAX

    b = min(b, _B_MAX[kind])
    s = make_continuous(kind, b, c, d)
    t = np.geomspace(1e-3, 1e4, 64)
    a = s.a(t)
    assert np.all(a > 0)
    assert np.all(np.diff(s.a(np.sort(np.concatenate([[0.0], t])))) < 0)
    # step proportional to c + t balances truncation against cancellation
    h = 1e-6 * (s.c + t)
    fd = (s.a(t + h) - s.a(t - h)) / (2.0 * h)
    assert np.allclose(s.a_dot(t), fd, rtol=1e-8, atol=1e-16)


@given(
    st.sampled_from([NEWTON_ITER, GRADIENT_ITER, SIMPLE_ITER]),
    st.floats(min_value=0.05, max_value=1.0),
    st.floats(min_value=1.0, max_value=40.0),
    st.floats(min_value=0.1, max_value=20.0),
)
@settings(max_examples=100)
def test_discrete_ratio_bound_holds(kind, b, d_or_c, d0):
    from monoreg.schedules import _B_MAX

    b = min(b, _B_MAX[kind])
    s = make_discrete(kind, b, d_or_c, d0)
    n = np.arange(200)
    a = s.a(n)
    assert np.all(a[:-1] <= 2.0 * a[1:])
    assert np.all(np.diff(a) < 0)


# ---------------------------------------------------------------- validation


def _params(**overrides):
    defaults = dict(
        m1=2.0,
        c0=1.0,
        c1=5.0,
        y_norm=1.0,
        residual0=1.3,
        horizon=1e4,
    )
    defaults.update(overrides)
    return ValidationParams(**defaults)


def test_equality_ratio_condition_passes_at_zero_margin():
    s = make_continuous(NEWTON_FLOW, b=1.0, c=7.0, d=100.0)
    params = _params(lam=2.0, m1=2.0, y_norm=1.0)  # m1 / y_norm == lam
    report = validate_conditions(s, params)
    m1_check = {c.name: c for c in report.checks}["m1_ratio"]
    assert m1_check.satisfied
    assert m1_check.margin == 0.0


def test_newton_flow_bracket_bounded_below():
    # |a'|/a = b/(c+t) <= b/c < 1/6, so the bracket 1 - |a'|/a >= 5/6;
    # the drift condition margin is therefore worst at t = 0
    s = make_continuous(NEWTON_FLOW, b=1.0, c=7.0, d=200.0)
    t = np.concatenate([[0.0], np.geomspace(1e-6, 1e4, 1000)])
    ratio = np.abs(s.a_dot(t)) / s.a(t)
    assert ratio.max() == pytest.approx(1.0 / 7.0)
    assert ratio.max() < 1.0 / 6.0
    report = validate_conditions(s, _params(lam=2.0))
    drift = {c.name: c for c in report.checks}["drift_term"]
    assert drift.satisfied and drift.margin > 0


def test_simple_flow_decay_rate_example():
    # |a'| <= a^2 / 2 iff b <= (d/2) (c+t)^(1-b); the ratio is tightest at
    # t = 0, where the two sides are 1.5 and 4.5
    s = make_continuous(SIMPLE_FLOW, b=0.5, c=1.0, d=3.0)
    assert abs(s.a_dot(0.0)) == pytest.approx(1.5)
    assert s.a(0.0) ** 2 / 2.0 == pytest.approx(4.5)
    report = validate_conditions(
        s, _params(lam=4.0, m1=2.0, y_norm=1.0, residual0=1.0)
    )
    decay = {c.name: c for c in report.checks}["decay_rate"]
    assert decay.satisfied and decay.margin > 0


def test_search_finds_newton_flow_scale():
    result = find_continuous(NEWTON_FLOW, b=1.0, c=7.0, params=_params())
    assert result.report.passed
    # the certified schedule re-validates with the parameters used
    again = validate_conditions(
        result.schedule, _params(lam=result.lam)
    )
    assert again.passed


def test_search_finds_discrete_scales():
    newton = find_discrete(NEWTON_ITER, b=1.0, d_or_c=1.0, params=_params())
    assert newton.report.passed
    gradient = find_discrete(
        GRADIENT_ITER,
        b=0.25,
        d_or_c=1.0,
        params=_params(alpha_tilde=1e-3),
    )
    assert gradient.report.passed
    simple = find_discrete(
        SIMPLE_ITER,
        b=0.5,
        d_or_c=1.0,
        params=_params(alpha_tilde=1e-2),
    )
    assert simple.report.passed


def test_gradient_flow_conditions_at_example_point():
    s = make_continuous(GRADIENT_FLOW, b=0.25, c=1.0, d=1.3)
    # decay_rate: |a'| <= a^3/4 iff d^2 (c+t)^(1/2) >= 1; holds since d > 1
    report = validate_conditions(
        s,
        _params(m1=0.05, c0=0.05, c1=0.05, residual0=0.5, y_norm=1.0,
                lam=0.5, g0=0.1),
    )
    decay = {c.name: c for c in report.checks}["decay_rate"]
    assert decay.satisfied
