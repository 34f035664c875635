"""Certified decay bounds from one-sided nonlinear inequalities.

The continuous form is

    dg/dt <= -gamma(t) g + alpha(t) g**p + beta(t),    p > 1,

whose solutions stay below 1/mu(t) whenever the majorant function mu
satisfies a single feasibility inequality and mu(tau0) g(tau0) < 1.  The
discrete form replaces the derivative by a forward difference with steps
h_n.  Because the bound holds for every solution of the inequality, it is
enough to check the extremal equality trajectory, which dominates all of
them; `bound_continuous` and `bound_discrete` do exactly that.
`evolution_norm_bound` applies the continuous bound to the norm of a
dissipative finite-dimensional evolution equation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import HilbertVector, LinearMap
from .errors import BoundViolated, InvalidConfig, PreconditionFailed

N_CONDITION_SAMPLES = 10_000
MU_DOT_STEP = 1e-6


@dataclass(frozen=True)
class ContinuousInequality:
    """Coefficients of the continuous inequality on [tau0, horizon].

    alpha, beta, gamma, mu are closed-form evaluators accepting numpy
    arrays; mu_dot may be given analytically, else a central difference
    with step 1e-6 is used.  alpha and beta must be nonnegative on the
    horizon, mu positive, and p > 1.
    """

    p: float
    alpha: Callable
    beta: Callable
    gamma: Callable
    mu: Callable
    g0: float
    horizon: float
    tau0: float = 0.0
    mu_dot: Callable | None = None

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidConfig("p must exceed 1")
        if self.g0 < 0:
            raise InvalidConfig("g0 must be nonnegative")
        if not self.horizon > self.tau0:
            raise InvalidConfig("horizon must exceed tau0")

    def mu_derivative(self, t):
        if self.mu_dot is not None:
            return self.mu_dot(t)
        h = MU_DOT_STEP
        return (self.mu(t + h) - self.mu(t - h)) / (2.0 * h)


@dataclass(frozen=True)
class DiscreteInequality:
    """Coefficient sequences of the discrete inequality, as equal-length
    arrays indexed n = 0 .. N; the recursion needs 0 < h_n gamma_n < 1."""

    p: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray
    h: np.ndarray
    g0: float

    def __post_init__(self):
        arrays = {}
        for name in ("alpha", "beta", "gamma", "mu", "h"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arrays[name] = arr
            object.__setattr__(self, name, arr)
        sizes = {a.size for a in arrays.values()}
        if len(sizes) != 1 or min(sizes) < 2:
            raise InvalidConfig("coefficient arrays must share a length >= 2")
        if not self.p > 1:
            raise InvalidConfig("p must exceed 1")
        if self.g0 < 0:
            raise InvalidConfig("g0 must be nonnegative")

    @property
    def n_last(self) -> int:
        return self.alpha.size - 1


@dataclass(frozen=True)
class BoundReport:
    """Trajectory of the extremal recursion against the certified bound."""

    passed: bool
    min_margin: float
    margin_at: float
    condition_margins: dict
    grid: np.ndarray
    trajectory: np.ndarray
    bound: np.ndarray

    def to_dict(self, include_trajectory: bool = False) -> dict:
        out = {
            "passed": self.passed,
            "min_margin": self.min_margin,
            "margin_at": self.margin_at,
            "condition_margins": dict(self.condition_margins),
        }
        if include_trajectory:
            out["grid"] = self.grid.tolist()
            out["trajectory"] = self.trajectory.tolist()
            out["bound"] = self.bound.tolist()
        return out


def precondition_margins(
    inst: ContinuousInequality, n_samples: int = N_CONDITION_SAMPLES
) -> dict:
    """Sampled worst margins of the feasibility inequality, the initial
    smallness condition, and sign requirements on the horizon."""
    t = np.linspace(inst.tau0, inst.horizon, n_samples)
    alpha = np.broadcast_to(np.asarray(inst.alpha(t), dtype=float), t.shape)
    beta = np.broadcast_to(np.asarray(inst.beta(t), dtype=float), t.shape)
    gamma = np.broadcast_to(np.asarray(inst.gamma(t), dtype=float), t.shape)
    mu = np.broadcast_to(np.asarray(inst.mu(t), dtype=float), t.shape)
    mud = np.broadcast_to(np.asarray(inst.mu_derivative(t), dtype=float), t.shape)
    lhs = alpha / mu ** inst.p + beta
    rhs = (gamma - mud / mu) / mu
    feas = rhs - lhs
    i = int(np.argmin(feas))
    return {
        "feasibility": float(feas[i]),
        "feasibility_at": float(t[i]),
        "feasibility_scale": float(np.max(np.abs(lhs) + np.abs(rhs))),
        "initial_gap": 1.0 - inst.mu(inst.tau0) * inst.g0,
        "alpha_nonneg": float(np.min(alpha)),
        "beta_nonneg": float(np.min(beta)),
        "mu_positive": float(np.min(mu)),
    }


def _require_continuous_preconditions(margins: dict) -> None:
    if margins["mu_positive"] <= 0:
        raise PreconditionFailed("mu_positive", "horizon", margins["mu_positive"])
    if margins["alpha_nonneg"] < 0:
        raise PreconditionFailed("alpha_nonneg", "horizon", margins["alpha_nonneg"])
    if margins["beta_nonneg"] < 0:
        raise PreconditionFailed("beta_nonneg", "horizon", margins["beta_nonneg"])
    # exact-equality feasibility is admissible; allow roundoff-scale noise
    round_off = 1e-13 * max(margins.get("feasibility_scale", 1.0), 1e-30)
    if margins["feasibility"] < -round_off:
        raise PreconditionFailed(
            "feasibility", margins["feasibility_at"], margins["feasibility"]
        )
    if margins["initial_gap"] <= 0:
        raise PreconditionFailed("initial_gap", "tau0", margins["initial_gap"])


def bound_continuous(
    inst: ContinuousInequality,
    n_steps: int = 20_000,
    n_condition_samples: int = N_CONDITION_SAMPLES,
) -> BoundReport:
    """Verify g(t) < 1/mu(t) along the extremal equality trajectory.

    The equality ODE dg/dt = -gamma g + alpha g**p + beta dominates every
    solution of the inequality pointwise, so a single fixed-step RK4 run
    certifies the family (up to the sampling of the feasibility condition,
    whose worst margin is reported).  Raises PreconditionFailed naming the
    violated hypothesis, or BoundViolated with the first crossing time.
    """
    margins = precondition_margins(inst, n_condition_samples)
    _require_continuous_preconditions(margins)

    dt = (inst.horizon - inst.tau0) / n_steps
    ts = inst.tau0 + dt * np.arange(n_steps + 1)

    def rhs(t, g):
        g = max(g, 0.0)
        return -inst.gamma(t) * g + inst.alpha(t) * g ** inst.p + inst.beta(t)

    g = float(inst.g0)
    traj = np.empty(n_steps + 1)
    traj[0] = g
    for k in range(n_steps):
        t = ts[k]
        k1 = rhs(t, g)
        k2 = rhs(t + 0.5 * dt, g + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, g + 0.5 * dt * k2)
        k4 = rhs(t + dt, g + dt * k3)
        g = max(g + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0, 0.0)
        traj[k + 1] = g
    bound = 1.0 / np.asarray(inst.mu(ts), dtype=float)
    gaps = bound - traj
    i = int(np.argmin(gaps))
    if gaps[i] <= 0:
        first = int(np.argmax(gaps <= 0))
        raise BoundViolated(float(ts[first]), float(traj[first]), float(bound[first]))
    return BoundReport(
        passed=True,
        min_margin=float(gaps[i]),
        margin_at=float(ts[i]),
        condition_margins=margins,
        grid=ts,
        trajectory=traj,
        bound=bound,
    )


def discrete_precondition_margins(inst: DiscreteInequality) -> dict:
    n_last = inst.n_last
    hg = inst.h[:n_last] * inst.gamma[:n_last]
    mu, mun = inst.mu[:n_last], inst.mu[1 : n_last + 1]
    feas = (inst.gamma[:n_last] - (mun - mu) / (mu * inst.h[:n_last])) / mu - (
        inst.alpha[:n_last] / mu ** inst.p + inst.beta[:n_last]
    )
    i = int(np.argmin(feas))
    return {
        "feasibility": float(feas[i]),
        "feasibility_at": i,
        "initial_gap": 1.0 / inst.mu[0] - inst.g0,
        "step_product_low": float(np.min(hg)),
        "step_product_high": float(np.min(1.0 - hg)),
        "mu_growing": float(np.min(mun - mu)),
        "mu_positive": float(np.min(inst.mu)),
        "h_positive": float(np.min(inst.h)),
    }


def bound_discrete(inst: DiscreteInequality) -> BoundReport:
    """Verify g_n <= 1/mu_n along the extremal equality recursion

        g_{n+1} = g_n (1 - h_n gamma_n) + alpha_n h_n g_n**p + h_n beta_n.

    The initial condition admits equality (g0 = 1/mu_0 is allowed); the
    induction then keeps every later iterate at or below the bound.
    """
    margins = discrete_precondition_margins(inst)
    for name in ("mu_positive", "h_positive"):
        if margins[name] <= 0:
            raise PreconditionFailed(name, "sequence", margins[name])
    if margins["mu_growing"] < 0:
        raise PreconditionFailed("mu_growing", "sequence", margins["mu_growing"])
    if margins["step_product_low"] <= 0 or margins["step_product_high"] <= 0:
        raise PreconditionFailed(
            "step_product_in_(0,1)",
            "sequence",
            min(margins["step_product_low"], margins["step_product_high"]),
        )
    if margins["feasibility"] < 0:
        raise PreconditionFailed(
            "feasibility", margins["feasibility_at"], margins["feasibility"]
        )
    if margins["initial_gap"] < 0:
        raise PreconditionFailed("initial_gap", 0, margins["initial_gap"])

    n_last = inst.n_last
    traj = np.empty(n_last + 1)
    traj[0] = inst.g0
    g = float(inst.g0)
    for n in range(n_last):
        g = (
            g * (1.0 - inst.h[n] * inst.gamma[n])
            + inst.alpha[n] * inst.h[n] * max(g, 0.0) ** inst.p
            + inst.h[n] * inst.beta[n]
        )
        traj[n + 1] = g
    bound = 1.0 / inst.mu
    gaps = bound - traj
    i = int(np.argmin(gaps))
    if gaps[i] < 0:
        first = int(np.argmax(gaps < 0))
        raise BoundViolated(first, float(traj[first]), float(bound[first]))
    return BoundReport(
        passed=True,
        min_margin=float(gaps[i]),
        margin_at=float(i),
        condition_margins=margins,
        grid=np.arange(n_last + 1, dtype=float),
        trajectory=traj,
        bound=bound,
    )


def quadratic_case_margins(
    inst: ContinuousInequality, n_samples: int = N_CONDITION_SAMPLES
) -> dict:
    """Worst margins of the split sufficient conditions for p = 2:

        alpha <= (mu / 2) (gamma - mu'/mu)
        beta  <= (1 / (2 mu)) (gamma - mu'/mu)
        mu(tau0) g0 < 1

    Any instance satisfying these also satisfies the general feasibility
    inequality: the two halves sum to exactly (1/mu)(gamma - mu'/mu).
    """
    if inst.p != 2:
        raise InvalidConfig("the split conditions are specific to p = 2")
    t = np.linspace(inst.tau0, inst.horizon, n_samples)
    mu = np.asarray(inst.mu(t), dtype=float)
    bracket = np.asarray(inst.gamma(t), dtype=float) - np.asarray(
        inst.mu_derivative(t), dtype=float
    ) / mu
    alpha_margin = (mu / 2.0) * bracket - np.asarray(inst.alpha(t), dtype=float)
    beta_margin = bracket / (2.0 * mu) - np.asarray(inst.beta(t), dtype=float)
    return {
        "alpha_condition": float(np.min(alpha_margin)),
        "beta_condition": float(np.min(beta_margin)),
        "initial_gap": 1.0 - inst.mu(inst.tau0) * inst.g0,
        "mu_growing": float(np.min(np.asarray(inst.mu_derivative(t), dtype=float))),
    }


@dataclass(frozen=True)
class ComparisonReport:
    """Norm trajectory of an evolution equation against its certified bound."""

    passed: bool
    min_margin: float
    margin_at: float
    max_norm: float
    precondition_margins: dict
    grid: np.ndarray
    norms: np.ndarray
    bound: np.ndarray

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "min_margin": self.min_margin,
            "margin_at": self.margin_at,
            "max_norm": self.max_norm,
            "precondition_margins": dict(self.precondition_margins),
        }


def evolution_norm_bound(
    A: LinearMap,
    h_map: Callable[[float, HilbertVector], HilbertVector],
    forcing: Callable[[float], HilbertVector],
    u0: HilbertVector,
    inst: ContinuousInequality,
    T: float,
    n_steps: int = 20_000,
    n_growth_samples: int = 100,
    seed: int = 0,
) -> ComparisonReport:
    """Certify ||u(t)|| < 1/mu(t) for du/dt = A u + h(t, u) + f(t).

    The norm g = ||u|| of any solution obeys the continuous inequality
    with the instance's coefficients once (i) A is dissipative against
    gamma, (ii) h satisfies the sampled growth condition
    <h(t,u), u> <= alpha(t) ||u||**(1+p), and (iii) beta majorizes ||f||.
    The instance's g0 is replaced by the measured ||u0||.  The equation
    itself is integrated with fixed-step RK4 and the norm is compared
    with the bound at every step.
    """
    inst = ContinuousInequality(
        p=inst.p,
        alpha=inst.alpha,
        beta=inst.beta,
        gamma=inst.gamma,
        mu=inst.mu,
        g0=u0.norm(),
        horizon=T,
        tau0=inst.tau0,
        mu_dot=inst.mu_dot,
    )
    margins = precondition_margins(inst)
    _require_continuous_preconditions(margins)

    t_samples = np.linspace(inst.tau0, T, 200)
    # dissipativity of the quadratic form of A against the largest gamma
    W = np.asarray(A.weights, dtype=float)
    M = A.to_dense()
    S = (W[:, None] * M + M.T * W[:, None].T) / 2.0
    scale = np.sqrt(W)
    sym = S / scale[:, None] / scale[None, :]
    lam_max = float(np.linalg.eigvalsh(sym).max())
    gamma_max = float(np.max(np.asarray(inst.gamma(t_samples), dtype=float)))
    margins["dissipativity"] = -gamma_max - lam_max
    if margins["dissipativity"] < 0:
        raise PreconditionFailed("dissipativity", "operator", margins["dissipativity"])

    # sampled growth condition on the nonlinearity
    rng = np.random.Generator(np.random.PCG64(seed))
    radius = 2.0 / float(np.min(np.asarray(inst.mu(t_samples), dtype=float)))
    growth_margin = np.inf
    for _ in range(n_growth_samples):
        t = rng.uniform(inst.tau0, T)
        v = u0.with_values(rng.standard_normal(u0.size))
        nv = v.norm()
        if nv == 0.0:
            continue
        v = v * (rng.uniform() * radius / nv)
        lhs = h_map(t, v).inner(v)
        rhs = float(inst.alpha(t)) * v.norm() ** (1.0 + inst.p)
        growth_margin = min(growth_margin, rhs - lhs)
    margins["growth"] = float(growth_margin)
    if growth_margin < -1e-12:
        raise PreconditionFailed("growth", "sampled", float(growth_margin))

    forcing_margin = float(
        np.min(
            [
                float(inst.beta(t)) - forcing(float(t)).norm()
                for t in t_samples
            ]
        )
    )
    margins["forcing"] = forcing_margin
    if forcing_margin < -1e-12:
        raise PreconditionFailed("forcing", "sampled", forcing_margin)

    dt = (T - inst.tau0) / n_steps
    ts = inst.tau0 + dt * np.arange(n_steps + 1)

    def rhs_vec(t, u):
        return A(u) + h_map(t, u) + forcing(t)

    u = u0
    norms = np.empty(n_steps + 1)
    norms[0] = u.norm()
    for k in range(n_steps):
        t = float(ts[k])
        k1 = rhs_vec(t, u)
        k2 = rhs_vec(t + 0.5 * dt, u + (0.5 * dt) * k1)
        k3 = rhs_vec(t + 0.5 * dt, u + (0.5 * dt) * k2)
        k4 = rhs_vec(t + dt, u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norms[k + 1] = u.norm()
    bound = 1.0 / np.asarray(inst.mu(ts), dtype=float)
    gaps = bound - norms
    i = int(np.argmin(gaps))
    if gaps[i] <= 0:
        first = int(np.argmax(gaps <= 0))
        raise BoundViolated(float(ts[first]), float(norms[first]), float(bound[first]))
    return ComparisonReport(
        passed=True,
        min_margin=float(gaps[i]),
        margin_at=float(ts[i]),
        max_norm=float(np.max(norms)),
        precondition_margins=margins,
        grid=ts,
        norms=norms,
        bound=bound,
    )


def random_continuous_instance(
    seed: int,
    p_choices: tuple[float, ...] = (1.5, 2.0, 3.0),
    min_margin: float = 1e-9,
    max_draws: int = 500,
) -> ContinuousInequality:
    """Rejection-sample a strictly feasible continuous instance.

    Coefficients are drawn from exponential families and redrawn until the
    sampled feasibility margin is at least min_margin, so the certified
    bound must hold on the instance.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(max_draws):
        p = float(rng.choice(p_choices))
        gamma0 = rng.uniform(0.3, 3.0)
        rho = rng.uniform(0.0, 0.9) * gamma0
        mu0 = rng.uniform(0.2, 5.0)
        horizon = rng.uniform(2.0, 20.0)
        alpha0 = rng.uniform(0.0, 0.9) * mu0 ** (p - 1.0) * (gamma0 - rho)
        sigma_a = rng.uniform(0.0, 2.0)
        beta0 = rng.uniform(0.0, 0.9) * (gamma0 - rho) / mu0
        sigma_b = rng.uniform(0.0, 2.0)
        g0 = rng.uniform(0.0, 0.999) / mu0
        inst = ContinuousInequality(
            p=p,
            alpha=lambda t, a0=alpha0, s=sigma_a: a0 * np.exp(-s * np.asarray(t)),
            beta=lambda t, b0=beta0, s=sigma_b: b0 * np.exp(-s * np.asarray(t)),
            gamma=lambda t, g=gamma0: g * np.ones_like(np.asarray(t, dtype=float)),
            mu=lambda t, m0=mu0, r=rho: m0 * np.exp(r * np.asarray(t)),
            mu_dot=lambda t, m0=mu0, r=rho: r * m0 * np.exp(r * np.asarray(t)),
            g0=g0,
            horizon=horizon,
        )
        m = precondition_margins(inst, n_samples=2000)
        if m["feasibility"] >= min_margin and m["initial_gap"] >= min_margin:
            return inst
    raise InvalidConfig(f"no feasible instance within {max_draws} draws (seed {seed})")


def random_discrete_instance(
    seed: int,
    p_choices: tuple[float, ...] = (1.5, 2.0, 3.0),
    min_margin: float = 1e-9,
    max_draws: int = 500,
) -> DiscreteInequality:
    """Rejection-sample a strictly feasible discrete instance."""
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(max_draws):
        p = float(rng.choice(p_choices))
        n_last = int(rng.integers(10, 200))
        gamma0 = rng.uniform(0.3, 3.0)
        h0 = rng.uniform(0.05, 0.95) / gamma0
        # growth rate of mu per step must stay below gamma0 * h0
        r = rng.uniform(0.0, 0.9) * gamma0 * h0
        mu0 = rng.uniform(0.2, 5.0)
        n = np.arange(n_last + 1, dtype=float)
        mu = mu0 * (1.0 + r) ** n
        headroom = (gamma0 - r / h0) / mu
        alpha = rng.uniform(0.0, 0.45) * headroom * mu ** p
        beta = rng.uniform(0.0, 0.45) * headroom
        g0 = rng.uniform(0.0, 1.0) / mu0
        inst = DiscreteInequality(
            p=p,
            alpha=alpha,
            beta=beta,
            gamma=gamma0 * np.ones_like(n),
            mu=mu,
            h=h0 * np.ones_like(n),
            g0=g0,
        )
        m = discrete_precondition_margins(inst)
        if (
            m["feasibility"] >= min_margin
            and m["initial_gap"] >= 0.0
            and m["step_product_low"] > 0
            and m["step_product_high"] > 0
        ):
            return inst
    raise InvalidConfig(f"no feasible instance within {max_draws} draws (seed {seed})")
