"""Closed-form optimal solution of the periodic cheap-control problem.

The minimiser of integral(u dt) over T-periodic trajectories of x'' = -u x
normalised by x(0) = x(T) = 1 is bang-bang with exactly two switchings:
high control on [0, t1] and [T - t1, T], low control in between.  The
switch time t1 determines the period through

    T(t1) = (1/omega_min) * log((1 + r)/(1 - r)) + 2 t1,
    r     = (omega_max/omega_min) * tan(omega_max t1),

a strictly increasing map of (0, t1_inf) onto (0, inf), where
t1_inf = arctan(omega_min/omega_max)/omega_max.  Everything in this module
evaluates that correspondence and the resulting trajectory branches; no
numerical integration is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Frequencies,
    ProblemParams,
    Schedule,
    Segment,
    Trajectory,
    derive_frequencies,
)
from .rootfind import bisect, newton_polish


@dataclass(frozen=True)
class OptimalSolution:
    """Switch time, period and invariants of one optimal teardrop."""

    params: ProblemParams
    switch_time: float
    period: float
    hyperbole_constant: float
    cost: float


@dataclass(frozen=True)
class TurnpikeLimits:
    """Large-period limits of the optimal solution family.

    corner_(x|y) is the accumulation point of the switching corner on the
    unit ellipse; midpoint_asymptote_prefactor is the constant K such that
    x(T/2) ~ K * exp(-omega_min T / 2) as T grows.
    """

    t1_infinity: float
    corner_x: float
    corner_y: float
    midpoint_asymptote_prefactor: float


def switch_time_sup(params: ProblemParams) -> float:
    """Supremum of admissible switch times, arctan(omega_min/omega_max)/omega_max."""
    fr = derive_frequencies(params)
    return math.atan2(fr.omega_min, fr.omega_max) / fr.omega_max


def _check_switch_time(t1: float, params: ProblemParams) -> Frequencies:
    sup = switch_time_sup(params)
    if not (0.0 < t1 < sup):
        raise ValueError(
            f"switch time must lie in (0, {sup:.6g}) for these bounds, got {t1}"
        )
    return derive_frequencies(params)


def period_from_switch(t1: float, params: ProblemParams) -> float:
    """Period of the optimal solution whose switch time is t1."""
    fr = _check_switch_time(t1, params)
    r = (fr.omega_max / fr.omega_min) * math.tan(fr.omega_max * t1)
    # log((1+r)/(1-r)) = 2 artanh(r); log1p keeps the 1 - r endpoint sharp.
    return (math.log1p(r) - math.log1p(-r)) / fr.omega_min + 2.0 * t1


def period_derivative(t1: float, params: ProblemParams) -> float:
    """dT/dt1 along the switch-period correspondence (always positive)."""
    fr = _check_switch_time(t1, params)
    k = (fr.omega_max / fr.omega_min) ** 2
    tan2 = math.tan(fr.omega_max * t1) ** 2
    return 2.0 * (1.0 + k) / (1.0 - k * tan2)


def switch_from_period(T: float, params: ProblemParams) -> float:
    """Invert T(t1); valid for any T > 0, including very large periods.

    Solved as the root of

        g(t1) = (omega_max/omega_min) tan(omega_max t1)
                - tanh(omega_min (T - 2 t1) / 2)

    which is the same relation with the logarithm folded into tanh: g is
    increasing, bracketed on (0, min(T/2, t1_sup)), and stays finite for
    periods far beyond the overflow range of exp(omega_min T).
    """
    if not (T > 0.0 and math.isfinite(T)):
        raise ValueError(f"period must be positive and finite, got {T}")
    fr = derive_frequencies(params)
    ratio = fr.omega_max / fr.omega_min

    def g(t1: float) -> float:
        return ratio * math.tan(fr.omega_max * t1) - math.tanh(
            0.5 * fr.omega_min * (T - 2.0 * t1))

    def dg(t1: float) -> float:
        sech2 = 1.0 / math.cosh(0.5 * fr.omega_min * (T - 2.0 * t1)) ** 2
        return (ratio * fr.omega_max / math.cos(fr.omega_max * t1) ** 2
                + fr.omega_min * sech2)

    hi = min(0.5 * T, switch_time_sup(params) * (1.0 - 1e-15))
    lo = hi * 1e-18
    if g(hi) <= 0.0:
        # tanh saturated to 1: T is so large that t1 equals the supremum
        # to machine precision, and hi is already the rounded answer.
        return hi
    root = bisect(g, lo, hi, xtol=0.0)
    return newton_polish(g, dg, root, lo, hi)


def hyperbole_constant(t1: float, params: ProblemParams) -> float:
    """Invariant c with x^2 - y^2/omega_min^2 = c on the low-control arc."""
    fr = _check_switch_time(t1, params)
    k = (fr.omega_max / fr.omega_min) ** 2
    c = math.cos(fr.omega_max * t1) ** 2 * (1.0 - k * math.tan(fr.omega_max * t1) ** 2)
    return c


def optimal_cost(t1: float, params: ProblemParams) -> float:
    """Control area of the optimal solution, 2 t1 u_max + (T - 2 t1) u_min < 0."""
    _check_switch_time(t1, params)
    T = period_from_switch(t1, params)
    return 2.0 * t1 * params.u_max + (T - 2.0 * t1) * params.u_min


def optimal_schedule(t1: float, T: float, params: ProblemParams) -> Schedule:
    """Bang-bang schedule [t1 @ u_max | T - 2 t1 @ u_min | t1 @ u_max]."""
    if not 2.0 * t1 < T:
        raise ValueError(f"need 2 t1 < T, got t1 = {t1}, T = {T}")
    return Schedule((
        Segment(t1, params.u_max),
        Segment(T - 2.0 * t1, params.u_min),
        Segment(t1, params.u_max),
    ))


def solve_for_period(T: float, params: ProblemParams) -> OptimalSolution:
    t1 = switch_from_period(T, params)
    return OptimalSolution(
        params=params,
        switch_time=t1,
        period=T,
        hyperbole_constant=hyperbole_constant(t1, params),
        cost=optimal_cost(t1, params),
    )


def _branch_values(t: float, t1: float, T: float, fr: Frequencies) -> tuple[float, float]:
    """(x, y) of the optimal trajectory at time t from the three closed forms."""
    wx, wn = fr.omega_max, fr.omega_min
    if t <= t1:
        return math.cos(wx * t), -wx * math.sin(wx * t)
    if t >= T - t1:
        return math.cos(wx * (T - t)), wx * math.sin(wx * (T - t))
    ct, st = math.cos(wx * t1), math.sin(wx * t1)
    a = 0.5 * (ct - (wx / wn) * st)
    b = 0.5 * (ct + (wx / wn) * st)
    ep = math.exp(wn * (t - t1))
    em = math.exp(-wn * (t - t1))
    return a * ep + b * em, wn * (a * ep - b * em)


def sample_solution(sol: OptimalSolution, n_samples: int = 512) -> Trajectory:
    """Sample a solved teardrop from its closed forms.

    The switching instants t1 and T - t1 are always among the samples.
    Controls are right-continuous: the sample at a switch carries the level
    that starts there.
    """
    if n_samples < 3:
        raise ValueError(f"need at least 3 samples, got {n_samples}")
    params = sol.params
    fr = derive_frequencies(params)
    t1, T = sol.switch_time, sol.period

    grid = np.linspace(0.0, T, n_samples)
    extra = [t for t in (t1, T - t1)
             if np.min(np.abs(grid - t)) > 1e-12 * max(1.0, T)]
    times = np.sort(np.concatenate([grid, np.asarray(extra)])) if extra else grid

    xs = np.empty_like(times)
    ys = np.empty_like(times)
    for i, t in enumerate(times):
        xs[i], ys[i] = _branch_values(float(t), t1, T, fr)

    controls = np.where((times < t1) | (times >= T - t1), params.u_max, params.u_min)
    controls[-1] = params.u_max

    return Trajectory(times=times, states=np.column_stack([xs, ys]),
                      controls=controls.astype(float), cost=sol.cost)


def optimal_trajectory(T: float, params: ProblemParams,
                       n_samples: int = 512) -> tuple[OptimalSolution, Trajectory]:
    """Solve for period T and sample the result; see `sample_solution`."""
    sol = solve_for_period(T, params)
    return sol, sample_solution(sol, n_samples)


def turnpike_limits(params: ProblemParams) -> TurnpikeLimits:
    fr = derive_frequencies(params)
    span = params.u_max - params.u_min
    t1_inf = switch_time_sup(params)
    prefactor = (2.0 * fr.omega_max / math.hypot(fr.omega_min, fr.omega_max)
                 * math.exp((fr.omega_min / fr.omega_max)
                            * math.atan2(fr.omega_min, fr.omega_max)))
    return TurnpikeLimits(
        t1_infinity=t1_inf,
        corner_x=math.sqrt(params.u_max / span),
        corner_y=-math.sqrt(-params.u_min * params.u_max / span),
        midpoint_asymptote_prefactor=prefactor,
    )
