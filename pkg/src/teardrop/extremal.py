"""Normal extremal lifts and shooting for the periodic cheap-control problem.

The unique normal lift of an optimal solution has costate
(p_x, p_y) = p_y(0) * (-y, x) with p_y(0) = -1/lambda < 0 and abnormal
multiplier p0 = -1, so the switching function is

    phi(t) = -p_y(t) x(t) + p0 = x(t)^2 / lambda - 1,

and the extremal control is the feedback law  u = u_max where x^2 > lambda,
u = u_min where x^2 < lambda,  with lambda in (0, 1).  Shooting integrates
that feedback exactly arc by arc (the flows are closed-form) and locates
crossings of x^2 = lambda by bisection in time.

For any lambda the feedback orbit through (1, 0) is a closed curve: a
teardrop that stays in x > 0 when lambda exceeds u_max/(u_max - u_min), and
a figure-of-eight ("butterfly") crossing the y-axis twice per loop below
that threshold.  Matching the loop's period to the horizon T selects
lambda; the butterfly branch only reaches periods above 2 pi / omega_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import OptimalSolution, sample_solution, switch_time_sup
from .core import (
    ProblemParams,
    Schedule,
    Segment,
    State,
    Trajectory,
    derive_frequencies,
    propagate_constant,
    simulate,
)
from .rootfind import bisect

RESIDUAL_TOL = 1e-9
EVENT_TIME_TOL = 1e-12


class ShootingDivergenceError(RuntimeError):
    """The feedback trajectory kept switching past the allowed budget."""


class BracketError(RuntimeError):
    """No sign change found while scanning the shooting parameter grid."""


class NoButterflyError(ValueError):
    """Requested a butterfly below its minimal period 2 pi / omega_max."""


@dataclass(frozen=True)
class ExtremalLift:
    """An optimal trajectory together with its normal costate arc."""

    trajectory: Trajectory
    costate_x: np.ndarray
    costate_y: np.ndarray
    multiplier: float
    switching: np.ndarray
    hamiltonian: np.ndarray
    lam: float


@dataclass(frozen=True)
class ShootingResult:
    lam: float
    residual_x: float
    residual_y: float
    switch_times: tuple[float, ...]
    converged: bool


@dataclass(frozen=True)
class SwitchingReport:
    max_violation: float
    violations: int
    samples_checked: int


def crossing_threshold(params: ProblemParams) -> float:
    """lambda separating teardrop loops from y-axis-crossing butterflies."""
    return params.u_max / (params.u_max - params.u_min)


def lift_from_trajectory(traj: Trajectory, lam: float,
                         params: ProblemParams) -> ExtremalLift:
    """Attach the normal costate arc with parameter lambda to a trajectory."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    px = traj.y / lam
    py = -traj.x / lam
    phi = traj.x ** 2 / lam - 1.0
    ham = px * traj.y + np.maximum(params.u_min * phi, params.u_max * phi)
    return ExtremalLift(
        trajectory=traj,
        costate_x=px,
        costate_y=py,
        multiplier=-1.0,
        switching=phi,
        hamiltonian=ham,
        lam=lam,
    )


def lift_optimal(solution: OptimalSolution, n_samples: int = 512) -> ExtremalLift:
    """Normal lift of the closed-form optimal solution."""
    fr = derive_frequencies(solution.params)
    lam = math.cos(fr.omega_max * solution.switch_time) ** 2
    traj = sample_solution(solution, n_samples)
    return lift_from_trajectory(traj, lam, solution.params)


def switching_sign_consistency(lift: ExtremalLift, tol: float = 1e-9) -> SwitchingReport:
    """Check sign(phi) against the active control level at every sample.

    Samples with |phi| <= tol (the switching instants) are exempt.  Returns
    the largest |phi| observed at a mismatched sample.
    """
    controls = lift.trajectory.controls
    u_hi = float(np.max(controls))
    u_lo = float(np.min(controls))
    phi = lift.switching
    bad_hi = (phi > tol) & (controls != u_hi)
    bad_lo = (phi < -tol) & (controls != u_lo)
    bad = bad_hi | bad_lo
    max_violation = float(np.max(np.abs(phi[bad]))) if np.any(bad) else 0.0
    return SwitchingReport(
        max_violation=max_violation,
        violations=int(np.count_nonzero(bad)),
        samples_checked=len(phi),
    )


def hamiltonian_constancy(lift: ExtremalLift) -> tuple[float, float]:
    """(mean, max |deviation from mean|) of the maximised Hamiltonian."""
    mean = float(np.mean(lift.hamiltonian))
    return mean, float(np.max(np.abs(lift.hamiltonian - mean)))


def _refine_crossing(state: State, level: float, lam: float,
                     lo: float, hi: float, sign_lo: float) -> float:
    """Locate g(tau) = x(tau)^2 - lam = 0 on (lo, hi); g(lo) has sign sign_lo.

    Bisection narrows the bracket, then Newton steps on the exact flow
    (g' = 2 x y) push the crossing to float resolution.  Sub-1e-12 accuracy
    matters here: near the turnpike a switch-time error is amplified by
    exp(omega_min * arc length) before the next event.
    """
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if hi - lo <= EVENT_TIME_TOL or mid == lo or mid == hi:
            break
        s, _ = propagate_constant(state, level, mid)
        g = s.x * s.x - lam
        if g == 0.0:
            return mid
        if math.copysign(1.0, g) == sign_lo:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    s, _ = propagate_constant(state, level, tau)
    g = s.x * s.x - lam
    for _ in range(4):
        dg = 2.0 * s.x * s.y
        if dg == 0.0:
            break
        step = g / dg
        tau_new = tau - step
        if not (lo - (hi - lo) <= tau_new <= hi + (hi - lo)):
            break
        s_new, _ = propagate_constant(state, level, tau_new)
        g_new = s_new.x * s_new.x - lam
        if abs(g_new) >= abs(g):
            break
        tau, s, g = tau_new, s_new, g_new
        if g == 0.0:
            break
    return tau


def _next_crossing(state: State, level: float, lam: float, t_max: float,
                   fr) -> float | None:
    """First tau in (0, t_max] where x^2 crosses lam, or None.

    The arc interior keeps sign(x^2 - lam) = +1 under the high level and -1
    under the low one (that is what the feedback law enforces), so the scan
    looks for the first sample off that sign.
    """
    interior = 1.0 if level > 0.0 else -1.0
    if level > 0.0:
        h = math.pi / math.sqrt(level) / 64.0
    else:
        h = 0.5 / math.sqrt(-level)
    h = min(h, t_max)
    k = 1
    prev = 0.0
    while True:
        tau = min(k * h, t_max)
        s, _ = propagate_constant(state, level, tau)
        g = s.x * s.x - lam
        if g != 0.0 and math.copysign(1.0, g) != interior:
            return _refine_crossing(state, level, lam, prev, tau, interior)
        if tau >= t_max:
            return None
        prev = tau
        k += 1


def _integrate_feedback(lam: float, params: ProblemParams, T: float,
                        max_switches: int,
                        stop_after: int | None = None) -> tuple[State, list[float]]:
    """Run the feedback law from (1, 0) up to time T; exact between events.

    With stop_after set, integration ends as soon as that many switchings
    have been located (used for loop-period probes that only need events).
    """
    fr = derive_frequencies(params)
    state = State(1.0, 0.0)
    level = params.u_max if state.x * state.x >= lam else params.u_min
    t = 0.0
    switches: list[float] = []
    while t < T:
        tau = _next_crossing(state, level, lam, T - t, fr)
        if tau is None:
            state, _ = propagate_constant(state, level, T - t)
            t = T
            break
        state, _ = propagate_constant(state, level, tau)
        t += tau
        switches.append(t)
        if stop_after is not None and len(switches) >= stop_after:
            break
        if len(switches) > max_switches:
            raise ShootingDivergenceError(
                f"more than {max_switches} switchings before t = {T}"
                f" (lambda = {lam})")
        level = params.u_min if level == params.u_max else params.u_max
    return state, switches


def shoot(lam: float, params: ProblemParams, T: float,
          max_switches: int = 64) -> ShootingResult:
    """Integrate the feedback law for parameter lambda over [0, T]."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    if T <= 0.0:
        raise ValueError(f"horizon must be positive, got {T}")
    state, switches = _integrate_feedback(lam, params, T, max_switches)
    rx = state.x - 1.0
    ry = state.y
    return ShootingResult(
        lam=lam,
        residual_x=rx,
        residual_y=ry,
        switch_times=tuple(switches),
        converged=abs(rx) < RESIDUAL_TOL and abs(ry) < RESIDUAL_TOL,
    )


def _loop_period(lam: float, params: ProblemParams, t_cap: float,
                 want_switches: int) -> float:
    """Period of the closed feedback orbit from integrated events.

    By the orbit's time-reversal symmetry the period equals the sum of the
    first and last switch times of one loop (2 switches for a teardrop,
    4 for a butterfly); returns +inf when the loop does not close by t_cap.
    """
    _, switches = _integrate_feedback(lam, params, t_cap,
                                      max_switches=want_switches + 4,
                                      stop_after=want_switches)
    if len(switches) < want_switches:
        return math.inf
    if want_switches == 2:
        return switches[0] + switches[1]
    return switches[1] + switches[2]


def _lift_from_events(lam: float, params: ProblemParams, T: float,
                      n_samples: int, max_switches: int) -> ExtremalLift:
    """Sample the feedback trajectory through its integrated switch times."""
    _, switches = _integrate_feedback(lam, params, T, max_switches)
    bounds = [0.0, *switches, T]
    level = params.u_max  # feedback from (1, 0) always starts high
    segments = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        segments.append(Segment(b - a, level))
        level = params.u_min if level == params.u_max else params.u_max
    traj = simulate(Schedule(tuple(segments)), State(1.0, 0.0),
                    sample_step=T / max(n_samples - 1, 1))
    return lift_from_trajectory(traj, lam, params)


def solve_shooting(T: float, params: ProblemParams, grid_size: int = 64,
                   n_samples: int = 512) -> ExtremalLift:
    """Find lambda whose teardrop orbit has period T, by bracketed bisection.

    The raw terminal mismatch x(T) - 1 never changes sign (the orbit's
    largest x is exactly 1, so the residual only touches zero), hence the
    scan works on the loop-period mismatch from integrated events, which is
    strictly monotone in lambda on the teardrop branch.  The terminal
    residuals of the result are checked against the usual 1e-9 afterwards.
    """
    if T <= 0.0:
        raise ValueError(f"horizon must be positive, got {T}")
    fr = derive_frequencies(params)
    lam_min = crossing_threshold(params)
    t_cap = 32.0 / fr.omega_min + 4.0 * switch_time_sup(params)

    def mismatch(lam: float) -> float:
        return _loop_period(lam, params, t_cap, want_switches=2) - T

    lo = lam_min * (1.0 + 1e-12)
    hi = 1.0 - 1e-9
    grid = np.linspace(lo, hi, grid_size)
    vals = [mismatch(float(g)) for g in grid]
    bracket = None
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0 or (math.copysign(1.0, fa) != math.copysign(1.0, fb)
                         and math.isfinite(fb)):
            bracket = (float(a), float(b))
            break
        if math.isinf(fa) and math.isfinite(fb) and fb < 0.0:
            # period fell from out-of-reach to below T within one cell
            bracket = (float(a), float(b))
            break
    if bracket is None:
        lines = ", ".join(f"{g:.4f}:{v:+.3g}" for g, v in zip(grid, vals))
        raise BracketError(
            f"no period bracket for T = {T} on the lambda grid [{lines}]")

    def signed(lam: float) -> float:
        v = mismatch(lam)
        return 1.0 if math.isinf(v) else v

    lam_star = bisect(signed, bracket[0], bracket[1], xtol=1e-15)
    result = shoot(lam_star, params, T)
    if not result.converged:
        raise BracketError(
            f"shooting did not converge at lambda = {lam_star}: residuals "
            f"({result.residual_x:.2e}, {result.residual_y:.2e})")
    return _lift_from_events(lam_star, params, T, n_samples, max_switches=8)


def find_butterfly(T: float, params: ProblemParams, grid_size: int = 64,
                   n_samples: int = 1025) -> Trajectory:
    """Closed figure-of-eight solution of period T (locally optimal only).

    Exists exactly for T >= 2 pi / omega_max; at the threshold it degenerates
    to the full ellipse x = cos(omega_max t) under constant high control.
    """
    fr = derive_frequencies(params)
    t_min = 2.0 * math.pi / fr.omega_max
    if T < t_min * (1.0 - 1e-12):
        raise NoButterflyError(
            f"butterflies need T >= 2 pi / omega_max = {t_min:.6g}, got {T}")
    if T <= t_min * (1.0 + 1e-9):
        sched = Schedule((Segment(T, params.u_max),))
        return simulate(sched, State(1.0, 0.0), sample_step=T / (n_samples - 1))

    lam_max = crossing_threshold(params)
    t_cap = 32.0 / fr.omega_min + 8.0 * math.pi / fr.omega_max

    def mismatch(lam: float) -> float:
        p = _loop_period(lam, params, t_cap, want_switches=4)
        return p - T if math.isfinite(p) else 1.0

    lo = lam_max * 1e-10
    hi = lam_max * (1.0 - 1e-12)
    grid = np.linspace(lo, hi, grid_size)
    vals = [mismatch(float(g)) for g in grid]
    bracket = None
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0 or math.copysign(1.0, fa) != math.copysign(1.0, fb):
            bracket = (float(a), float(b))
            break
    if bracket is None:
        raise BracketError(f"no butterfly period bracket for T = {T}")
    lam_b = bisect(mismatch, bracket[0], bracket[1], xtol=1e-15)

    lift = _lift_from_events(lam_b, params, T, n_samples, max_switches=8)
    traj = lift.trajectory
    crossings = np.count_nonzero(np.diff(np.sign(traj.x)) != 0)
    if crossings < 2:
        raise BracketError(
            f"feedback orbit at lambda = {lam_b} does not cross x = 0")
    if abs(traj.x[-1] - 1.0) > RESIDUAL_TOL or abs(traj.y[-1]) > RESIDUAL_TOL:
        raise BracketError(
            f"butterfly at lambda = {lam_b} failed to close: endpoint "
            f"({traj.x[-1]}, {traj.y[-1]})")
    return traj
