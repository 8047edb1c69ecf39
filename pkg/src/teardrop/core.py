"""Exact propagation for the controlled oscillator  x' = y,  y' = -u(t) x.

For a constant control level the flow is linear and known in closed form
(trigonometric for positive levels, hyperbolic for negative ones, a plain
shear at level zero), so trajectories of piecewise-constant controls are
assembled from 2x2 propagator matrices instead of a numerical integrator.
All propagators have unit determinant (the flow preserves area).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Levels smaller than this in magnitude are treated as exactly zero:
# below it the trig/hyperbolic formulas lose nothing over the shear.
ZERO_LEVEL = 1e-12


class SimulationError(RuntimeError):
    """A trajectory left the numerically representable range."""


@dataclass(frozen=True)
class ProblemParams:
    """Control bounds and horizon of the periodic cheap-control problem."""

    u_min: float
    u_max: float
    horizon: float

    def __post_init__(self) -> None:
        if not (self.u_min < 0.0 < self.u_max):
            raise ValueError(
                f"control bounds must satisfy u_min < 0 < u_max, got "
                f"({self.u_min}, {self.u_max})"
            )
        if not (math.isfinite(self.u_min) and math.isfinite(self.u_max)):
            raise ValueError("control bounds must be finite")
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive, got {self.horizon}")


@dataclass(frozen=True)
class Frequencies:
    """Angular frequencies of the two extreme regimes.

    omega_max = sqrt(u_max) rules the rotation while the control is high,
    omega_min = sqrt(-u_min) rules the hyperbolic drift while it is low.
    """

    omega_min: float
    omega_max: float


def derive_frequencies(params: ProblemParams) -> Frequencies:
    return Frequencies(omega_min=math.sqrt(-params.u_min),
                       omega_max=math.sqrt(params.u_max))


@dataclass(frozen=True)
class State:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"state must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class Segment:
    """A constant-control piece of a schedule."""

    duration: float
    level: float

    def __post_init__(self) -> None:
        if not (self.duration >= 0.0 and math.isfinite(self.duration)):
            raise ValueError(f"segment duration must be >= 0, got {self.duration}")
        if not math.isfinite(self.level):
            raise ValueError("segment level must be finite")


@dataclass(frozen=True)
class Schedule:
    """An ordered tuple of constant-control segments."""

    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def total_duration(self) -> float:
        return math.fsum(seg.duration for seg in self.segments)

    @property
    def switch_times(self) -> tuple[float, ...]:
        """Interior segment boundaries (cumulative durations, end excluded)."""
        times = []
        t = 0.0
        for seg in self.segments[:-1]:
            t += seg.duration
            times.append(t)
        return tuple(times)

    def cost(self) -> float:
        """Control area integral(u dt) = sum of duration * level."""
        return math.fsum(seg.duration * seg.level for seg in self.segments)


@dataclass(frozen=True)
class PropagatorMatrix:
    """Closed-form fundamental matrix of one constant-control segment."""

    a11: float
    a12: float
    a21: float
    a22: float

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def apply(self, s: State) -> State:
        return State(self.a11 * s.x + self.a12 * s.y,
                     self.a21 * s.x + self.a22 * s.y)

    def __matmul__(self, other: "PropagatorMatrix") -> "PropagatorMatrix":
        # self @ other: apply `other` first, then `self`.
        return PropagatorMatrix(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    @staticmethod
    def identity() -> "PropagatorMatrix":
        return PropagatorMatrix(1.0, 0.0, 0.0, 1.0)


def flow_entries(level: float, tau: float) -> tuple[float, float, float, float]:
    """Entries (a11, a12, a21, a22) of the constant-level flow over time tau."""
    if tau < 0.0:
        raise ValueError(f"flow duration must be >= 0, got {tau}")
    if abs(level) < ZERO_LEVEL:
        return 1.0, tau, 0.0, 1.0
    if level > 0.0:
        w = math.sqrt(level)
        c, s = math.cos(w * tau), math.sin(w * tau)
        return c, s / w, -w * s, c
    w = math.sqrt(-level)
    ch, sh = math.cosh(w * tau), math.sinh(w * tau)
    return ch, sh / w, w * sh, ch


def flow_entries_array(level, tau):
    """Vectorised `flow_entries` (numpy broadcasting, levels of any sign mixed)."""
    level = np.asarray(level, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0.0):
        raise ValueError("flow durations must be >= 0")
    level, tau = np.broadcast_arrays(level, tau)
    a11 = np.ones_like(tau)
    a12 = tau.copy()
    a21 = np.zeros_like(tau)

    pos = level >= ZERO_LEVEL
    if np.any(pos):
        w = np.sqrt(level[pos])
        wt = w * tau[pos]
        a11[pos] = np.cos(wt)
        a12[pos] = np.sin(wt) / w
        a21[pos] = -w * np.sin(wt)

    neg = level <= -ZERO_LEVEL
    if np.any(neg):
        w = np.sqrt(-level[neg])
        wt = w * tau[neg]
        a11[neg] = np.cosh(wt)
        a12[neg] = np.sinh(wt) / w
        a21[neg] = w * np.sinh(wt)

    return a11, a12, a21, a11.copy()


def propagate_constant(s: State, level: float, tau: float) -> tuple[State, PropagatorMatrix]:
    """Exact state after holding `level` for time `tau`, plus the propagator."""
    a11, a12, a21, a22 = flow_entries(level, tau)
    mat = PropagatorMatrix(a11, a12, a21, a22)
    return mat.apply(s), mat


def monodromy(schedule: Schedule) -> PropagatorMatrix:
    """Ordered product of segment propagators (first segment acts first)."""
    if schedule.total_duration <= 0.0:
        raise ValueError("schedule must have positive total duration")
    mat = PropagatorMatrix.identity()
    for seg in schedule.segments:
        a11, a12, a21, a22 = flow_entries(seg.level, seg.duration)
        mat = PropagatorMatrix(a11, a12, a21, a22) @ mat
    return mat


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory of a schedule.

    states[k] = (x, y) at times[k]; controls[k] is the level active on
    [times[k], times[k+1]) (the last sample keeps the final level).
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    cost: float

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]


def simulate(schedule: Schedule, s0: State, sample_step: float) -> Trajectory:
    """Sample the exact trajectory of `schedule` starting from `s0`.

    Every switching instant is a sample; within a segment samples are
    uniform with spacing <= sample_step and each one is computed by the
    closed-form flow from the segment start (no accumulation of stepping
    error beyond one matrix application per segment).
    """
    if not schedule.segments or schedule.total_duration <= 0.0:
        raise ValueError("cannot simulate an empty schedule")
    if sample_step <= 0.0:
        raise ValueError(f"sample_step must be > 0, got {sample_step}")

    times = [0.0]
    xs = [s0.x]
    ys = [s0.y]
    us = []

    t0 = 0.0
    state = s0
    for seg in schedule.segments:
        if seg.duration == 0.0:
            continue  # zero-length tail segments carry no samples
        n_sub = max(1, math.ceil(seg.duration / sample_step))
        for k in range(1, n_sub + 1):
            tau = seg.duration * k / n_sub
            nxt, _ = propagate_constant(state, seg.level, tau)
            times.append(t0 + tau)
            xs.append(nxt.x)
            ys.append(nxt.y)
        # controls label interval starts, so each sub-interval of this
        # segment (beginning at the previous sample) carries its level.
        us.extend([seg.level] * n_sub)
        state, _ = propagate_constant(state, seg.level, seg.duration)
        if not (math.isfinite(state.x) and math.isfinite(state.y)):
            raise SimulationError(f"state became non-finite at t = {t0 + seg.duration}")
        t0 += seg.duration

    # the final sample starts no interval; keep the last level for alignment
    us.append(us[-1])
    return Trajectory(
        times=np.asarray(times),
        states=np.column_stack([xs, ys]),
        controls=np.asarray(us),
        cost=schedule.cost(),
    )
