"""Switch-period correspondence, trajectory branches and turnpike limits.

Frozen constants were produced by /‑independent means: direct formula
evaluation cross-checked with a DOP853 integration of the bang-bang
schedule (periodicity defect ~1e-12 confirms the period relation, the
midpoint value matches x(T/2) from the integrator to ~4e-12).
"""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from teardrop.analytic import (
    hyperbole_constant,
    optimal_cost,
    optimal_schedule,
    optimal_trajectory,
    period_derivative,
    period_from_switch,
    solve_for_period,
    switch_from_period,
    switch_time_sup,
    turnpike_limits,
)
from teardrop.core import ProblemParams, State, derive_frequencies, simulate

P31 = ProblemParams(-3.0, 1.0, 1.6823)


def test_period_frozen_values():
    assert period_from_switch(0.6, P31) == pytest.approx(1.682312301852587, abs=1e-12)
    assert period_from_switch(0.9, P31) == pytest.approx(2.8663750703793163, abs=1e-12)


def test_period_rejects_out_of_range_switch():
    sup = switch_time_sup(P31)
    assert sup == pytest.approx(math.pi / 3, abs=1e-15)
    for bad in (0.0, -0.1, sup, sup + 0.1):
        with pytest.raises(ValueError):
            period_from_switch(bad, P31)


def test_period_is_periodicity_time_of_schedule():
    # independent check: simulating the schedule for T(t1) closes the loop
    t1 = 0.6
    T = period_from_switch(t1, P31)
    traj = simulate(optimal_schedule(t1, T, P31), State(1.0, 0.0), 1e-3)
    assert abs(traj.x[-1] - 1.0) < 1e-10
    assert abs(traj.y[-1]) < 1e-10


def test_period_monotone_and_derivative():
    sup = switch_time_sup(P31)
    rng = np.random.default_rng(42)
    for t1 in rng.uniform(0.02, 0.98, size=40) * sup:
        h = 1e-6 * sup
        if not (0.0 < t1 - h and t1 + h < sup):
            continue
        fd = (period_from_switch(t1 + h, P31) - period_from_switch(t1 - h, P31)) / (2 * h)
        exact = period_derivative(t1, P31)
        assert exact > 0.0
        assert abs(fd - exact) / abs(exact) < 1e-6


def test_switch_from_period_round_trip():
    fr = derive_frequencies(P31)
    sup = switch_time_sup(P31)
    for frac in [0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.9999]:
        t1 = frac * sup
        T = period_from_switch(t1, P31)
        if not (0.3 <= T <= 60.0 / fr.omega_min):
            continue
        assert abs(switch_from_period(T, P31) - t1) < 1e-10


def test_switch_from_period_residual():
    # The residual target is 1e-12 * max(1, T) wherever float64 resolution of
    # t1 allows it; for large T the period map is so steep that half an ulp
    # of t1 already moves T by more (quantization floor), and the best any
    # inversion can do is return the correctly rounded t1.
    for T in [0.5, 1.6823, 5.0, 10.0]:
        t1 = switch_from_period(T, P31)
        floor = 0.6 * math.ulp(t1) * period_derivative(t1, P31)
        assert abs(period_from_switch(t1, P31) - T) < max(1e-12 * max(1.0, T), floor)


def test_switch_from_period_huge_horizon():
    # far past the point where exp(omega_min T) overflows the period map;
    # the switch time saturates at its supremum without error
    fr = derive_frequencies(P31)
    t1 = switch_from_period(1e3 / fr.omega_min, P31)
    sup = switch_time_sup(P31)
    assert 0.0 < t1 < sup
    assert abs(t1 - sup) < 1e-12


def test_frozen_switch_for_reference_period():
    assert switch_from_period(1.6823, P31) == pytest.approx(0.5999961065240309, abs=1e-11)


def test_cost_both_forms_and_sign():
    t1 = 0.6
    fr = derive_frequencies(P31)
    cost = optimal_cost(t1, P31)
    assert cost == pytest.approx(-0.24693690555776104, abs=1e-12)
    # transcendental form of the same quantity
    r = (fr.omega_max / fr.omega_min) * math.tan(fr.omega_max * t1)
    alt = -fr.omega_min * math.log((1 + r) / (1 - r)) + 2 * fr.omega_max ** 2 * t1
    assert abs(cost - alt) < 1e-12


def test_cost_negative_everywhere():
    sup = switch_time_sup(P31)
    for t1 in np.linspace(1e-4, sup * (1 - 1e-6), 1000):
        assert optimal_cost(float(t1), P31) < 0.0


def test_hyperbole_constant_and_midpoint():
    c = hyperbole_constant(0.6, P31)
    assert c == pytest.approx(0.5749051696511157, abs=1e-12)
    # x(T/2) = sqrt(c): matches DOP853 midpoint 0.7582250125499 to ~4e-12
    assert math.sqrt(c) == pytest.approx(0.7582250125464839, abs=1e-11)
    T = period_from_switch(0.6, P31)
    _, traj = optimal_trajectory(T, P31, n_samples=513)
    i_mid = int(np.argmin(np.abs(traj.times - T / 2)))
    assert traj.x[i_mid] == pytest.approx(math.sqrt(c), abs=1e-10)
    assert abs(traj.y[i_mid]) < 1e-10


def test_trajectory_endpoints_symmetry_and_bounds():
    T = 1.6823
    _, traj = optimal_trajectory(T, P31, n_samples=801)
    assert traj.x[0] == pytest.approx(1.0, abs=0.0)
    assert traj.y[0] == 0.0
    assert abs(traj.x[-1] - 1.0) < 1e-12
    assert abs(traj.y[-1]) < 1e-12
    assert np.all(traj.x > 0.0)
    assert np.all(traj.x <= 1.0 + 1e-12)
    # time-reversal symmetry x(T-t) = x(t), y(T-t) = -y(t) on the uniform grid
    sol, _ = optimal_trajectory(T, P31, n_samples=3)
    t1 = sol.switch_time
    grid = np.linspace(0.0, T, 801)
    _, fwd = optimal_trajectory(T, P31, n_samples=801)
    keep = [i for i, t in enumerate(fwd.times) if np.min(np.abs(grid - t)) < 1e-13]
    xs = fwd.x[keep]
    ys = fwd.y[keep]
    assert np.max(np.abs(xs - xs[::-1])) < 1e-10
    assert np.max(np.abs(ys + ys[::-1])) < 1e-10
    # switching instants are samples
    for t_sw in (t1, T - t1):
        assert np.min(np.abs(fwd.times - t_sw)) < 1e-12


def test_trajectory_branch_continuity():
    T = 2.8663750703793163
    sol, traj = optimal_trajectory(T, P31, n_samples=4001)
    t1 = sol.switch_time
    dt = np.diff(traj.times)
    dx = np.diff(traj.x)
    # derivative of x should equal y mid-interval everywhere, including
    # across the two branch joints (C^1 continuity)
    y_mid = 0.5 * (traj.y[1:] + traj.y[:-1])
    assert np.max(np.abs(dx / dt - y_mid)) < 1e-4  # O(dt^2) midpoint error
    # exact value/derivative agreement at the joints from both closed forms
    fr = derive_frequencies(P31)
    for t_sw in (t1, T - t1):
        w = fr.omega_max
        ell_x = math.cos(w * min(t_sw, T - t_sw))
        ell_y = -w * math.sin(w * t_sw) if t_sw == t1 else w * math.sin(w * (T - t_sw))
        i = int(np.argmin(np.abs(traj.times - t_sw)))
        assert traj.x[i] == pytest.approx(ell_x, abs=1e-10)
        assert traj.y[i] == pytest.approx(ell_y, abs=1e-10)


def test_trajectory_conic_membership():
    T = 1.6823
    sol, traj = optimal_trajectory(T, P31, n_samples=1501)
    fr = derive_frequencies(P31)
    t1 = sol.switch_time
    on_ellipse = (traj.times <= t1 + 1e-14) | (traj.times >= T - t1 - 1e-14)
    ellipse = traj.x ** 2 + (traj.y / fr.omega_max) ** 2
    assert np.max(np.abs(ellipse[on_ellipse] - 1.0)) < 1e-10
    mid = ~on_ellipse
    hyper = traj.x ** 2 - (traj.y / fr.omega_min) ** 2
    assert np.max(np.abs(hyper[mid] - sol.hyperbole_constant)) < 1e-10


def test_trajectory_matches_integrator():
    T = 1.6823
    sol, traj = optimal_trajectory(T, P31, n_samples=301)
    t1 = sol.switch_time

    def u_of_t(t):
        return P31.u_max if (t < t1 or t > T - t1) else P31.u_min

    ivp = solve_ivp(lambda t, z: [z[1], -u_of_t(t) * z[0]], (0.0, T), [1.0, 0.0],
                    method="DOP853", rtol=1e-12, atol=1e-14,
                    t_eval=traj.times, max_step=0.02)
    assert np.max(np.abs(traj.x - ivp.y[0])) < 1e-9
    assert np.max(np.abs(traj.y - ivp.y[1])) < 1e-9


def test_turnpike_limits_values():
    tp = turnpike_limits(P31)
    assert tp.t1_infinity == pytest.approx(math.pi / 3, abs=1e-14)
    assert tp.corner_x == pytest.approx(0.5, abs=1e-14)
    assert tp.corner_y == pytest.approx(-math.sqrt(3.0) / 2.0, abs=1e-14)
    assert tp.midpoint_asymptote_prefactor == pytest.approx(6.133707406236226, abs=1e-11)

    tp_k = turnpike_limits(ProblemParams(-3.0, 54.5, 1.0))
    assert tp_k.t1_infinity == pytest.approx(0.031216148970094566, abs=1e-14)
    assert tp_k.corner_x == pytest.approx(0.9735636019061732, abs=1e-12)
    assert tp_k.corner_y == pytest.approx(-1.6862616229012524, abs=1e-12)


def test_turnpike_convergence():
    fr = derive_frequencies(P31)
    tp = turnpike_limits(P31)
    rel_errors = []
    for T in [5.0 / fr.omega_min, 10.0 / fr.omega_min, 20.0 / fr.omega_min]:
        sol = solve_for_period(T, P31)
        x_mid = math.sqrt(sol.hyperbole_constant)
        asym = tp.midpoint_asymptote_prefactor * math.exp(-fr.omega_min * T / 2.0)
        rel_errors.append(abs(x_mid - asym) / asym)
        # switch time and corner approach their limits monotonically
        assert sol.switch_time < tp.t1_infinity
    assert rel_errors[-1] < 0.02
    assert rel_errors[0] > rel_errors[-1]  # convergence is visible across the sweep


def test_solution_invariants():
    for T in [0.5, 1.6823, 5.0]:
        sol = solve_for_period(T, P31)
        assert 0.0 < sol.switch_time < switch_time_sup(P31)
        assert sol.hyperbole_constant > 0.0
        assert sol.cost < 0.0
