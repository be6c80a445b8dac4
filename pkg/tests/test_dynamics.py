"""Robot models, integration and the braking controllers."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ltlcoord.dynamics import (MAX_TURN, NORM_DECEL, STRAIGHT_LINE, BrakingProfile, ConstraintViolation,
                               RobotModel, braking_bounds, braking_control, braking_profile,
                               braking_trajectory, curved_braking_g, curved_stop_distance, integrate)

UNI = RobotModel.unicycle(1.0, 1.0, 2.0)
DI = RobotModel.double_integrator(3.0, 6.0)


def _rk4_brake(v0, omega, a, h=1e-4):
    """Independent fixed-step simulation of turning while decelerating."""
    x = np.array([0.0, 0.0, 0.0, v0])
    pts = [x[:2].copy()]

    def f(y):
        return np.array([y[3] * math.cos(y[2]), y[3] * math.sin(y[2]), omega, -a])

    n = int(round(v0 / a / h))
    h = v0 / a / n
    for _ in range(n):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        pts.append(x[:2].copy())
    return np.array(pts)


# ---------------------------------------------------------------- models

def test_model_rejects_nonpositive_bounds():
    with pytest.raises(ValueError):
        RobotModel.unicycle(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        RobotModel.double_integrator(-1.0, 1.0)
    with pytest.raises(ValueError):
        RobotModel("car", 1.0)


def test_profile_rejects_negative_or_infinite():
    with pytest.raises(ValueError):
        BrakingProfile(STRAIGHT_LINE, -0.1, 0.0)
    with pytest.raises(ValueError):
        BrakingProfile(STRAIGHT_LINE, 1.0, math.inf)


# ---------------------------------------------------------------- integrate

def test_unicycle_coasting():
    x = integrate(UNI, (0, 0, 0, 1), (0, 0), 1.0)
    assert np.allclose(x, [1, 0, 0, 1])


def test_double_integrator_braking_step():
    x = integrate(DI, (0, 0, 3, 0), (-6, 0), 0.5)
    assert np.allclose(x, [0.75, 0, 0, 0])


def test_over_speed_raises():
    with pytest.raises(ConstraintViolation):
        integrate(UNI, (0, 0, 0, 0.9), (0, 2.0), 1.0)
    with pytest.raises(ConstraintViolation):
        integrate(DI, (0, 0, 2.5, 0), (6, 0), 0.5)


def test_inadmissible_input_raises():
    with pytest.raises(ConstraintViolation):
        integrate(UNI, (0, 0, 0, 0), (1.5, 0), 0.1)
    with pytest.raises(ConstraintViolation):
        integrate(DI, (0, 0, 0, 0), (5, 5), 0.1)


def test_nonpositive_dt_raises():
    with pytest.raises(ValueError):
        integrate(UNI, (0, 0, 0, 0), (0, 0), 0.0)


def test_turning_unicycle_traces_circle():
    x = integrate(UNI, (0, 0, 0, 0.5), (1.0, 0.0), math.pi)
    # radius v / omega = 0.5, half a turn ends at (0, 1) heading backwards
    assert np.allclose(x, [0, 1.0, math.pi, 0.5], atol=1e-8)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1, 1), st.floats(-math.pi, math.pi), st.floats(-1, 1), st.floats(-2, 2), st.floats(0.01, 0.5))
def test_integrate_keeps_state_admissible(v, th, w, a, dt):
    try:
        x = integrate(UNI, (0, 0, th, v), (w, a), dt)
    except ConstraintViolation:
        assert abs(v + a * dt) > UNI.v_max
        return
    assert UNI.state_ok(x)


# ---------------------------------------------------------------- braking control

def test_braking_control_values():
    assert braking_control(UNI, braking_profile(UNI), (0, 0, 0, 1.0)) == (0.0, -2.0)
    assert braking_control(UNI, braking_profile(UNI), (0, 0, 0, 0.0)) == (0.0, 0.0)
    assert braking_control(UNI, braking_profile(UNI, MAX_TURN), (0, 0, 0, -0.5)) == (1.0, 2.0)
    assert braking_control(DI, braking_profile(DI), (0, 0, 3, 0)) == (-6.0, 0.0)
    assert braking_control(DI, braking_profile(DI), (0, 0, 0, 0)) == (0.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_di_braking_input_is_admissible_and_opposes_velocity(vx, vy):
    if math.hypot(vx, vy) > DI.v_max:
        return
    u = braking_control(DI, braking_profile(DI), (0, 0, vx, vy))
    assert DI.input_ok(u)
    assert u[0] * vx + u[1] * vy <= 0


# ---------------------------------------------------------------- braking trajectories

def test_unicycle_straight_brake():
    t, xs = braking_trajectory(UNI, braking_profile(UNI), (0, 0, 0, 1.0))
    assert abs(t[-1] - 0.5) < 1e-12
    assert np.allclose(xs[-1], [0.25, 0, 0, 0])


def test_standing_robot_has_trivial_trajectory():
    t, xs = braking_trajectory(UNI, braking_profile(UNI), (1, 2, 0, 0.0))
    assert len(t) == 1 and np.allclose(xs[0], [1, 2, 0, 0])


def test_lower_deceleration_lengthens_stop():
    slow = RobotModel.unicycle(1.0, 1.0, 1.5)
    t, xs = braking_trajectory(slow, braking_profile(slow), (0, 0, 0, 1.0))
    assert abs(xs[-1, 0] - 1 / 3) < 1e-12


def test_di_brake_is_straight():
    t, xs = braking_trajectory(DI, braking_profile(DI), (1, 1, 0, -3))
    assert np.allclose(xs[-1], [1, 0.25, 0, 0])


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(-math.pi, math.pi), st.sampled_from([1.0, -1.0]))
def test_straight_brake_displacement(v, th, sign):
    t, xs = braking_trajectory(UNI, braking_profile(UNI), (0, 0, th, sign * v))
    assert abs(math.hypot(*xs[-1, :2]) - v * v / (2 * UNI.a_max)) < 1e-9
    assert abs(t[-1] - v / UNI.a_max) < 1e-12
    assert np.all(np.abs(xs[:, 3]) <= UNI.v_max + 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 1.0), st.floats(0.3, 3.0), st.floats(0.5, 3.0))
def test_curved_stop_distance_matches_simulation(v, w, a):
    pts = _rk4_brake(v, w, a)
    assert abs(curved_stop_distance(v, w, a) - math.hypot(*pts[-1])) < 1e-6
    assert curved_braking_g(v, w, a) >= -1e-12


def test_max_turn_trajectory_matches_simulation():
    model = RobotModel.unicycle(1.0, 2.0, 1.0)
    t, xs = braking_trajectory(model, braking_profile(model, MAX_TURN), (0, 0, 0, 1.0), n=201)
    pts = _rk4_brake(1.0, 2.0, 1.0)
    assert np.allclose(xs[-1, :2], pts[-1], atol=1e-6)


# ---------------------------------------------------------------- worst-case bounds

def test_bounds_examples():
    assert braking_bounds(UNI) == (0.5, 0.25)
    assert braking_bounds(DI) == (0.5, 0.75)
    assert braking_profile(DI).controller == NORM_DECEL
    with pytest.raises(ValueError):
        braking_bounds(DI, STRAIGHT_LINE)
    with pytest.raises(ValueError):
        braking_bounds(UNI, "Swerve")


@pytest.mark.parametrize("w,a", [(1.0, 2.0), (2.0, 1.0), (4.0, 0.5)])
def test_max_turn_bound_covers_simulated_reach(w, a):
    model = RobotModel.unicycle(1.0, w, a)
    T, D = braking_bounds(model, MAX_TURN)
    assert T == 1.0 / a
    reach = max(np.hypot(*_rk4_brake(v, w, a, h=1e-3).T).max() for v in np.linspace(0.05, 1.0, 20))
    assert reach <= D + 1e-6
    assert D - reach < 1e-2


@settings(max_examples=300, deadline=None)
@given(st.floats(-1, 1), st.floats(-math.pi, math.pi))
def test_bounds_hold_for_every_admissible_state(v, th):
    for controller in (STRAIGHT_LINE, MAX_TURN):
        prof = braking_profile(UNI, controller)
        t, xs = braking_trajectory(UNI, prof, (0.3, -0.2, th, v))
        assert t[-1] <= prof.T_br + 1e-12
        assert np.hypot(xs[:, 0] - 0.3, xs[:, 1] + 0.2).max() <= prof.D_br + 1e-9


@settings(max_examples=300, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_di_bounds_hold(vx, vy):
    if math.hypot(vx, vy) > DI.v_max:
        return
    prof = braking_profile(DI)
    t, xs = braking_trajectory(DI, prof, (0, 0, vx, vy))
    assert t[-1] <= prof.T_br + 1e-12
    assert np.hypot(xs[:, 0], xs[:, 1]).max() <= prof.D_br + 1e-9
