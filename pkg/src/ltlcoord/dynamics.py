"""Robot models, constrained integration and braking controllers.

Unicycle state is ``(px, py, theta, v)`` with input ``(omega, a)``.
Double-integrator state is ``(px, py, vx, vy)`` with input ``(ux, uy)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

UNICYCLE = "unicycle"
DOUBLE_INTEGRATOR = "double_integrator"

STRAIGHT_LINE = "StraightLine"
MAX_TURN = "MaxTurn"
NORM_DECEL = "NormDecel"

TOL = 1e-9


class ConstraintViolation(ValueError):
    """Raised when a state or input leaves its admissible set."""


@dataclass(frozen=True)
class RobotModel:
    kind: str
    v_max: float
    omega_max: float = 0.0
    a_max: float = 0.0
    u_max: float = 0.0

    def __post_init__(self):
        if self.kind == UNICYCLE:
            bounds = (self.v_max, self.omega_max, self.a_max)
        elif self.kind == DOUBLE_INTEGRATOR:
            bounds = (self.v_max, self.u_max)
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not all(b > 0 for b in bounds):
            raise ValueError("all constraint bounds must be strictly positive")

    @classmethod
    def unicycle(cls, v_max, omega_max, a_max):
        return cls(UNICYCLE, float(v_max), omega_max=float(omega_max), a_max=float(a_max))

    @classmethod
    def double_integrator(cls, v_max, u_max):
        return cls(DOUBLE_INTEGRATOR, float(v_max), u_max=float(u_max))

    @property
    def n(self) -> int:
        return 4

    @property
    def decel(self) -> float:
        """Largest deceleration available along the direction of motion."""
        return self.a_max if self.kind == UNICYCLE else self.u_max

    @property
    def default_braking(self) -> str:
        return STRAIGHT_LINE if self.kind == UNICYCLE else NORM_DECEL

    def speed(self, x) -> float:
        if self.kind == UNICYCLE:
            return abs(x[3])
        return math.hypot(x[2], x[3])

    def state_ok(self, x, tol: float = TOL) -> bool:
        return self.speed(x) <= self.v_max + tol

    def input_ok(self, u, tol: float = TOL) -> bool:
        if self.kind == UNICYCLE:
            return abs(u[0]) <= self.omega_max + tol and abs(u[1]) <= self.a_max + tol
        return math.hypot(u[0], u[1]) <= self.u_max + tol


@dataclass(frozen=True)
class BrakingProfile:
    controller: str
    T_br: float
    D_br: float

    def __post_init__(self):
        if not (0 <= self.T_br < math.inf and 0 <= self.D_br < math.inf):
            raise ValueError("braking time and distance must be finite and nonnegative")


# ----------------------------------------------------------------- integrate

def _unicycle_rhs(x, u):
    return np.array([x[3] * math.cos(x[2]), x[3] * math.sin(x[2]), u[0], u[1]])


def integrate(model: RobotModel, x, u, dt: float) -> np.ndarray:
    """State after holding ``u`` for ``dt`` seconds.

    Closed forms are used for the double integrator and for the unicycle with
    zero turn rate; otherwise fixed-step RK4 with step ``min(dt/10, 1e-3)``.
    Raises :class:`ConstraintViolation` if the input is inadmissible or the
    trajectory leaves the velocity bound during ``[0, dt]``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if not model.input_ok(u):
        raise ConstraintViolation(f"input {u.tolist()} outside the admissible set")
    if not model.state_ok(x):
        raise ConstraintViolation(f"initial state {x.tolist()} violates the velocity bound")
    if model.kind == DOUBLE_INTEGRATOR:
        v1 = x[2:] + u * dt
        # speed is convex in time, so checking the endpoint suffices
        if np.hypot(*v1) > model.v_max + TOL:
            raise ConstraintViolation("velocity bound exceeded")
        p1 = x[:2] + x[2:] * dt + 0.5 * u * dt * dt
        return np.concatenate([p1, v1])
    omega, a = u
    v1 = x[3] + a * dt
    if abs(v1) > model.v_max + TOL:
        raise ConstraintViolation("velocity bound exceeded")
    if omega == 0.0:
        s = x[3] * dt + 0.5 * a * dt * dt
        return np.array([x[0] + s * math.cos(x[2]), x[1] + s * math.sin(x[2]), x[2], v1])
    n = max(10, int(math.ceil(dt / 1e-3)))
    h = dt / n
    y = x.copy()
    for _ in range(n):
        k1 = _unicycle_rhs(y, u)
        k2 = _unicycle_rhs(y + 0.5 * h * k1, u)
        k3 = _unicycle_rhs(y + 0.5 * h * k2, u)
        k4 = _unicycle_rhs(y + h * k3, u)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    y[3] = v1
    return y


# ------------------------------------------------------------------ braking

def braking_control(model: RobotModel, profile: BrakingProfile, x) -> Tuple[float, float]:
    if model.kind == UNICYCLE:
        v = x[3]
        if v == 0.0:
            return (0.0, 0.0)
        omega = model.omega_max if profile.controller == MAX_TURN else 0.0
        return (omega, -model.a_max * math.copysign(1.0, v))
    big = max(abs(x[2]), abs(x[3]))
    if big == 0.0:
        return (0.0, 0.0)
    # rescale first so that tiny velocities still give a unit direction
    dx, dy = x[2] / big, x[3] / big
    n = math.hypot(dx, dy)
    return (-model.u_max * dx / n, -model.u_max * dy / n)


def curved_braking_g(v: float, omega: float, a: float) -> float:
    th = v * omega / a
    return v * v * omega * omega + 2 * a * a * (1 - math.cos(th)) - 2 * v * omega * a * math.sin(th)


def curved_stop_distance(v: float, omega: float, a: float) -> float:
    """Distance from start to stop point when braking at ``a`` while turning at ``omega``."""
    if omega == 0.0:
        return v * v / (2 * a)
    return math.sqrt(max(curved_braking_g(v, omega, a), 0.0)) / (omega * omega)


def _curved_offset(v0, omega, a, t):
    """Closed-form displacement (complex, heading-frame) after braking for ``t``."""
    e = np.exp(1j * omega * t)
    return ((v0 - a * t) * e - v0) / (1j * omega) - a * (e - 1) / (omega * omega)


def braking_trajectory(model: RobotModel, profile: BrakingProfile, x, n: int = 101):
    """Sampled braking trajectory ``(times, states)`` until zero velocity."""
    x = np.asarray(x, dtype=float)
    speed = model.speed(x)
    if speed == 0.0:
        return np.array([0.0]), x[None, :].copy()
    T = speed / model.decel
    t = np.linspace(0.0, T, n)
    out = np.empty((n, 4))
    if model.kind == DOUBLE_INTEGRATOR:
        d = x[2:] / speed
        s = speed * t - 0.5 * model.u_max * t * t
        vs = speed - model.u_max * t
        out[:, 0] = x[0] + s * d[0]
        out[:, 1] = x[1] + s * d[1]
        out[:, 2] = vs * d[0]
        out[:, 3] = vs * d[1]
        out[-1, 2:] = 0.0
        return t, out
    sign = math.copysign(1.0, x[3])
    if profile.controller == MAX_TURN:
        omega = model.omega_max
        z = _curved_offset(speed, omega, model.a_max, t) * np.exp(1j * x[2]) * sign
        out[:, 0] = x[0] + z.real
        out[:, 1] = x[1] + z.imag
        out[:, 2] = x[2] + omega * t
    else:
        s = sign * (speed * t - 0.5 * model.a_max * t * t)
        out[:, 0] = x[0] + s * math.cos(x[2])
        out[:, 1] = x[1] + s * math.sin(x[2])
        out[:, 2] = x[2]
    out[:, 3] = sign * (speed - model.a_max * t)
    out[-1, 3] = 0.0
    return t, out


def braking_bounds(model: RobotModel, controller: str | None = None) -> Tuple[float, float]:
    """Worst-case braking time and distance from any admissible state."""
    controller = controller or model.default_braking
    v = model.v_max
    if model.kind == DOUBLE_INTEGRATOR:
        if controller != NORM_DECEL:
            raise ValueError("double integrator supports NormDecel braking only")
        return v / model.u_max, v * v / (2 * model.u_max)
    if controller == STRAIGHT_LINE:
        return v / model.a_max, v * v / (2 * model.a_max)
    if controller != MAX_TURN:
        raise ValueError(f"unknown braking controller {controller!r}")
    a, w = model.a_max, model.omega_max
    # the stop point (closed form) need not be the farthest point of the arc,
    # so the bound is the largest displacement over initial speeds and times
    stop = curved_stop_distance(v, w, a)
    speeds = np.linspace(0.0, v, 65)[1:]
    frac = np.linspace(0.0, 1.0, 513)
    t = (speeds / a)[:, None] * frac[None, :]
    reach = np.abs(_curved_offset(speeds[:, None], w, a, t))
    return v / a, float(max(stop, reach.max()))


def braking_profile(model: RobotModel, controller: str | None = None) -> BrakingProfile:
    controller = controller or model.default_braking
    T, D = braking_bounds(model, controller)
    return BrakingProfile(controller, T, D)
