"""Motion primitives on the grid lattice.

A lattice state is a tuple ``(ix, iy, h, m)``: the robot rests or moves at a
cell centre, ``h`` is one of eight headings (``-1`` for a double integrator
at rest, whose heading is meaningless) and ``m`` is 1 when the robot passes
the centre at cruise speed and 0 when it is at rest.  Every primitive is a
straight line, an in-place turn or a hold, with closed-form position and
velocity, so plans are executed exactly and braking always stays on the
planned path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .dynamics import UNICYCLE, RobotModel

State = Tuple[int, int, int, int]

STEPS = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
HEADING_ANGLES = [k * math.pi / 4 for k in range(8)]
UNIT = [(dx / math.hypot(dx, dy), dy / math.hypot(dx, dy)) for dx, dy in STEPS]

LINE, TURN, HOLD = 0, 1, 2


@dataclass(frozen=True)
class Piece:
    """Constant-input motion piece, in absolute time ``[t0, t0 + dur)``.

    For ``LINE`` the position is ``p0 + d * (v0*tau + acc*tau**2/2)`` with a
    signed speed along the unit vector ``d``; for ``TURN`` and ``HOLD`` the
    position is fixed and the heading is ``theta0 + omega*tau``.
    """
    kind: int
    t0: float
    dur: float
    p0: Tuple[float, float]
    d: Tuple[float, float] = (1.0, 0.0)
    v0: float = 0.0
    acc: float = 0.0
    theta0: float = 0.0
    omega: float = 0.0

    @property
    def t1(self) -> float:
        return self.t0 + self.dur

    def shifted(self, dt: float, dp=(0.0, 0.0)) -> "Piece":
        return Piece(self.kind, self.t0 + dt, self.dur, (self.p0[0] + dp[0], self.p0[1] + dp[1]),
                     self.d, self.v0, self.acc, self.theta0, self.omega)

    def position(self, t: float) -> Tuple[float, float]:
        tau = t - self.t0
        if self.kind == LINE:
            s = self.v0 * tau + 0.5 * self.acc * tau * tau
            return (self.p0[0] + s * self.d[0], self.p0[1] + s * self.d[1])
        return self.p0

    def speed(self, t: float) -> float:
        return self.v0 + self.acc * (t - self.t0) if self.kind == LINE else 0.0

    def heading(self, t: float) -> float:
        if self.kind == LINE:
            return self.theta0
        return self.theta0 + self.omega * (t - self.t0)

    def state(self, t: float, kind: str) -> Tuple[float, float, float, float]:
        x, y = self.position(t)
        v = self.speed(t)
        if kind == UNICYCLE:
            return (x, y, self.heading(t), v)
        return (x, y, v * self.d[0], v * self.d[1])

    def end_position(self) -> Tuple[float, float]:
        return self.position(self.t1)


def _line_pieces(p0, d, theta, profile, t0=0.0) -> List[Piece]:
    """Chain of ``LINE`` pieces from a list of ``(v0, acc, dur)`` phases."""
    out, s, t = [], 0.0, t0
    for v0, acc, dur in profile:
        if dur <= 0:
            continue
        out.append(Piece(LINE, t, dur, (p0[0] + s * d[0], p0[1] + s * d[1]), d, v0, acc, theta))
        s += v0 * dur + 0.5 * acc * dur * dur
        t += dur
    return out


def rest_to_rest_profile(dist: float, v_c: float, a: float):
    """Fastest rest-to-rest phases over signed ``dist`` with speed cap ``v_c``."""
    sign = 1.0 if dist >= 0 else -1.0
    L = abs(dist)
    if L == 0:
        return []
    if L >= v_c * v_c / a:
        ta = v_c / a
        tc = (L - v_c * v_c / a) / v_c
        return [(0.0, sign * a, ta), (sign * v_c, 0.0, tc), (sign * v_c, -sign * a, ta)]
    vp = math.sqrt(a * L)
    tp = vp / a
    return [(0.0, sign * a, tp), (sign * vp, -sign * a, tp)]


@dataclass(frozen=True)
class Template:
    """Primitive relative to the source cell centre, starting at time 0."""
    name: str
    dst: Tuple[int, int, int, int]      # (di, dj, h', m')
    pieces: Tuple[Piece, ...]
    duration: float
    length: float


@dataclass
class Motion:
    """A primitive placed in the workspace and in absolute time."""
    name: str
    pieces: List[Piece]
    src: Optional[State]
    dst: Optional[State]
    line: Optional[Tuple[State, State]] = None   # rest states at the ends of a straight move

    @property
    def t0(self) -> float:
        return self.pieces[0].t0

    @property
    def t1(self) -> float:
        return self.pieces[-1].t1

    def piece_at(self, t: float) -> Piece:
        for pc in self.pieces:
            if t < pc.t1:
                return pc
        return self.pieces[-1]

    def start_position(self):
        return self.pieces[0].p0

    def end_position(self):
        return self.pieces[-1].end_position()

    def segment(self):
        return self.start_position(), self.end_position()


@dataclass
class Lattice:
    model: RobotModel
    grid: object
    wait_s: float = 0.5
    v_c: float = field(init=False)
    _templates: dict = field(init=False, default_factory=dict)

    def __post_init__(self):
        g = self.grid.size
        a = self.model.decel
        # cruise speed is capped so that starting and stopping fit in one step
        self.v_c = min(self.model.v_max, math.sqrt(2 * a * g))
        self.d_a = self.v_c * self.v_c / (2 * a)
        self.is_unicycle = self.model.kind == UNICYCLE
        self.turn_s = (math.pi / 4) / self.model.omega_max if self.is_unicycle else 0.0

    # ------------------------------------------------------------ templates
    def templates(self, h: int, m: int) -> List[Template]:
        key = (h, m)
        hit = self._templates.get(key)
        if hit is None:
            hit = self._templates[key] = self._build_templates(h, m)
        return hit

    def _heading_theta(self, h: int) -> float:
        return HEADING_ANGLES[h] if h >= 0 else 0.0

    def _build_templates(self, h: int, m: int) -> List[Template]:
        g, a, v_c, d_a = self.grid.size, self.model.decel, self.v_c, self.d_a
        out = []
        if m == 0:
            th = self._heading_theta(h)
            out.append(Template("wait", (0, 0, h, 0),
                                (Piece(HOLD, 0.0, self.wait_s, (0.0, 0.0), theta0=th),), self.wait_s, 0.0))
            if self.is_unicycle:
                w = self.model.omega_max
                for sgn, name in ((1, "turn_left"), (-1, "turn_right")):
                    out.append(Template(name, (0, 0, (h + sgn) % 8, 0),
                                        (Piece(TURN, 0.0, self.turn_s, (0.0, 0.0), theta0=th, omega=sgn * w),),
                                        self.turn_s, 0.0))
                dirs = [h]
            else:
                dirs = list(range(8))
            for k in dirs:
                step, d = STEPS[k], UNIT[k]
                L = g * math.hypot(*step)
                theta = HEADING_ANGLES[k] if self.is_unicycle else 0.0
                end_h = k if self.is_unicycle else -1
                hop = _line_pieces((0.0, 0.0), d, theta, rest_to_rest_profile(L, v_c, a))
                out.append(Template("hop", (step[0], step[1], end_h, 0), tuple(hop),
                                    hop[-1].t1, L))
                start = _line_pieces((0.0, 0.0), d, theta,
                                     [(0.0, a, v_c / a), (v_c, 0.0, (L - d_a) / v_c)])
                out.append(Template("start", (step[0], step[1], k, 1), tuple(start),
                                    start[-1].t1, L))
        else:
            step, d = STEPS[h], UNIT[h]
            L = g * math.hypot(*step)
            theta = HEADING_ANGLES[h] if self.is_unicycle else 0.0
            cruise = _line_pieces((0.0, 0.0), d, theta, [(v_c, 0.0, L / v_c)])
            out.append(Template("cruise", (step[0], step[1], h, 1), tuple(cruise), L / v_c, L))
            end_h = h if self.is_unicycle else -1
            stop = _line_pieces((0.0, 0.0), d, theta,
                                [(v_c, 0.0, (L - d_a) / v_c), (v_c, -a, v_c / a)])
            out.append(Template("stop", (step[0], step[1], end_h, 0), tuple(stop), stop[-1].t1, L))
        return out

    # ------------------------------------------------------------ states
    def rest_states(self, cell) -> List[State]:
        if self.is_unicycle:
            return [(cell[0], cell[1], h, 0) for h in range(8)]
        return [(cell[0], cell[1], -1, 0)]

    def moving_states(self, cell) -> List[State]:
        return [(cell[0], cell[1], h, 1) for h in range(8)]

    def start_state(self, cell, theta: float = 0.0) -> State:
        if not self.is_unicycle:
            return (cell[0], cell[1], -1, 0)
        h = int(round(theta / (math.pi / 4))) % 8
        if abs(math.remainder(theta - HEADING_ANGLES[h], 2 * math.pi)) > 1e-9:
            raise ValueError("unicycle start heading must be a multiple of pi/4")
        return (cell[0], cell[1], h, 0)

    def successors(self, x: State):
        """``(template, destination state)`` pairs leaving lattice state ``x``."""
        i, j, h, m = x
        return [(tp, (i + tp.dst[0], j + tp.dst[1], tp.dst[2], tp.dst[3])) for tp in self.templates(h, m)]

    def center(self, x: State):
        return self.grid.center((x[0], x[1]))

    def instantiate(self, x: State, tp: Template, t0: float) -> Motion:
        c = self.center(x)
        pieces = [pc.shifted(t0, c) for pc in tp.pieces]
        dst = (x[0] + tp.dst[0], x[1] + tp.dst[1], tp.dst[2], tp.dst[3])
        line = None
        if (tp.dst[0], tp.dst[1]) != (0, 0):
            h = dst[2] if self.is_unicycle else -1
            line = ((x[0], x[1], h, 0), (dst[0], dst[1], h, 0))
        return Motion(tp.name, pieces, x, dst, line)

    def state_vector(self, x: State) -> Tuple[float, float, float, float]:
        cx, cy = self.center(x)
        i, j, h, m = x
        v = self.v_c * m
        if self.is_unicycle:
            return (cx, cy, HEADING_ANGLES[h], v)
        if h < 0:
            return (cx, cy, 0.0, 0.0)
        return (cx, cy, v * UNIT[h][0], v * UNIT[h][1])

    def features(self, x: State) -> Tuple[float, float, float, float]:
        """Position, direction angle and speed used by the nearest-node metric."""
        cx, cy = self.center(x)
        h, m = x[2], x[3]
        return (cx, cy, HEADING_ANGLES[h] if h >= 0 else 0.0, self.v_c * m)

    # ------------------------------------------------------------ recovery
    def recovery(self, pose: "RestPose", t0: float) -> List[Motion]:
        """Motions from an off-lattice rest pose back onto lattice rest states."""
        out = []
        if self.is_unicycle:
            q = pose.theta / (math.pi / 4)
            if abs(q - round(q)) > 1e-9:
                lo = math.floor(q)
                for k in (lo, lo + 1):
                    dth = k * math.pi / 4 - pose.theta
                    w = math.copysign(self.model.omega_max, dth)
                    pc = Piece(TURN, t0, abs(dth) / self.model.omega_max, pose.p, theta0=pose.theta, omega=w)
                    # turns happen at rest on a cell centre, so no line recovery is pending
                    out.append(Motion("recover_turn", [pc], None, (pose.cell[0], pose.cell[1], k % 8, 0)))
                return out
        if pose.line is None:
            return out
        a = self.model.decel
        for target in pose.line:
            c = self.center(target)
            dx, dy = c[0] - pose.p[0], c[1] - pose.p[1]
            dist = math.hypot(dx, dy)
            if dist < 1e-12:
                continue
            if self.is_unicycle:
                d = (math.cos(pose.theta), math.sin(pose.theta))
                signed = dx * d[0] + dy * d[1]
                theta = pose.theta
            else:
                d = (dx / dist, dy / dist)
                signed = dist
                theta = 0.0
            pieces = _line_pieces(pose.p, d, theta, rest_to_rest_profile(signed, self.v_c, a), t0)
            out.append(Motion("recover_move", pieces, None, target, pose.line))
        return out


@dataclass(frozen=True)
class RestPose:
    """Off-lattice rest configuration reached by emergency braking.

    ``line`` holds the two lattice rest states at the ends of the straight
    segment the robot stopped on (``None`` if it stopped at a cell centre).
    """
    p: Tuple[float, float]
    theta: float
    cell: Tuple[int, int]
    line: Optional[Tuple[State, State]] = None


def motion_length(m: Motion) -> float:
    a, b = m.segment()
    return math.hypot(b[0] - a[0], b[1] - a[1])


def brake_pieces(pc: Piece, t: float, model: RobotModel) -> List[Piece]:
    """Pieces that stop the robot from its state at time ``t`` inside ``pc``.

    Straight-line braking (unicycle) and norm deceleration (double integrator)
    both decelerate along the current direction of motion.
    """
    p = pc.position(t)
    if pc.kind != LINE:
        # turning or holding at rest: the turn rate input drops to zero at once
        return [Piece(HOLD, t, 0.0, p, theta0=pc.heading(t))]
    v = pc.speed(t)
    a = model.decel
    if abs(v) < 1e-12:
        return [Piece(HOLD, t, 0.0, p, d=pc.d, theta0=pc.theta0)]
    return [Piece(LINE, t, abs(v) / a, p, pc.d, v, -math.copysign(a, v), pc.theta0)]
