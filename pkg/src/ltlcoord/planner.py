"""Local tree growth with Büchi frontier tracking and global plan completion."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .coordination import ReachMap, ReservationSchedule
from .dynamics import UNICYCLE, BrakingProfile, RobotModel
from .geometry import Capsule, Disc, Grid, Polygon
from .ltl import LassoWord, Nba
from .primitives import LINE, Lattice, Motion, Piece, RestPose
from .product import (INF, NoPathError, ProductBundle, Run, continuation, descend, dijkstra_cycle,
                      dijkstra_reenter, potential_of)


class PlanningError(RuntimeError):
    pass


class UnsatisfiableError(PlanningError):
    pass


# ---------------------------------------------------------------- trajectory

class Trajectory:
    """Vectorised closed-form evaluation of a chain of motion pieces.

    Outside the covered time span the first/last configuration is held.
    """

    def __init__(self, pieces: Sequence[Piece]):
        if not pieces:
            raise ValueError("empty trajectory")
        self.pieces = list(pieces)
        cols = np.array([(pc.t0, pc.dur, pc.p0[0], pc.p0[1], pc.d[0], pc.d[1], pc.v0, pc.acc,
                          pc.theta0, pc.omega) for pc in self.pieces], dtype=float)
        (self.t0, self.dur, self.px, self.py, self.dx, self.dy, self.v0, self.acc,
         self.th, self.om) = cols.T
        self.kind = np.array([pc.kind for pc in self.pieces])
        self._t0_list = [pc.t0 for pc in self.pieces]

    @property
    def t_start(self) -> float:
        return self.pieces[0].t0

    @property
    def t_end(self) -> float:
        return self.pieces[-1].t1

    def _index(self, ts):
        idx = np.searchsorted(self.t0, ts, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def positions(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        idx = self._index(ts)
        tau = np.clip(ts - self.t0[idx], 0.0, self.dur[idx])
        s = self.v0[idx] * tau + 0.5 * self.acc[idx] * tau * tau
        return np.column_stack([self.px[idx] + s * self.dx[idx], self.py[idx] + s * self.dy[idx]])

    def piece_at(self, t: float) -> Piece:
        k = bisect.bisect_right(self._t0_list, t) - 1
        return self.pieces[min(max(k, 0), len(self.pieces) - 1)]

    def position_at(self, t: float):
        pc = self.piece_at(t)
        return pc.position(min(max(t, pc.t0), pc.t1))

    def state_at(self, t: float, kind: str):
        pc = self.piece_at(t)
        tt = min(max(t, pc.t0), pc.t1)
        x = pc.state(tt, kind)
        if t >= pc.t1 and pc is self.pieces[-1]:
            # past the end the robot holds its final pose at rest
            x = (x[0], x[1], x[2] if kind == UNICYCLE else 0.0, 0.0)
        return x

    def input_at(self, t: float, kind: str):
        pc = self.piece_at(t)
        if t >= pc.t1 and pc is self.pieces[-1]:
            return (0.0, 0.0)
        if kind == UNICYCLE:
            return (pc.omega, pc.acc if pc.kind == LINE else 0.0)
        if pc.kind != LINE:
            return (0.0, 0.0)
        return (pc.acc * pc.d[0], pc.acc * pc.d[1])


# ---------------------------------------------------------------- plans

@dataclass
class PlanStep:
    motion: Motion
    x: Optional[int]                 # CTS id reached at the end (None for braking)
    frontier: FrozenSet[int]         # Büchi frontier after arriving
    q: Optional[int] = None          # Büchi state of the committed product run


@dataclass
class Plan:
    steps: List[PlanStep] = field(default_factory=list)
    _traj: Optional[Trajectory] = field(default=None, repr=False)

    @property
    def t_end(self) -> float:
        return self.steps[-1].motion.t1

    def trajectory(self) -> Trajectory:
        if self._traj is None:
            self._traj = Trajectory([pc for st in self.steps for pc in st.motion.pieces])
        return self._traj

    def extend(self, steps: Iterable[PlanStep]):
        self.steps.extend(steps)
        self._traj = None

    def drop_before(self, t: float):
        """Forget steps that ended at or before ``t`` (keeps at least one)."""
        k = 0
        while k < len(self.steps) - 1 and self.steps[k].motion.t1 <= t:
            k += 1
        if k:
            del self.steps[:k]
            self._traj = None

    def step_at(self, t: float) -> int:
        for k, st in enumerate(self.steps):
            if t < st.motion.t1:
                return k
        return len(self.steps) - 1


# ---------------------------------------------------------------- context

@dataclass
class RobotContext:
    """Offline data and per-robot constants used during planning."""
    robot: int
    model: RobotModel
    lattice: Lattice
    bundle: ProductBundle
    profile: BrakingProfile
    radius: float
    reach: ReachMap
    _edge_cells: Dict = field(default_factory=dict, repr=False)

    @property
    def cts(self):
        return self.bundle.cts

    @property
    def pba(self):
        return self.bundle.pba

    @property
    def nba(self) -> Nba:
        return self.bundle.nba

    @property
    def grid(self) -> Grid:
        return self.lattice.grid

    def motion_cells(self, motion: Motion) -> FrozenSet:
        """Cells met by the motion's centre path inflated by ``radius + D_br``.

        Reserved regions are already inflated around the neighbour's cell, so
        keeping this set disjoint from them keeps the two braking areas apart.
        """
        a, b = motion.segment()
        key = (round(a[0], 9), round(a[1], 9), round(b[0], 9), round(b[1], 9))
        hit = self._edge_cells.get(key)
        if hit is None:
            cap = Capsule(a, b, self.radius + self.profile.D_br)
            hit = self._edge_cells[key] = frozenset(self.grid.regions_intersecting(cap))
        return hit

    def potential(self, x: int, frontier: Iterable[int]) -> float:
        return potential_of(self.pba, self.bundle.V, x, frontier)


def update_frontier(prev: Iterable[int], nba: Nba, label, beta: Optional[Iterable[int]] = None) -> FrozenSet[int]:
    """Büchi states reachable from ``prev`` on ``label``, restricted to ``beta``."""
    out = nba.step_set(prev, frozenset(label))
    if beta is not None:
        out = out & frozenset(beta)
    return frozenset(out)


def initial_frontier(ctx: RobotContext, x: int) -> FrozenSet[int]:
    return update_frontier(sorted(ctx.nba.initial), ctx.nba, ctx.cts.labels[x], ctx.pba.beta(x))


def track_state(ctx: RobotContext, q: Optional[int], y: int) -> Optional[int]:
    """Successor of the committed Büchi state ``q`` on entering ``y``.

    Among the admissible successors the one with the lowest potential is
    kept.  Following a single state keeps the progress already made towards
    acceptance, which the minimum over the whole frontier can forget: a
    nondeterministic automaton usually keeps its waiting states alive next
    to the states that have advanced.
    """
    if q is None:
        return None
    V = ctx.bundle.V
    best = None
    for s in sorted(ctx.nba.step(q, ctx.cts.labels[y])):
        p = ctx.pba.pid(y, s)
        if p is not None and (best is None or V[p] < V[best]):
            best = p
    return None if best is None else ctx.pba.pairs[best][1]


# ---------------------------------------------------------------- obstacles

@dataclass
class Reservation:
    cells: FrozenSet
    t0: float
    t1: float


@dataclass
class ObstacleSet:
    static: List[Polygon]
    cells: FrozenSet


def reservations_from(schedules: Iterable[ReservationSchedule]) -> List[Reservation]:
    out = []
    for sch in schedules:
        for _cell, (res, ivs) in sorted(sch.entries.items()):
            for a, b in ivs:
                out.append(Reservation(res, a, b))
    return out


def obstacles_at(static: Sequence[Polygon], reservations: Sequence[Reservation], window: Tuple[float, float],
                 grid: Optional[Grid] = None, area: Optional[Disc] = None) -> ObstacleSet:
    """Static obstacles plus cells reserved during the half-open ``window``."""
    t1, t2 = window
    cells = set()
    for r in reservations:
        if r.t0 < t2 and t1 < r.t1:
            cells |= r.cells
    if area is not None and grid is not None:
        reach = area.radius + grid.size * math.sqrt(2) / 2
        cells = {c for c in cells
                 if math.dist(grid.center(c), area.center) <= reach}
    return ObstacleSet(list(static), frozenset(cells))


def motion_blocked(ctx: RobotContext, motion: Motion, reservations: Sequence[Reservation],
                   t_from: Optional[float] = None) -> bool:
    """Whether the motion's inflated swept cells meet a reservation active
    during the motion (extended by the braking time)."""
    if not reservations:
        return False
    t1 = motion.t0 if t_from is None else max(motion.t0, t_from)
    t2 = motion.t1 + ctx.profile.T_br
    cells = ctx.motion_cells(motion)
    for r in reservations:
        if r.t0 < t2 and t1 < r.t1 and not cells.isdisjoint(r.cells):
            return True
    return False


def plan_blocked(ctx: RobotContext, plan: Plan, reservations, t_k: float, until: float) -> bool:
    for st in plan.steps:
        if st.motion.t1 <= t_k:
            continue
        if st.motion.t0 > until:
            break
        if motion_blocked(ctx, st.motion, reservations, t_k):
            return True
    return False


# ---------------------------------------------------------------- steering

def _metric(ctx: RobotContext, feat, sample) -> float:
    g = ctx.grid.size
    dpos = math.hypot(feat[0] - sample[0], feat[1] - sample[1])
    dang = abs(math.remainder(feat[2] - sample[2], 2 * math.pi))
    return dpos + 0.5 * g * dang / math.pi + 0.5 * g * abs(feat[3] - sample[3]) / ctx.model.v_max


def candidate_motions(ctx: RobotContext, node_x: Optional[int], pose: Optional[RestPose], t0: float):
    """``(motion, destination CTS id)`` pairs available from a tree node."""
    lat, cts = ctx.lattice, ctx.cts
    if node_x is not None:
        x = cts.states[node_x]
        return [(lat.instantiate(x, tp, t0), y) for y, tp in cts.succ[node_x]]
    out = []
    for m in lat.recovery(pose, t0):
        y = cts.index.get(m.dst)
        if y is not None:
            out.append((m, y))
    return out


def steer(ctx: RobotContext, node_x: Optional[int], toward, pose: Optional[RestPose] = None, t0: float = 0.0):
    """Primitive whose end state is nearest to ``toward`` (position, angle, speed)."""
    best = None
    for m, y in candidate_motions(ctx, node_x, pose, t0):
        d = _metric(ctx, ctx.lattice.features(ctx.cts.states[y]), toward)
        if best is None or d < best[0]:
            best = (d, y, m)
    if best is None:
        raise PlanningError("no admissible primitive from this state")
    return best[1], best[2]


# ---------------------------------------------------------------- local tree

@dataclass
class TreeNode:
    x: Optional[int]
    pose: Optional[RestPose]
    frontier: FrozenSet[int]
    t: float
    parent: int
    motion: Optional[Motion]
    position: Tuple[float, float]
    q: Optional[int] = None


@dataclass
class LocalTree:
    nodes: List[TreeNode]
    leaf: Optional[int] = None
    iterations: int = 0

    def path_to(self, k: int) -> List[TreeNode]:
        out = []
        while k >= 0:
            out.append(self.nodes[k])
            k = self.nodes[k].parent
        out.reverse()
        return out


def grow_local_tree(ctx: RobotContext, root: TreeNode, center, R: float, eta: float, n_max: int,
                    reservations: Sequence[Reservation], rng: np.random.Generator,
                    bucket: Optional[float] = None) -> LocalTree:
    """Sampling-based local search from ``root`` until a node leaves the sensing ball.

    Nodes are kept only with a nonempty frontier, a finite potential and a
    motion clear of the reservations active while it is executed.
    """
    tree = LocalTree([root])
    if not root.frontier:
        return tree
    lat, cts, nba = ctx.lattice, ctx.cts, ctx.nba
    bucket = bucket or lat.wait_s / 2
    feats = np.zeros((n_max + 1, 4))
    feats[0] = _node_features(ctx, root)
    seen = set()
    if root.x is not None:
        seen.add((root.x, root.frontier, int(root.t // bucket)))
    g = ctx.grid.size
    vmax = ctx.model.v_max
    cx, cy = center
    for it in range(n_max):
        tree.iterations = it + 1
        r = (R + eta) * math.sqrt(rng.random())
        phi = 2 * math.pi * rng.random()
        sample = (cx + r * math.cos(phi), cy + r * math.sin(phi),
                  2 * math.pi * rng.random(), vmax * rng.random())
        n = len(tree.nodes)
        f = feats[:n]
        dang = np.abs(np.remainder(f[:, 2] - sample[2] + math.pi, 2 * math.pi) - math.pi)
        dist = (np.hypot(f[:, 0] - sample[0], f[:, 1] - sample[1]) + 0.5 * g * dang / math.pi
                + 0.5 * g * np.abs(f[:, 3] - sample[3]) / vmax)
        # ties go to the newest node so that waiting chains can grow
        k = n - 1 - int(np.argmin(dist[::-1]))
        node = tree.nodes[k]
        cands = candidate_motions(ctx, node.x, node.pose, node.t)
        scored = sorted(((_metric(ctx, lat.features(cts.states[y]), sample), y, j)
                         for j, (m, y) in enumerate(cands)))
        for _d, y, j in scored:
            motion = cands[j][0]
            fr = update_frontier(node.frontier, nba, cts.labels[y], ctx.pba.beta(y))
            if not fr or ctx.potential(y, fr) == INF:
                continue
            key = (y, fr, int(motion.t1 // bucket))
            if key in seen:
                continue
            if motion_blocked(ctx, motion, reservations):
                continue
            seen.add(key)
            pos = cts.positions[y]
            tree.nodes.append(TreeNode(y, None, fr, motion.t1, k, motion, pos,
                                       track_state(ctx, node.q, y)))
            feats[len(tree.nodes) - 1] = lat.features(cts.states[y])
            if math.hypot(pos[0] - cx, pos[1] - cy) > R:
                tree.leaf = len(tree.nodes) - 1
                return tree
            break
    return tree


def _node_features(ctx: RobotContext, node: TreeNode):
    if node.x is not None:
        return ctx.lattice.features(ctx.cts.states[node.x])
    return (node.pose.p[0], node.pose.p[1], node.pose.theta if ctx.lattice.is_unicycle else 0.0, 0.0)


# ---------------------------------------------------------------- global completion

def global_completion(ctx: RobotContext, candidates: Iterable[int], preferred: Optional[int] = None) -> Run:
    """Shortest continuation from the best candidate product state.

    ``preferred`` (the product state of the committed run) wins whenever its
    potential is finite.
    """
    V = ctx.bundle.V
    cands = sorted(candidates)
    if not cands:
        raise UnsatisfiableError("no candidate product state")
    if preferred is not None and preferred in cands and V[preferred] < INF:
        best = preferred
    else:
        best = min(cands, key=lambda p: (V[p], p))
    if V[best] == INF:
        raise UnsatisfiableError("task formula cannot be satisfied from here")
    if best in ctx.pba.fstar:
        return continuation(ctx.pba, best)
    return descend(ctx.pba, V, ctx.bundle.nxt, best)


def product_candidates(ctx: RobotContext, x: int, frontier: Iterable[int]) -> List[int]:
    out = []
    for s in sorted(frontier):
        p = ctx.pba.pid(x, s)
        if p is not None:
            out.append(p)
    return out


def steps_from_run(ctx: RobotContext, run: Run, t0: float, frontier: FrozenSet[int]) -> List[PlanStep]:
    """Timed plan steps walking the CTS projection of a product run."""
    cts, lat, pba = ctx.cts, ctx.lattice, ctx.pba
    xs = [pba.pairs[p][0] for p in run.states]
    steps = []
    t = t0
    for p, a, b in zip(run.states[1:], xs, xs[1:]):
        m = lat.instantiate(cts.states[a], cts.template(a, b), t)
        frontier = update_frontier(frontier, ctx.nba, cts.labels[b], pba.beta(b))
        steps.append(PlanStep(m, b, frontier, pba.pairs[p][1]))
        t = m.t1
    return steps


def complete_from(ctx: RobotContext, x: int, frontier: FrozenSet[int], t0: float,
                  q: Optional[int] = None) -> List[PlanStep]:
    preferred = None if q is None else ctx.pba.pid(x, q)
    run = global_completion(ctx, product_candidates(ctx, x, frontier), preferred)
    return steps_from_run(ctx, run, t0, frontier)


def extend_plan(ctx: RobotContext, plan: Plan, until: float):
    """Append global completions until the plan covers ``until``."""
    while plan.t_end < until:
        last = plan.steps[-1]
        more = complete_from(ctx, last.x, last.frontier, last.motion.t1, last.q)
        if not more:
            raise PlanningError("global completion produced an empty run")
        plan.extend(more)


@dataclass
class InitialPlan:
    plan: Plan
    prefix: List[int]          # CTS ids from the start state to the accepting state
    cycle: List[int]           # CTS ids after the accepting state, back to it
    lasso: LassoWord
    q0: Optional[int] = None   # Büchi state paired with the start state


def initial_plan(ctx: RobotContext, x0: int, t0: float = 0.0) -> InitialPlan:
    """Prefix to the self-reachable set followed by a shortest accepting cycle."""
    pba, V = ctx.pba, ctx.bundle.V
    fr0 = initial_frontier(ctx, x0)
    cands = product_candidates(ctx, x0, fr0)
    if not cands or min(V[p] for p in cands) == INF:
        raise UnsatisfiableError(f"robot {ctx.robot}: task formula unsatisfiable from its start")
    best = min(cands, key=lambda p: (V[p], p))
    prefix_run = descend(pba, V, ctx.bundle.nxt, best)
    # a self-reachable state need not lie on a cycle through itself; walk
    # forward through the set until one does
    seen = set()
    while True:
        end = prefix_run.states[-1]
        try:
            cycle_run = dijkstra_cycle(pba, end)
            break
        except NoPathError:
            if end in seen:
                raise PlanningError("no accepting cycle in the self-reachable set")
            seen.add(end)
            hop = dijkstra_reenter(pba, end)
            prefix_run = Run(prefix_run.states + hop.states[1:], prefix_run.length + hop.length)
    run = Run(prefix_run.states + cycle_run.states[1:], prefix_run.length + cycle_run.length)
    steps = steps_from_run(ctx, run, t0, fr0)
    if not steps:
        raise PlanningError("empty initial plan")
    plan = Plan(steps)
    labels = ctx.cts.labels
    prefix = [pba.pairs[p][0] for p in prefix_run.states]
    cycle = [pba.pairs[p][0] for p in cycle_run.states[1:]]
    lasso = LassoWord(tuple(labels[x] for x in prefix), tuple(labels[x] for x in cycle))
    return InitialPlan(plan, prefix, cycle, lasso, pba.pairs[best][1])
