"""Round-synchronous multi-robot coordination engine with safety monitors."""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np

from . import coordination as co
from .coordination import BUSY, EMERG, FREE, PriorityState, ReservationSchedule
from .dynamics import RobotModel, braking_profile
from .geometry import Grid, Workspace
from .ltl import eval_lasso_semantics, parse, recurrence_atoms, to_nba
from .planner import (InitialPlan, Plan, PlanStep, PlanningError, Reservation, RobotContext, Trajectory,
                      TreeNode, complete_from, extend_plan, grow_local_tree, initial_frontier, initial_plan,
                      motion_blocked, plan_blocked, reservations_from)
from .primitives import LINE, Lattice, RestPose, brake_pieces
from .product import ProductBundle, build_bundle, bundle_key, cached_bundle

log = logging.getLogger(__name__)

UNDEFINED = None


class SafetyViolationError(RuntimeError):
    """Raised when the safety monitor fires and the run is set to abort.

    ``reproduction`` holds what is needed to replay the run: scenario name,
    seed, duration and the offending monitor record.
    """

    def __init__(self, violation: dict, reproduction: dict):
        self.violation = violation
        self.reproduction = reproduction
        super().__init__(f"safety violation at t={violation.get('t')}: {violation}")


@dataclass
class RobotConfig:
    id: int
    model: RobotModel
    radius: float
    formula: str
    start: Tuple[float, float]
    p0: int
    heading: float = 0.0
    braking: Optional[str] = None


@dataclass
class SimConfig:
    workspace: Workspace
    grid_size: float
    robots: List[RobotConfig]
    R: float
    duration: float
    delta: float = 0.1
    h: float = 0.05
    seed: int = 0
    n_max: int = 2000
    eta: Optional[float] = None
    t_max: float = 30.0
    wait_s: float = 0.5
    name: str = ""

    def sensing_margin(self) -> float:
        """Sensing radius minus the bound needed for collision avoidance."""
        need = 0.0
        for rc in self.robots:
            prof = braking_profile(rc.model, rc.braking)
            need = max(need, 2 * (prof.D_br + self.delta * rc.model.v_max))
        return self.R - need


# ------------------------------------------------------------------ monitors

@dataclass
class SatisfactionMonitor:
    targets: List[str]
    seen: Set[str] = field(default_factory=set)
    rounds: int = 0
    visits: Dict[str, int] = field(default_factory=dict)
    _prev: FrozenSet[str] = frozenset()

    def observe(self, label: FrozenSet[str]) -> bool:
        """Record the label under the robot; True when a round completes.

        A target counts as visited when the robot enters it, so a robot that
        stays inside a target does not complete further rounds.
        """
        done = False
        for a in self.targets:
            if a in label and a not in self._prev:
                self.visits[a] = self.visits.get(a, 0) + 1
                self.seen.add(a)
        if self.targets and self.seen >= set(self.targets):
            self.rounds += 1
            self.seen = set()
            done = True
        self._prev = label
        return done


def safety_violations(positions: Dict[int, Tuple[float, float]], radii: Dict[int, float],
                      workspace: Workspace) -> List[dict]:
    out = []
    ids = sorted(positions)
    for a in range(len(ids)):
        i = ids[a]
        pi = positions[i]
        clear = workspace.clearance(pi)
        if not clear - radii[i] > 0:
            out.append({"kind": "obstacle", "robot": i, "gap": clear - radii[i]})
        for b in range(a + 1, len(ids)):
            j = ids[b]
            pj = positions[j]
            d = math.hypot(pi[0] - pj[0], pi[1] - pj[1])
            if not d > radii[i] + radii[j]:
                out.append({"kind": "robot", "robots": [i, j], "gap": d - radii[i] - radii[j]})
    return out


def constraint_violations(model: RobotModel, state, u, tol: float = 1e-7) -> List[str]:
    out = []
    if not model.state_ok(state, tol):
        out.append("velocity")
    if not model.input_ok(u, tol):
        out.append("input")
    return out


# ------------------------------------------------------------------ runtime

@dataclass
class RobotRuntime:
    cfg: RobotConfig
    ctx: RobotContext
    mode: str = FREE
    plan: Optional[Plan] = None
    brake: Optional[Trajectory] = None
    brake_line: Optional[tuple] = None
    stop_pose: Optional[RestPose] = None
    stop_x: Optional[int] = None
    frontier: FrozenSet[int] = frozenset()
    q: Optional[int] = None
    last_x: Optional[int] = None
    arrived_until: float = 0.0
    emerg_since: Optional[float] = None
    deadlock: bool = False
    schedule: Optional[ReservationSchedule] = None
    monitor: Optional[SatisfactionMonitor] = None
    initial: Optional[InitialPlan] = None

    @property
    def id(self) -> int:
        return self.cfg.id

    def trajectory(self) -> Trajectory:
        if self.mode == EMERG:
            return self.brake
        return self.plan.trajectory()


@dataclass
class SimReport:
    config: SimConfig
    rows: List[str]
    events: List[dict]
    metrics: dict
    safety: List[dict]
    constraints: List[dict]
    missed_conflicts: List[dict]
    priority_cycles: List[list]
    initial_plans: Dict[int, InitialPlan]
    lasso_ok: Dict[int, bool]
    replan_times: List[float]
    livelock_flags: List[dict]

    def trajectories_csv(self) -> str:
        return "t,robot,x,y,theta_or_vx,v_or_vy,mode\n" + "".join(self.rows)

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)


def _r6(x: float) -> float:
    return float(f"{x:.6f}")


class Simulator:
    def __init__(self, cfg: SimConfig, cache_dir: Optional[str] = None, abort_on_violation: bool = True):
        self.cfg = cfg
        self.abort_on_violation = abort_on_violation
        self.grid = Grid(cfg.workspace, cfg.grid_size)
        self.eta = cfg.eta if cfg.eta is not None else cfg.grid_size
        self.robots: Dict[int, RobotRuntime] = {}
        bundles: Dict[str, ProductBundle] = {}
        reach_maps = {}
        for rc in sorted(cfg.robots, key=lambda r: r.id):
            prof = braking_profile(rc.model, rc.braking)
            lattice = Lattice(rc.model, self.grid, cfg.wait_s)
            formula = parse(rc.formula)
            key = bundle_key(rc.model, rc.radius, prof, rc.formula, cfg.workspace, cfg.grid_size, cfg.wait_s)
            if key not in bundles:
                bundles[key] = cached_bundle(
                    key, lambda: build_bundle(lattice, rc.radius, prof.D_br, to_nba(formula)), cache_dir)
            bundle = bundles[key]
            # the cached lattice must be the one whose templates the bundle refers to
            lattice = bundle.cts.lattice
            rkey = (rc.radius, prof.D_br)
            if rkey not in reach_maps:
                reach_maps[rkey] = co.braking_reach_map(self.grid, rc.radius, prof.D_br)
            ctx = RobotContext(rc.id, rc.model, lattice, bundle, prof, rc.radius, reach_maps[rkey])
            rt = RobotRuntime(rc, ctx)
            rt.monitor = SatisfactionMonitor(recurrence_atoms(formula))
            self.robots[rc.id] = rt

    # -------------------------------------------------------------- helpers
    def horizon(self, rt: RobotRuntime) -> float:
        return 2 * self.cfg.R / rt.cfg.model.v_max + rt.ctx.profile.T_br

    def _start(self, rt: RobotRuntime):
        ctx = rt.ctx
        cell = self.grid.cell_of(rt.cfg.start)
        x = ctx.lattice.start_state(cell, rt.cfg.heading)
        if x not in ctx.cts.index:
            raise PlanningError(f"robot {rt.id}: start state is not obstacle-safe")
        c = self.grid.center(cell)
        if math.hypot(c[0] - rt.cfg.start[0], c[1] - rt.cfg.start[1]) > 1e-9:
            raise PlanningError(f"robot {rt.id}: start must be a cell centre")
        x0 = ctx.cts.index[x]
        rt.initial = initial_plan(ctx, x0)
        rt.plan = Plan(list(rt.initial.plan.steps))
        rt.frontier = initial_frontier(ctx, x0)
        rt.q = rt.initial.q0
        rt.last_x = x0

    def _at_rest(self, rt: RobotRuntime) -> bool:
        return rt.mode == EMERG and rt.stop_pose is not None

    def _schedule(self, rt: RobotRuntime, t_k: float) -> ReservationSchedule:
        if self._at_rest(rt):
            return co.stationary_schedule(rt.id, rt.stop_pose.p, rt.cfg.radius, t_k, self.horizon(rt),
                                          self.grid)
        traj = rt.trajectory()
        return co.build_schedule(rt.id, traj.positions, t_k, self.cfg.R, rt.ctx.profile.T_br,
                                 rt.ctx.reach, self.horizon(rt), self.cfg.h)

    def _ensure_plan(self, rt: RobotRuntime, t_k: float):
        if rt.mode == EMERG:
            return
        rt.plan.drop_before(t_k)
        extend_plan(rt.ctx, rt.plan, t_k + self.horizon(rt) + self.cfg.delta + rt.ctx.profile.T_br)

    def _root(self, rt: RobotRuntime, t_k: float, position) -> Tuple[Optional[TreeNode], Optional[PlanStep]]:
        """Tree root for a moving robot: the end of its committed primitive."""
        plan = rt.plan
        k = plan.step_at(t_k)
        cur = plan.steps[k]
        if cur.motion.t0 >= t_k - 1e-9:
            return TreeNode(rt.last_x, None, rt.frontier, t_k, -1, None, position, rt.q), None
        pos = rt.ctx.cts.positions[cur.x]
        return TreeNode(cur.x, None, cur.frontier, cur.motion.t1, -1, None, pos, cur.q), cur

    def _plan_tree(self, rt: RobotRuntime, root: TreeNode, committed: Optional[PlanStep], reservations,
                   t_k: float, center, rng) -> Tuple[Optional[Plan], dict]:
        ctx = rt.ctx
        t0 = time.perf_counter()
        tree = grow_local_tree(ctx, root, center, self.cfg.R, self.eta, self.cfg.n_max, reservations, rng)
        info = {"nodes": len(tree.nodes), "iterations": tree.iterations}
        if tree.leaf is None:
            self._replan_times.append(time.perf_counter() - t0)
            return None, info
        path = tree.path_to(tree.leaf)
        steps = [] if committed is None else [committed]
        steps += [PlanStep(n.motion, n.x, n.frontier, n.q) for n in path[1:]]
        leaf = path[-1]
        try:
            steps += complete_from(ctx, leaf.x, leaf.frontier, leaf.t, leaf.q)
        except PlanningError:
            self._replan_times.append(time.perf_counter() - t0)
            return None, info
        self._replan_times.append(time.perf_counter() - t0)
        return Plan(steps), info

    def _start_braking(self, rt: RobotRuntime, t_k: float):
        traj = rt.trajectory()
        pc = traj.piece_at(t_k)
        line = None
        if rt.mode != EMERG:
            k = rt.plan.step_at(t_k)
            line = rt.plan.steps[k].motion.line if pc.kind == LINE else None
        pieces = brake_pieces(pc, min(max(t_k, pc.t0), pc.t1), rt.cfg.model)
        rt.brake = Trajectory(pieces)
        rt.brake_line = line
        rt.stop_pose = None
        rt.stop_x = None

    def _settle(self, rt: RobotRuntime, t: float):
        """Once braking has finished, record the rest pose."""
        if rt.mode != EMERG or rt.stop_pose is not None or t < rt.brake.t_end:
            return
        ctx = rt.ctx
        pc = rt.brake.pieces[-1]
        p = rt.brake.position_at(t)
        theta = pc.heading(pc.t1) if ctx.lattice.is_unicycle else 0.0
        cell = self.grid.cell_of(p)
        c = self.grid.center(cell)
        at_center = math.hypot(c[0] - p[0], c[1] - p[1]) < 1e-9
        q = theta / (math.pi / 4)
        on_heading = (not ctx.lattice.is_unicycle) or abs(q - round(q)) < 1e-9
        line = rt.brake_line
        rt.stop_pose = RestPose((p[0], p[1]), theta, cell, None if at_center else line)
        if at_center and on_heading:
            h = int(round(q)) % 8 if ctx.lattice.is_unicycle else -1
            rt.stop_x = ctx.cts.index.get((cell[0], cell[1], h, 0))

    def _lower_reservation(self, rt: RobotRuntime, t_k: float) -> Reservation:
        p = rt.trajectory().position_at(t_k)
        cell = co._clamped_cell(self.grid, p)
        return Reservation(rt.ctx.reach(cell), t_k, t_k + self.cfg.delta + rt.ctx.profile.T_br)

    # -------------------------------------------------------------- main loop
    def run(self) -> SimReport:
        cfg = self.cfg
        self._replan_times: List[float] = []
        events: List[dict] = []
        rows: List[str] = []
        safety: List[dict] = []
        constraints: List[dict] = []
        missed: List[dict] = []
        cycles: List[list] = []
        livelock: List[dict] = []
        ct_rounds = 0
        ct_pairs = 0
        robots = [self.robots[i] for i in sorted(self.robots)]
        radii = {rt.id: rt.cfg.radius for rt in robots}
        lasso_ok = {}
        for rt in robots:
            self._start(rt)
            lasso_ok[rt.id] = eval_lasso_semantics(parse(rt.cfg.formula), rt.initial.lasso)
            events.append({"t": 0.0, "type": "initial_plan", "robot": rt.id,
                           "prefix": len(rt.initial.prefix), "cycle": len(rt.initial.cycle),
                           "lasso_ok": lasso_ok[rt.id]})
        n_rounds = int(round(cfg.duration / cfg.delta))
        n_sub = max(1, int(round(cfg.delta / cfg.h)))
        for k in range(n_rounds):
            t_k = k * cfg.delta
            for rt in robots:
                self._settle(rt, t_k)
                self._ensure_plan(rt, t_k)
                rt.schedule = self._schedule(rt, t_k)
            pos = {rt.id: rt.trajectory().position_at(t_k) for rt in robots}
            nbrs: Dict[int, Set[int]] = {rt.id: set() for rt in robots}
            for a in range(len(robots)):
                for b in range(a + 1, len(robots)):
                    i, j = robots[a].id, robots[b].id
                    if math.dist(pos[i], pos[j]) <= cfg.R:
                        nbrs[i].add(j)
                        nbrs[j].add(i)
            conflicts: Dict[int, Set[int]] = {rt.id: set() for rt in robots}
            pairs = []
            for a in range(len(robots)):
                for b in range(a + 1, len(robots)):
                    i, j = robots[a].id, robots[b].id
                    if j in nbrs[i] and co.schedules_conflict(robots[a].schedule, robots[b].schedule):
                        conflicts[i].add(j)
                        conflicts[j].add(i)
                        pairs.append([i, j])
            if pairs:
                ct_rounds += 1
                ct_pairs += len(pairs)
                events.append({"t": _r6(t_k), "type": "conflicts", "pairs": pairs})
            missed.extend(self._missed_conflicts(robots, nbrs, conflicts, t_k))

            # mode update and planning order
            busy = []
            for rt in robots:
                if rt.mode == EMERG:
                    continue
                ev = "conflicts_detected" if conflicts[rt.id] else "no_conflict"
                new = co.mode_transition(rt.mode, ev)
                if new != rt.mode:
                    events.append({"t": _r6(t_k), "type": "mode", "robot": rt.id, "from": rt.mode,
                                   "to": new, "event": ev})
                rt.mode = new
                if new == BUSY:
                    busy.append(rt.id)
            pstate = {rt.id: PriorityState(rt.id, len(nbrs[rt.id]), len(conflicts[rt.id]), rt.cfg.p0, rt.mode)
                      for rt in robots}
            higher = {i: co.assign_priorities(pstate[i], [pstate[j] for j in sorted(nbrs[i])]) for i in busy}
            waits = {i: {j for j in higher[i] if j in conflicts[i] and pstate[j].mode != EMERG} for i in busy}
            cyc = co.find_cycle(waits)
            if cyc:
                cycles.append(cyc)
            for i in co.planning_order(busy, higher):
                self._replan_busy(self.robots[i], higher[i], nbrs[i], t_k, k, events)
            newly = set()
            for rt in robots:
                if rt.mode == EMERG and rt.emerg_since == t_k:
                    newly.add(rt.id)
            for rt in robots:
                if rt.mode == EMERG and rt.id not in newly:
                    self._try_restart(rt, nbrs[rt.id], t_k, k, events)
            for rt in robots:
                if rt.mode == EMERG and not rt.deadlock and t_k - rt.emerg_since > cfg.t_max:
                    rt.deadlock = True
                    events.append({"t": _r6(t_k), "type": "deadlock", "robot": rt.id})
                if rt.mode == FREE:
                    cur = rt.plan.steps[rt.plan.step_at(t_k)]
                    if rt.ctx.potential(cur.x, cur.frontier) == math.inf:
                        livelock.append({"t": _r6(t_k), "robot": rt.id})

            # advance
            for s in range(n_sub):
                t = t_k + s * cfg.h
                self._record(robots, t, rows, radii, safety, constraints, events)
            t_next = (k + 1) * cfg.delta
            for rt in robots:
                self._arrivals(rt, t_next)
        metrics = self._metrics(robots, ct_rounds, ct_pairs, safety, constraints, missed, cycles, livelock)
        return SimReport(cfg, rows, events, metrics, safety, constraints, missed, cycles,
                         {rt.id: rt.initial for rt in robots}, lasso_ok, list(self._replan_times), livelock)

    # -------------------------------------------------------------- round pieces
    def _replan_busy(self, rt: RobotRuntime, higher: Set[int], nbrs: Set[int], t_k: float, k: int, events):
        res = reservations_from(self.robots[j].schedule for j in sorted(higher))
        for j in sorted(nbrs - higher):
            res.append(self._lower_reservation(self.robots[j], t_k))
        ctx = rt.ctx
        if not plan_blocked(ctx, rt.plan, res, t_k, rt.schedule.t_fl):
            rt.mode = co.mode_transition(rt.mode, "plan_found")
            events.append({"t": _r6(t_k), "type": "replan", "robot": rt.id, "result": "kept"})
            events.append({"t": _r6(t_k), "type": "mode", "robot": rt.id, "from": BUSY, "to": FREE,
                           "event": "plan_found"})
            return
        position = rt.trajectory().position_at(t_k)
        root, committed = self._root(rt, t_k, position)
        plan, info = None, {}
        if committed is None or not motion_blocked(ctx, committed.motion, res, t_k):
            rng = np.random.default_rng([self.cfg.seed, k, rt.id])
            plan, info = self._plan_tree(rt, root, committed, res, t_k, position, rng)
        if plan is not None:
            rt.plan = plan
            self._ensure_plan(rt, t_k)
            rt.mode = co.mode_transition(rt.mode, "plan_found")
            events.append({"t": _r6(t_k), "type": "replan", "robot": rt.id, "result": "tree", **info})
            events.append({"t": _r6(t_k), "type": "mode", "robot": rt.id, "from": BUSY, "to": FREE,
                           "event": "plan_found"})
        else:
            self._start_braking(rt, t_k)
            rt.mode = co.mode_transition(rt.mode, "plan_infeasible")
            rt.emerg_since = t_k
            events.append({"t": _r6(t_k), "type": "replan", "robot": rt.id, "result": "failed", **info})
            events.append({"t": _r6(t_k), "type": "mode", "robot": rt.id, "from": BUSY, "to": EMERG,
                           "event": "plan_infeasible"})
        rt.schedule = self._schedule(rt, t_k)

    def _try_restart(self, rt: RobotRuntime, nbrs: Set[int], t_k: float, k: int, events):
        self._settle(rt, t_k)
        if rt.stop_pose is None:
            return
        res = reservations_from(self.robots[j].schedule for j in sorted(nbrs))
        p = rt.stop_pose.p
        if rt.stop_x is not None:
            root = TreeNode(rt.stop_x, None, rt.frontier, t_k, -1, None, p, rt.q)
        else:
            root = TreeNode(None, rt.stop_pose, rt.frontier, t_k, -1, None, p, rt.q)
        rng = np.random.default_rng([self.cfg.seed, k, rt.id])
        plan, info = self._plan_tree(rt, root, None, res, t_k, p, rng)
        if plan is None:
            return
        rt.mode = co.mode_transition(rt.mode, "restart_possible")
        rt.plan = plan
        rt.brake = None
        rt.emerg_since = None
        self._ensure_plan(rt, t_k)
        rt.schedule = self._schedule(rt, t_k)
        events.append({"t": _r6(t_k), "type": "replan", "robot": rt.id, "result": "restart", **info})
        events.append({"t": _r6(t_k), "type": "mode", "robot": rt.id, "from": EMERG, "to": FREE,
                       "event": "restart_possible"})

    def _arrivals(self, rt: RobotRuntime, t_next: float):
        if rt.mode == EMERG:
            rt.arrived_until = t_next
            return
        for st in rt.plan.steps:
            t1 = st.motion.t1
            if t1 <= rt.arrived_until:
                continue
            if t1 > t_next:
                break
            rt.frontier = st.frontier
            rt.q = st.q
            rt.last_x = st.x
        rt.arrived_until = t_next

    def _record(self, robots, t, rows, radii, safety, constraints, events):
        positions = {}
        for rt in robots:
            traj = rt.trajectory()
            kind = rt.cfg.model.kind
            x = traj.state_at(t, kind)
            u = traj.input_at(t, kind)
            positions[rt.id] = (x[0], x[1])
            # adding 0.0 turns negative zero into zero so the text is sign-stable
            c = [v + 0.0 for v in x[:4]]
            rows.append(f"{t:.6f},{rt.id},{c[0]:.6f},{c[1]:.6f},{c[2]:.6f},{c[3]:.6f},{rt.mode}\n")
            bad = constraint_violations(rt.cfg.model, x, u)
            if bad:
                constraints.append({"t": _r6(t), "robot": rt.id, "kind": bad})
            label = self.grid.label_of(self.grid.cell_of(_clip(self.cfg.workspace, x)))
            if rt.monitor.observe(label):
                events.append({"t": _r6(t), "type": "round_complete", "robot": rt.id,
                               "count": rt.monitor.rounds})
        for v in safety_violations(positions, radii, self.cfg.workspace):
            v["t"] = _r6(t)
            safety.append(v)
            events.append({"type": "violation", **v})
            if self.abort_on_violation:
                raise SafetyViolationError(v, {"scenario": self.cfg.name, "seed": self.cfg.seed,
                                               "duration_s": self.cfg.duration, "violation": v})

    def _inflated(self, rt: RobotRuntime) -> float:
        """Footprint radius plus the braking distance still available."""
        return rt.cfg.radius + (0.0 if self._at_rest(rt) else rt.ctx.profile.D_br)

    def _missed_conflicts(self, robots, nbrs, conflicts, t_k) -> List[dict]:
        """Inflated footprints of conflict-free robots and their neighbors stay
        disjoint until either leaves its sensing ball."""
        out = []
        by_id = {rt.id: rt for rt in robots}
        for rt in robots:
            if conflicts[rt.id]:
                continue
            for j in sorted(nbrs[rt.id]):
                other = by_id[j]
                t_end = min(rt.schedule.t_fl, other.schedule.t_fl)
                n = max(2, int(math.ceil((t_end - t_k) / (self.cfg.h / 2))) + 1)
                ts = np.linspace(t_k, t_end, n)
                pa = rt.trajectory().positions(ts)
                pb = other.trajectory().positions(ts)
                gap = np.hypot(pa[:, 0] - pb[:, 0], pa[:, 1] - pb[:, 1]) - (
                    self._inflated(rt) + self._inflated(other))
                if gap.min() <= 0:
                    out.append({"t": _r6(t_k), "robots": [rt.id, j], "gap": float(gap.min())})
        return out

    def _metrics(self, robots, ct_rounds, ct_pairs, safety, constraints, missed, cycles, livelock) -> dict:
        times = self._replan_times
        return {
            "scenario": self.cfg.name,
            "seed": self.cfg.seed,
            "duration_s": self.cfg.duration,
            "CT_rounds": ct_rounds,
            "CT_pairs": ct_pairs,
            "CT_note": "CT_rounds counts detection rounds with at least one conflicting pair; "
                       "CT_pairs counts every conflicting pair once per round",
            "ATLR_s": (sum(times) / len(times)) if times else UNDEFINED,
            "MTLR_s": max(times) if times else UNDEFINED,
            "n_local_replans": len(times),
            "surveillance_rounds": {str(rt.id): rt.monitor.rounds for rt in robots},
            "target_visits": {str(rt.id): dict(sorted(rt.monitor.visits.items())) for rt in robots},
            "deadlock": {str(rt.id): rt.deadlock for rt in robots},
            "safety_violations": len(safety),
            "constraint_violations": len(constraints),
            "missed_conflicts": len(missed),
            "priority_cycles": len(cycles),
            "livelock_flags": len(livelock),
        }


def _clip(ws: Workspace, x):
    x0, y0, x1, y1 = ws.bounds
    return (min(max(x[0], x0), x1), min(max(x[1], y0), y1))


def run(cfg: SimConfig, cache_dir: Optional[str] = None, abort_on_violation: bool = True) -> SimReport:
    return Simulator(cfg, cache_dir, abort_on_violation).run()
