"""Reservation schedules, conflict detection, priority ordering and robot modes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .geometry import Cell, Disc, Grid

Interval = Tuple[float, float]

FREE, BUSY, EMERG = "Free", "Busy", "Emerg"
MODES = (FREE, BUSY, EMERG)
EVENTS = ("conflicts_detected", "plan_found", "plan_infeasible", "restart_possible", "no_conflict")

_TRANSITIONS = {
    (FREE, "conflicts_detected"): BUSY,
    (FREE, "no_conflict"): FREE,
    (BUSY, "plan_found"): FREE,
    (BUSY, "plan_infeasible"): EMERG,
    (EMERG, "restart_possible"): FREE,
    (EMERG, "plan_infeasible"): EMERG,
    (EMERG, "conflicts_detected"): EMERG,
    (EMERG, "no_conflict"): EMERG,
}


def mode_transition(mode: str, event: str) -> str:
    try:
        return _TRANSITIONS[(mode, event)]
    except KeyError:
        raise ValueError(f"event {event!r} is not allowed in mode {mode!r}") from None


# ------------------------------------------------------------ braking reach

@dataclass
class ReachMap:
    """Cells that a robot may touch while braking from anywhere in a cell.

    The map is translation invariant, so it is stored as a set of cell
    offsets and clipped to the grid on lookup.
    """
    grid: Grid
    offsets: Tuple[Tuple[int, int], ...]
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, cell: Cell) -> FrozenSet[Cell]:
        hit = self._cache.get(cell)
        if hit is None:
            nx, ny = self.grid.nx, self.grid.ny
            hit = frozenset((cell[0] + di, cell[1] + dj) for di, dj in self.offsets
                            if 0 <= cell[0] + di < nx and 0 <= cell[1] + dj < ny)
            self._cache[cell] = hit
        return hit

    def union(self, cells: Iterable[Cell]) -> FrozenSet[Cell]:
        out = set()
        for c in cells:
            out |= self(c)
        return frozenset(out)


def braking_reach_map(grid: Grid, radius: float, d_br: float) -> ReachMap:
    """Cells meeting the cell rectangle inflated by ``radius + d_br``."""
    g = grid.size
    d = radius + d_br
    k = int(math.ceil(d / g)) + 1
    offsets = []
    for di in range(-k, k + 1):
        for dj in range(-k, k + 1):
            # gap between the unit cell and the offset cell along each axis
            gx = max(0, abs(di) - 1) * g
            gy = max(0, abs(dj) - 1) * g
            if math.hypot(gx, gy) <= d + 1e-12:
                offsets.append((di, dj))
    return ReachMap(grid, tuple(sorted(offsets)))


# ------------------------------------------------------------ schedules

def occupancy_intervals(times: np.ndarray, cells: Sequence[Cell], region: Cell,
                        locate: Optional[Callable[[float], Cell]] = None,
                        tol: float = 1e-6) -> List[Interval]:
    """Maximal half-open intervals during which the sampled path is in ``region``.

    ``times`` and ``cells`` are the sample times and the cell under the
    position at each sample.  With ``locate`` (the exact cell at any time),
    entry and exit times are refined by bisection to ``tol``.
    """
    out = []
    start = None
    n = len(times)
    for k in range(n):
        inside = cells[k] == region
        if inside and start is None:
            start = times[0] if k == 0 else _crossing(times[k - 1], times[k], region, True, locate, tol)
        elif not inside and start is not None:
            out.append((start, _crossing(times[k - 1], times[k], region, False, locate, tol)))
            start = None
    if start is not None:
        out.append((start, times[-1]))
    # a region touched only at the last sample has no duration
    return [(a, b) for a, b in out if a < b]


def _crossing(lo, hi, region, entering, locate, tol):
    if locate is None:
        return hi
    # invariant: (locate(lo) == region) != entering, (locate(hi) == region) == entering
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (locate(mid) == region) == entering:
            hi = mid
        else:
            lo = mid
    return hi


def merge_intervals(intervals: Iterable[Interval]) -> List[Interval]:
    out: List[List[float]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def intervals_overlap(xs: Sequence[Interval], ys: Sequence[Interval]) -> bool:
    i = j = 0
    while i < len(xs) and j < len(ys):
        a0, a1 = xs[i]
        b0, b1 = ys[j]
        if a0 < b1 and b0 < a1:
            return True
        if a1 <= b1:
            i += 1
        else:
            j += 1
    return False


@dataclass
class ReservationSchedule:
    robot: int
    t_k: float
    t_fl: float
    entries: Dict[Cell, Tuple[FrozenSet[Cell], List[Interval]]]

    @property
    def regions(self) -> List[Cell]:
        return sorted(self.entries)

    def reserved_cells(self) -> FrozenSet[Cell]:
        out = set()
        for res, _ in self.entries.values():
            out |= res
        return frozenset(out)

    def broadcast(self, mode: str, n_neighbors: int, n_conflicts: int, p0: int) -> dict:
        """Wire record: identity, counts and the per-region reservation intervals."""
        return {
            "id": self.robot,
            "t_k": self.t_k,
            "mode": mode,
            "n_neighbors": n_neighbors,
            "n_conflicts": n_conflicts,
            "p0": p0,
            "regions": [[list(c), [list(iv) for iv in self.entries[c][1]]] for c in self.regions],
        }


def build_schedule(robot: int, position: Callable[[np.ndarray], np.ndarray], t_k: float,
                   R: float, T_br: float, M: ReachMap, horizon: float, h: float,
                   plan_end: float = math.inf) -> ReservationSchedule:
    """Reservation schedule of a timed path over ``[t_k, t_fl]``.

    ``position`` maps an array of times to an ``(n, 2)`` array of positions.
    ``t_fl`` is the first exit from the sensing ball, capped at
    ``t_k + horizon`` and at ``plan_end``.
    """
    grid = M.grid
    t_cap = min(t_k + horizon, max(plan_end, t_k))
    n = max(1, int(math.ceil((t_cap - t_k) / h)))
    ts = t_k + np.arange(n + 1) * ((t_cap - t_k) / n)
    ps = position(ts)
    p0 = ps[0]
    dist = np.hypot(ps[:, 0] - p0[0], ps[:, 1] - p0[1])
    outside = np.nonzero(dist > R)[0]
    t_fl = t_cap
    if len(outside):
        k = int(outside[0])
        lo, hi = ts[k - 1], ts[k]
        while hi - lo > 1e-6:
            mid = 0.5 * (lo + hi)
            q = position(np.array([mid]))[0]
            if math.hypot(q[0] - p0[0], q[1] - p0[1]) > R:
                hi = mid
            else:
                lo = mid
        t_fl = hi
        keep = ts < t_fl
        ts = np.append(ts[keep], t_fl)
        ps = np.vstack([ps[keep], position(np.array([t_fl]))])

    def locate(t):
        q = position(np.array([t]))[0]
        return _clamped_cell(grid, q)

    cells = [_clamped_cell(grid, q) for q in ps]
    ts, cells = _add_corner_samples(position, grid, ts, cells)
    entries: Dict[Cell, Tuple[FrozenSet[Cell], List[Interval]]] = {}
    for region in sorted(set(cells)):
        ivs = occupancy_intervals(ts, cells, region, locate)
        if not ivs:
            continue
        ivs = merge_intervals((a, b + T_br) for a, b in ivs)
        entries[region] = (M(region), ivs)
    return ReservationSchedule(robot, t_k, t_fl, entries)


def _add_corner_samples(position, grid: Grid, ts: np.ndarray, cells: List[Cell], tol: float = 1e-6):
    """Insert samples for cells visited only between two samples.

    Each pair of consecutive samples in different cells is bisected down to
    ``tol``; a midpoint lying in a third cell (a clipped corner) becomes an
    extra sample.
    """
    pending = [(ts[k], ts[k + 1], cells[k], cells[k + 1])
               for k in range(len(ts) - 1) if cells[k] != cells[k + 1]]
    extra = []
    while pending:
        mids = np.array([0.5 * (a + b) for a, b, _, _ in pending])
        mid_cells = [_clamped_cell(grid, q) for q in position(mids)]
        nxt = []
        for (a, b, ca, cb), t, c in zip(pending, mids, mid_cells):
            if c != ca and c != cb:
                extra.append((float(t), c))
            if b - a > 2 * tol:
                if c != ca:
                    nxt.append((a, t, ca, c))
                if c != cb:
                    nxt.append((t, b, c, cb))
        pending = nxt
    if not extra:
        return ts, cells
    merged = sorted(list(zip(ts.tolist(), cells)) + extra, key=lambda e: e[0])
    return np.array([t for t, _ in merged]), [c for _, c in merged]


def _clamped_cell(grid: Grid, q) -> Cell:
    x0, y0, x1, y1 = grid.workspace.bounds
    return grid.cell_of((min(max(q[0], x0), x1), min(max(q[1], y0), y1)))


def stationary_schedule(robot: int, p, radius: float, t_k: float, horizon: float,
                        grid: Grid) -> ReservationSchedule:
    """Schedule of a robot that has come to rest and stays there.

    A robot at rest has no braking distance left, so it reserves only the
    cells under its footprint.
    """
    cell = _clamped_cell(grid, p)
    cells = frozenset(grid.regions_intersecting(Disc((float(p[0]), float(p[1])), radius)))
    return ReservationSchedule(robot, t_k, t_k + horizon, {cell: (cells | {cell}, [(t_k, t_k + horizon)])})


def schedules_conflict(a: ReservationSchedule, b: ReservationSchedule) -> bool:
    for ca, (ra, ia) in a.entries.items():
        for cb, (rb, ib) in b.entries.items():
            if intervals_overlap(ia, ib) and not ra.isdisjoint(rb):
                return True
    return False


def detect_conflicts(mine: ReservationSchedule, neighbors: Iterable[ReservationSchedule]) -> Set[int]:
    """Neighbors whose reserved regions and reservation intervals both meet ours."""
    return {s.robot for s in neighbors if s.robot != mine.robot and schedules_conflict(mine, s)}


# ------------------------------------------------------------ priorities

@dataclass(frozen=True)
class PriorityState:
    robot: int
    n_neighbors: int
    n_conflicts: int
    p0: int
    mode: str = FREE


def has_advantage(j: PriorityState, i: PriorityState) -> bool:
    """Whether ``j`` has the advantage over ``i``: it still has conflicts and
    either more neighbors, or as many neighbors and more conflicts."""
    if j.n_conflicts == 0:
        return False
    if j.n_neighbors != i.n_neighbors:
        return j.n_neighbors > i.n_neighbors
    return j.n_conflicts > i.n_conflicts


def assign_priorities(me: PriorityState, neighbors: Iterable[PriorityState]) -> Set[int]:
    """Neighbors that plan before ``me`` (or that ``me`` must treat as fixed)."""
    out = set()
    for j in neighbors:
        if j.robot == me.robot:
            continue
        if j.mode == EMERG or j.n_conflicts == 0:
            out.add(j.robot)
        elif has_advantage(j, me):
            out.add(j.robot)
        elif not has_advantage(me, j) and j.p0 > me.p0:
            out.add(j.robot)
    return out


def find_cycle(edges: Mapping[int, Iterable[int]]) -> Optional[List[int]]:
    """A directed cycle in ``edges`` if one exists (iterative DFS)."""
    color: Dict[int, int] = {}
    nodes = sorted(set(edges) | {v for vs in edges.values() for v in vs})
    for root in nodes:
        if color.get(root):
            continue
        stack = [(root, iter(sorted(edges.get(root, ()))))]
        path = [root]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[v] = 2
                stack.pop()
                path.pop()
                continue
            c = color.get(nxt, 0)
            if c == 1:
                return path[path.index(nxt):] + [nxt]
            if c == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(sorted(edges.get(nxt, ())))))
    return None


def planning_order(busy: Sequence[int], waits_for: Mapping[int, Set[int]]) -> List[int]:
    """Topological order of busy robots; ties resolved by robot id."""
    busy_set = set(busy)
    deps = {i: {j for j in waits_for.get(i, ()) if j in busy_set} for i in busy}
    order, done = [], set()
    while len(order) < len(busy):
        ready = [i for i in sorted(busy) if i not in done and deps[i] <= done]
        if not ready:
            raise RuntimeError("cyclic planning order")
        for i in ready:
            order.append(i)
            done.add(i)
    return order
