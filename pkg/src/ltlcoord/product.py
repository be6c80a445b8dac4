"""Finite abstraction, product Büchi automaton and potential functions."""
from __future__ import annotations

import hashlib
import heapq
import math
import os
import pickle
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .geometry import Grid
from .ltl import Nba, _sccs
from .primitives import Lattice, State, Template

INF = math.inf
CACHE_ENV = "LTLCOORD_CACHE_DIR"
CACHE_VERSION = 3


class NoPathError(RuntimeError):
    pass


class EmptyStateSetError(ValueError):
    pass


# ---------------------------------------------------------------------- CTS

@dataclass
class Cts:
    """Controlled transition system over lattice states.

    ``succ[x]`` lists ``(x', template)`` pairs; the template is the input that
    realises the transition.  Every state is an initial state.
    """
    lattice: Lattice
    states: List[State]
    index: Dict[State, int]
    succ: List[List[Tuple[int, Template]]]
    labels: List[FrozenSet[str]]
    positions: List[Tuple[float, float]]

    def __len__(self):
        return len(self.states)

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.succ)

    def weight(self, x: int, y: int) -> float:
        (ax, ay), (bx, by) = self.positions[x], self.positions[y]
        return math.hypot(bx - ax, by - ay)

    def template(self, x: int, y: int) -> Template:
        for z, tp in self.succ[x]:
            if z == y:
                return tp
        raise KeyError((x, y))


def build_cts(lattice: Lattice, radius: float, d_br: float) -> Cts:
    """Lattice states whose inflated footprint is obstacle free, with edges
    whose swept segment keeps the same clearance ``radius + d_br``."""
    grid: Grid = lattice.grid
    ws = grid.workspace
    need = radius + d_br
    safe_cells = {}
    for cell in grid.cells:
        c = grid.center(cell)
        safe_cells[cell] = ws.clearance(c) >= need
    states: List[State] = []
    for cell in grid.cells:
        if safe_cells[cell]:
            states.extend(lattice.rest_states(cell))
            states.extend(lattice.moving_states(cell))
    if not states:
        raise EmptyStateSetError("no obstacle-safe lattice state in the workspace")
    index = {x: k for k, x in enumerate(states)}
    seg_ok: Dict[Tuple, bool] = {}
    succ: List[List[Tuple[int, Template]]] = []
    for x in states:
        out = []
        for tp, y in lattice.successors(x):
            k = index.get(y)
            if k is None:
                continue
            if (tp.dst[0], tp.dst[1]) != (0, 0):
                key = (x[0], x[1], y[0], y[1])
                ok = seg_ok.get(key)
                if ok is None:
                    a, b = grid.center((x[0], x[1])), grid.center((y[0], y[1]))
                    ok = seg_ok[key] = ws.segment_clearance(a, b) >= need
                if not ok:
                    continue
            out.append((k, tp))
        succ.append(out)
    labels = [grid.label_of((x[0], x[1])) for x in states]
    positions = [grid.center((x[0], x[1])) for x in states]
    return Cts(lattice, states, index, succ, labels, positions)


# ---------------------------------------------------------------------- PBA

@dataclass
class Pba:
    cts: Cts
    nba: Nba
    pairs: List[Tuple[int, int]]                 # product id -> (cts id, nba state)
    index: Dict[Tuple[int, int], int]
    succ: List[List[int]]
    weights: List[List[float]]
    accepting: Set[int]
    initial: Set[int]
    fstar: Set[int] = field(default_factory=set)

    def __len__(self):
        return len(self.pairs)

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self.succ)

    def beta(self, x: int) -> FrozenSet[int]:
        """Büchi states paired with CTS state ``x`` in the product."""
        return frozenset(s for s in range(self.nba.n_states) if (x, s) in self.index)

    def pid(self, x: int, s: int) -> Optional[int]:
        return self.index.get((x, s))


def build_pba(cts: Cts, nba: Nba) -> Pba:
    """Product restricted to states reachable from the initial product states.

    Büchi moves are gated by the label of the target CTS state.
    """
    pairs: List[Tuple[int, int]] = []
    index: Dict[Tuple[int, int], int] = {}

    def get(key):
        k = index.get(key)
        if k is None:
            k = index[key] = len(pairs)
            pairs.append(key)
        return k

    initial = set()
    init_states = sorted(nba.initial)
    for x in range(len(cts)):
        for s in sorted(nba.step_set(init_states, cts.labels[x])):
            initial.add(get((x, s)))
    succ: List[List[int]] = []
    weights: List[List[float]] = []
    k = 0
    while k < len(pairs):
        x, s = pairs[k]
        out, ws = [], []
        px = cts.positions[x]
        for y, _tp in cts.succ[x]:
            py = cts.positions[y]
            w = math.hypot(py[0] - px[0], py[1] - px[1])
            for t in nba.step(s, cts.labels[y]):
                out.append(get((y, t)))
                ws.append(w)
        succ.append(out)
        weights.append(ws)
        k += 1
    accepting = {k for k, (x, s) in enumerate(pairs) if s in nba.accepting}
    pba = Pba(cts, nba, pairs, index, succ, weights, accepting, initial)
    pba.fstar = max_self_reachable(pba)
    return pba


def max_self_reachable(pba) -> Set[int]:
    """Largest set of accepting states that each reach the set again.

    An accepting state belongs to it iff it has a successor from which an
    accepting state lying on a cycle is reachable.
    """
    n = len(pba.succ)
    comps = _sccs(range(n), pba.succ)
    on_cycle = set()
    for comp in comps:
        if len(comp) > 1:
            on_cycle |= comp
        else:
            (v,) = comp
            if v in pba.succ[v]:
                on_cycle.add(v)
    core = [v for v in pba.accepting if v in on_cycle]
    pred = _predecessors(pba.succ)
    reach = set(core)
    stack = list(core)
    while stack:
        v = stack.pop()
        for u in pred[v]:
            if u not in reach:
                reach.add(u)
                stack.append(u)
    return {v for v in pba.accepting if any(w in reach for w in pba.succ[v])}


def _predecessors(succ):
    pred = [[] for _ in succ]
    for u, outs in enumerate(succ):
        for v in outs:
            pred[v].append(u)
    return pred


# --------------------------------------------------------------- potentials

def potentials(pba) -> List[float]:
    """Shortest position-length distance to the maximal self-reachable set."""
    return potential_table(pba)[0]


def potential_table(pba):
    """Potentials plus, for each finite state, the successor that realised it.

    Following the successor pointers from any state walks a shortest run into
    the self-reachable set; unlike a greedy Bellman descent it cannot loop on
    zero-length edges because each pointer targets an earlier-settled state.
    """
    n = len(pba.succ)
    pred: List[List[Tuple[int, float]]] = [[] for _ in range(n)]
    for u in range(n):
        for v, w in zip(pba.succ[u], pba.weights[u]):
            pred[v].append((u, w))
    dist = [INF] * n
    nxt = [-1] * n
    heap = []
    for v in sorted(pba.fstar):
        dist[v] = 0.0
        heap.append((0.0, v))
    heapq.heapify(heap)
    done = [False] * n
    while heap:
        d, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for u, w in pred[v]:
            nd = d + w
            if nd < dist[u]:
                dist[u] = nd
                nxt[u] = v
                heapq.heappush(heap, (nd, u))
    return dist, nxt


def potential_of(pba, V, x: int, M: Iterable[int]) -> float:
    best = INF
    for s in M:
        k = pba.index.get((x, s))
        if k is not None and V[k] < best:
            best = V[k]
    return best


@dataclass
class Run:
    states: List[int]
    length: float


def dijkstra_targets(pba, source: int, targets) -> Run:
    """Shortest run from ``source`` into ``targets`` (empty run if already there)."""
    targets = set(targets)
    if source in targets:
        return Run([source], 0.0)
    return _dijkstra(pba, [(0.0, source, None)], lambda v: v in targets)


def dijkstra_cycle(pba, source: int) -> Run:
    """Shortest nonempty cycle from ``source`` back to itself."""
    seeds = [(w, v, source) for v, w in zip(pba.succ[source], pba.weights[source])]
    return _dijkstra(pba, seeds, lambda v: v == source, origin=source)


def dijkstra_reenter(pba, source: int) -> Run:
    """Shortest nonempty run from ``source`` into the self-reachable set.

    Every member of that set has one, even when no cycle leads back to the
    member itself.
    """
    fstar = pba.fstar
    seeds = [(w, v, source) for v, w in zip(pba.succ[source], pba.weights[source])]
    return _dijkstra(pba, seeds, lambda v: v in fstar, origin=source)


def continuation(pba, source: int) -> Run:
    """Shortest cycle back to ``source``, or failing that a shortest re-entry."""
    try:
        return dijkstra_cycle(pba, source)
    except NoPathError:
        return dijkstra_reenter(pba, source)


def _dijkstra(pba, seeds, is_target, origin=None) -> Run:
    dist: Dict[int, float] = {}
    parent: Dict[int, Optional[int]] = {}
    heap = []
    for d, v, par in seeds:
        if d < dist.get(v, INF):
            dist[v] = d
            parent[v] = par
            heapq.heappush(heap, (d, v))
    done = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done or d > dist[v]:
            continue
        if is_target(v):
            path = [v]
            cur = parent[v]
            while cur is not None:
                path.append(cur)
                if origin is not None and cur == origin and len(path) > 1:
                    break
                cur = parent[cur]
            path.reverse()
            return Run(path, d)
        done.add(v)
        for u, w in zip(pba.succ[v], pba.weights[v]):
            nd = d + w
            if nd < dist.get(u, INF):
                dist[u] = nd
                parent[u] = v
                heapq.heappush(heap, (nd, u))
    raise NoPathError("no run to the requested states")


def descend(pba, V, nxt, source: int) -> Run:
    """Shortest run to the self-reachable set along the potential pointers."""
    if V[source] == INF:
        raise NoPathError("source has infinite potential")
    path = [source]
    v = source
    total = 0.0
    fstar = pba.fstar
    while v not in fstar:
        u = nxt[v]
        total += pba.weights[v][pba.succ[v].index(u)]
        path.append(u)
        v = u
    return Run(path, total)


# ------------------------------------------------------------------- bundle

@dataclass
class ProductBundle:
    """Offline structures shared by all robots with the same model and task."""
    cts: Cts
    nba: Nba
    pba: Pba
    V: List[float]
    nxt: List[int]


def build_bundle(lattice: Lattice, radius: float, d_br: float, nba: Nba) -> ProductBundle:
    cts = build_cts(lattice, radius, d_br)
    pba = build_pba(cts, nba)
    V, nxt = potential_table(pba)
    return ProductBundle(cts, nba, pba, V, nxt)


def bundle_key(*parts) -> str:
    h = hashlib.sha256()
    h.update(f"v{CACHE_VERSION}".encode())
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\0")
    return h.hexdigest()


def cached_bundle(key: str, build, cache_dir: Optional[str] = None) -> ProductBundle:
    """Load a bundle from the on-disk cache or build and store it.

    The blob starts with a version header and the content hash; any mismatch
    invalidates it.
    """
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    if not cache_dir:
        return build()
    path = os.path.join(cache_dir, f"{key[:24]}.pkl")
    header = f"ltlcoord-bundle:{CACHE_VERSION}:{key}".encode()
    try:
        with open(path, "rb") as fh:
            if fh.readline().rstrip(b"\n") == header:
                return pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError):
        pass
    bundle = build()
    os.makedirs(cache_dir, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header + b"\n")
        pickle.dump(bundle, fh, protocol=pickle.HIGHEST_PROTOCOL)
    os.replace(tmp, path)
    return bundle
