"""Workspace, uniform grid decomposition and the geometric queries built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

import numpy as np

Point = Tuple[float, float]
Cell = Tuple[int, int]

WORKSPACE_LABEL = "W"
OBSTACLE_LABEL = "O"


class GeometryError(ValueError):
    pass


# ----------------------------------------------------------------- shapes

@dataclass(frozen=True)
class Disc:
    center: Point
    radius: float


@dataclass(frozen=True)
class Capsule:
    """Segment swept by a disc of ``radius``."""
    a: Point
    b: Point
    radius: float


@dataclass(frozen=True)
class Polygon:
    """Convex polygon, vertices in counter-clockwise or clockwise order."""
    vertices: Tuple[Point, ...]

    def __init__(self, vertices: Iterable[Sequence[float]]):
        verts = tuple((float(x), float(y)) for x, y in vertices)
        if len(verts) < 3:
            raise GeometryError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", verts)

    @property
    def bbox(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def edges(self):
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def contains(self, p: Point, strict: bool = False) -> bool:
        sign = 0
        for a, b in self.edges():
            cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            if abs(cross) < 1e-12:
                if strict:
                    return False
                continue
            s = 1 if cross > 0 else -1
            if sign == 0:
                sign = s
            elif s != sign:
                return False
        return True


def rectangle(x0, y0, x1, y1) -> Polygon:
    return Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


# -------------------------------------------------------- distance helpers

def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    den = dx * dx + dy * dy
    if den == 0.0:
        return math.hypot(p[0] - ax, p[1] - ay)
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / den
    t = min(1.0, max(0.0, t))
    return math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_intersect(p1, p2, q1, q2) -> bool:
    d1, d2 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    d3, d4 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 and d2 and d3 and d4:
        return True
    # collinear / touching cases
    for (a, b, c, d) in ((q1, q2, p1, d1), (q1, q2, p2, d2), (p1, p2, q1, d3), (p1, p2, q2, d4)):
        if d == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) \
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]):
            return True
    return False


def segment_segment_distance(p1, p2, q1, q2) -> float:
    if segments_intersect(p1, p2, q1, q2):
        return 0.0
    return min(point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
               point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2))


def segment_polygon_distance(a: Point, b: Point, poly: Polygon) -> float:
    if poly.contains(a) or poly.contains(b):
        return 0.0
    return min(segment_segment_distance(a, b, e0, e1) for e0, e1 in poly.edges())


def dist_to_obstacles(seg: Tuple[Point, Point], obstacles: Sequence[Polygon]) -> float:
    """Euclidean distance between a segment and a union of convex polygons.

    Returns ``math.inf`` for an empty obstacle set.
    """
    a, b = seg
    best = math.inf
    for poly in obstacles:
        d = segment_polygon_distance(a, b, poly)
        if d < best:
            best = d
            if best == 0.0:
                break
    return best


def inflate(radius: float, p: Point, d: float) -> Disc:
    """Footprint disc of ``radius`` at ``p`` grown by the braking distance ``d``."""
    if d < 0:
        raise GeometryError("inflation distance must be nonnegative")
    return Disc((float(p[0]), float(p[1])), radius + d)


@dataclass(frozen=True)
class Footprint:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("footprint radius must be positive")


# -------------------------------------------------------- workspace / grid

@dataclass
class Workspace:
    bounds: Tuple[float, float, float, float]
    obstacles: List[Polygon] = field(default_factory=list)
    regions: Dict[str, List[Polygon]] = field(default_factory=dict)
    obstacle_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        x0, y0, x1, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise GeometryError("empty workspace bounds")
        for poly in self.obstacles + [p for ps in self.regions.values() for p in ps]:
            bx0, by0, bx1, by1 = poly.bbox
            if bx0 < x0 - 1e-9 or by0 < y0 - 1e-9 or bx1 > x1 + 1e-9 or by1 > y1 + 1e-9:
                raise GeometryError("obstacles and regions must lie inside the workspace")

    def contains(self, p: Point) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= p[0] <= x1 and y0 <= p[1] <= y1

    def boundary_distance(self, p: Point) -> float:
        x0, y0, x1, y1 = self.bounds
        return min(p[0] - x0, x1 - p[0], p[1] - y0, y1 - p[1])

    def clearance(self, p: Point) -> float:
        """Distance from ``p`` to the obstacles or the workspace boundary."""
        return min(self.boundary_distance(p), dist_to_obstacles((p, p), self.obstacles))

    def segment_clearance(self, a: Point, b: Point) -> float:
        # the boundary term is attained at an endpoint since the rectangle is convex
        return min(self.boundary_distance(a), self.boundary_distance(b),
                   dist_to_obstacles((a, b), self.obstacles))


@dataclass
class Grid:
    """Uniform grid over the workspace with half-open cells ``[x, x+g)``."""
    workspace: Workspace
    size: float

    def __post_init__(self):
        x0, y0, x1, y1 = self.workspace.bounds
        nx = (x1 - x0) / self.size
        ny = (y1 - y0) / self.size
        if abs(nx - round(nx)) > 1e-9 or abs(ny - round(ny)) > 1e-9:
            raise GeometryError("workspace extent must be a multiple of the grid size")
        self.nx, self.ny = int(round(nx)), int(round(ny))
        self.origin = (x0, y0)
        self._labels = {}

    @property
    def cells(self) -> List[Cell]:
        return [(i, j) for j in range(self.ny) for i in range(self.nx)]

    def cell_of(self, p: Point) -> Cell:
        if not self.workspace.contains(p):
            raise GeometryError(f"point {tuple(p)} outside the workspace")
        # cells are open below and closed above, so a shared edge belongs to
        # the lower-index cell; the lower workspace edge belongs to the first cell
        i = int(math.ceil((p[0] - self.origin[0]) / self.size)) - 1
        j = int(math.ceil((p[1] - self.origin[1]) / self.size)) - 1
        return min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1)

    def center(self, cell: Cell) -> Point:
        return (self.origin[0] + (cell[0] + 0.5) * self.size,
                self.origin[1] + (cell[1] + 0.5) * self.size)

    def rect(self, cell: Cell):
        x = self.origin[0] + cell[0] * self.size
        y = self.origin[1] + cell[1] * self.size
        return x, y, x + self.size, y + self.size

    def index_range(self, xlo, ylo, xhi, yhi):
        g = self.size
        i0 = max(0, int(math.floor((xlo - self.origin[0]) / g)))
        j0 = max(0, int(math.floor((ylo - self.origin[1]) / g)))
        i1 = min(self.nx - 1, int(math.floor((xhi - self.origin[0]) / g)))
        j1 = min(self.ny - 1, int(math.floor((yhi - self.origin[1]) / g)))
        return i0, j0, i1, j1

    def regions_intersecting(self, shape) -> FrozenSet[Cell]:
        """Cells whose closed square has nonempty intersection with ``shape``."""
        if isinstance(shape, Disc):
            (cx, cy), r = shape.center, shape.radius
            box = (cx - r, cy - r, cx + r, cy + r)
            test = lambda rc: _rect_point_distance(rc, shape.center) <= r + 1e-12
        elif isinstance(shape, Capsule):
            r = shape.radius
            box = (min(shape.a[0], shape.b[0]) - r, min(shape.a[1], shape.b[1]) - r,
                   max(shape.a[0], shape.b[0]) + r, max(shape.a[1], shape.b[1]) + r)
            test = lambda rc: _rect_segment_distance(rc, shape.a, shape.b) <= r + 1e-12
        elif isinstance(shape, Polygon):
            box = shape.bbox
            test = lambda rc: _rect_polygon_intersect(rc, shape)
        else:
            raise TypeError(f"unsupported shape {type(shape).__name__}")
        # candidate range is widened by one cell so closed boundaries are seen
        i0, j0, i1, j1 = self.index_range(box[0] - self.size, box[1] - self.size,
                                          box[2] + self.size, box[3] + self.size)
        out = set()
        for j in range(j0, j1 + 1):
            for i in range(i0, i1 + 1):
                if test(self.rect((i, j))):
                    out.add((i, j))
        return frozenset(out)

    def label_of(self, cell: Cell) -> FrozenSet[str]:
        hit = self._labels.get(cell)
        if hit is None:
            c = self.center(cell)
            labels = {WORKSPACE_LABEL}
            if any(poly.contains(c, strict=True) for poly in self.workspace.obstacles):
                labels.add(OBSTACLE_LABEL)
            for name, polys in self.workspace.regions.items():
                if any(poly.contains(c, strict=True) for poly in polys):
                    labels.add(name)
            hit = self._labels[cell] = frozenset(labels)
        return hit

    def check_label_alignment(self) -> List[str]:
        """Polygon vertices that are off grid lines, or non-rectilinear edges.

        An empty list means every cell carries a single label set.
        """
        problems = []
        polys = [("obstacle", p) for p in self.workspace.obstacles]
        polys += [(name, p) for name, ps in self.workspace.regions.items() for p in ps]
        for name, poly in polys:
            for a, b in poly.edges():
                if abs(a[0] - b[0]) > 1e-9 and abs(a[1] - b[1]) > 1e-9:
                    problems.append(f"{name}: edge {a}-{b} is not axis aligned")
            for v in poly.vertices:
                for k in (0, 1):
                    q = (v[k] - self.origin[k]) / self.size
                    if abs(q - round(q)) > 1e-9:
                        problems.append(f"{name}: vertex {v} is off the grid lines")
                        break
        return problems


def _rect_point_distance(rc, p) -> float:
    x0, y0, x1, y1 = rc
    dx = max(x0 - p[0], 0.0, p[0] - x1)
    dy = max(y0 - p[1], 0.0, p[1] - y1)
    return math.hypot(dx, dy)


def _rect_segment_distance(rc, a, b) -> float:
    x0, y0, x1, y1 = rc
    if x0 <= a[0] <= x1 and y0 <= a[1] <= y1:
        return 0.0
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    return min(segment_segment_distance(a, b, corners[k], corners[(k + 1) % 4]) for k in range(4))


def _rect_polygon_intersect(rc, poly: Polygon) -> bool:
    x0, y0, x1, y1 = rc
    bx0, by0, bx1, by1 = poly.bbox
    if bx1 < x0 or bx0 > x1 or by1 < y0 or by0 > y1:
        return False
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    # separating axis along each polygon edge normal (closed sets: touching intersects)
    for a, b in poly.edges():
        nx, ny = b[1] - a[1], a[0] - b[0]
        proj = [nx * v[0] + ny * v[1] for v in poly.vertices]
        rp = [nx * c[0] + ny * c[1] for c in corners]
        if max(rp) < min(proj) - 1e-12 or min(rp) > max(proj) + 1e-12:
            return False
    return True


def sample_points_in_rect(rc, n: int) -> np.ndarray:
    """``n x n`` grid of points covering a closed rectangle (test oracle helper)."""
    x0, y0, x1, y1 = rc
    xs, ys = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    return np.column_stack([xs.ravel(), ys.ravel()])
