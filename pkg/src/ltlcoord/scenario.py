"""JSON scenario files: parsing, validation and bundled examples."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import List

from .dynamics import DOUBLE_INTEGRATOR, NORM_DECEL, STRAIGHT_LINE, UNICYCLE, RobotModel
from .geometry import OBSTACLE_LABEL, WORKSPACE_LABEL, GeometryError, Grid, Polygon, Workspace
from .ltl import LtlSyntaxError, atoms, parse
from .sim import RobotConfig, SimConfig

BUNDLED = ("example1", "example2_2", "example2_4", "example2_8", "example2_16")


class ScenarioError(ValueError):
    """Scenario file that cannot be parsed or fails validation."""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class LoadedScenario:
    config: SimConfig
    warnings: List[str] = field(default_factory=list)


def bundled_path(name: str) -> str:
    name = name[:-5] if name.endswith(".json") else name
    return str(resources.files("ltlcoord") / "scenarios" / f"{name}.json")


def resolve_path(path: str) -> str:
    """Accept either a file path or the name of a bundled scenario."""
    if os.path.exists(path):
        return path
    base = os.path.basename(path)
    stem = base[:-5] if base.endswith(".json") else base
    if stem in BUNDLED:
        return bundled_path(stem)
    return path


def load_scenario(path: str, warn_as_error: bool = False) -> LoadedScenario:
    path = resolve_path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError([f"cannot read {path}: {exc}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    loaded = scenario_from_dict(data, default_name=os.path.splitext(os.path.basename(path))[0])
    if warn_as_error and loaded.warnings:
        raise ScenarioError(loaded.warnings)
    return loaded


def _polygon(obj, where: str, problems: List[str]):
    try:
        verts = obj["vertices_m"]
        poly = Polygon(verts)
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(f"{where}: invalid polygon ({exc})")
        return None
    if not _is_convex(poly):
        problems.append(f"{where}: polygon is not convex")
        return None
    return poly


def _is_convex(poly: Polygon) -> bool:
    v = poly.vertices
    n = len(v)
    sign = 0
    for k in range(n):
        a, b, c = v[k], v[(k + 1) % n], v[(k + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if abs(cross) < 1e-12:
            continue
        s = 1 if cross > 0 else -1
        if sign and s != sign:
            return False
        sign = s
    return sign != 0


def _num(d, key, where, problems, positive=True, default=None):
    if key not in d:
        if default is not None:
            return default
        problems.append(f"{where}: missing field {key!r}")
        return None
    val = d[key]
    if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
        problems.append(f"{where}: {key!r} must be a finite number")
        return None
    if positive and not val > 0:
        problems.append(f"{where}: {key!r} must be positive")
        return None
    return float(val)


def scenario_from_dict(data: dict, default_name: str = "") -> LoadedScenario:
    problems: List[str] = []
    warnings: List[str] = []
    if not isinstance(data, dict):
        raise ScenarioError(["top level must be an object"])
    wsd = data.get("workspace")
    if not isinstance(wsd, dict):
        raise ScenarioError(["missing 'workspace' object"])
    bounds = wsd.get("bounds_m")
    if not (isinstance(bounds, list) and len(bounds) == 4):
        raise ScenarioError(["workspace.bounds_m must be [x0, y0, x1, y1]"])
    g = _num(wsd, "grid_size_m", "workspace", problems)
    obstacles = []
    for k, ob in enumerate(wsd.get("obstacles", [])):
        poly = _polygon(ob, f"workspace.obstacles[{k}]", problems)
        if poly is not None:
            obstacles.append(poly)
    regions = {}
    for name, polys in sorted(wsd.get("regions", {}).items()):
        if name in (WORKSPACE_LABEL, OBSTACLE_LABEL):
            problems.append(f"workspace.regions: label {name!r} is reserved")
            continue
        out = []
        for k, ob in enumerate(polys):
            poly = _polygon(ob, f"workspace.regions.{name}[{k}]", problems)
            if poly is not None:
                out.append(poly)
        regions[name] = out
    ws = grid = None
    try:
        ws = Workspace(tuple(float(b) for b in bounds), obstacles, regions)
        if g is not None:
            grid = Grid(ws, g)
            problems.extend(grid.check_label_alignment())
    except (GeometryError, TypeError, ValueError) as exc:
        problems.append(f"workspace: {exc}")

    simd = data.get("sim", {})
    delta = _num(simd, "detection_period_s", "sim", problems)
    h = _num(simd, "step_s", "sim", problems)
    R = _num(simd, "sensing_radius_m", "sim", problems)
    duration = _num(simd, "duration_s", "sim", problems)
    n_max = simd.get("n_max", 2000)
    if not isinstance(n_max, int) or n_max <= 0:
        problems.append("sim: 'n_max' must be a positive integer")
    seed = simd.get("seed", 0)
    if not isinstance(seed, int):
        problems.append("sim: 'seed' must be an integer")
    eta = _num(simd, "eta_m", "sim", problems, default=g or 1.0)
    t_max = _num(simd, "t_max_s", "sim", problems, default=30.0)
    wait_s = _num(simd, "wait_s", "sim", problems, default=0.5)
    if delta and h and abs(delta / h - round(delta / h)) > 1e-9:
        problems.append("sim: detection period must be a multiple of the step")

    robots = []
    ids, prios = set(), set()
    for k, rd in enumerate(data.get("robots", [])):
        where = f"robots[{k}]"
        rid = rd.get("id")
        if not isinstance(rid, int):
            problems.append(f"{where}: 'id' must be an integer")
            continue
        if rid in ids:
            problems.append(f"{where}: duplicate robot id {rid}")
        ids.add(rid)
        prio = rd.get("priority")
        if not isinstance(prio, int):
            problems.append(f"{where}: 'priority' must be an integer")
        elif prio in prios:
            problems.append(f"{where}: duplicate priority score {prio}")
        prios.add(prio)
        kind = rd.get("model")
        model = None
        braking = rd.get("braking")
        try:
            if kind == UNICYCLE:
                model = RobotModel.unicycle(_num(rd, "v_max_mps", where, problems),
                                            _num(rd, "omega_max_radps", where, problems),
                                            _num(rd, "a_max_mps2", where, problems))
                if braking not in (None, STRAIGHT_LINE):
                    problems.append(f"{where}: the simulator brakes unicycles with {STRAIGHT_LINE} only")
            elif kind == DOUBLE_INTEGRATOR:
                model = RobotModel.double_integrator(_num(rd, "v_max_mps", where, problems),
                                                     _num(rd, "u_max_mps2", where, problems))
                if braking not in (None, NORM_DECEL):
                    problems.append(f"{where}: double integrators brake with {NORM_DECEL} only")
            else:
                problems.append(f"{where}: unknown model {kind!r}")
        except (TypeError, ValueError) as exc:
            problems.append(f"{where}: {exc}")
        radius = _num(rd, "radius_m", where, problems)
        text = rd.get("formula")
        if not isinstance(text, str):
            problems.append(f"{where}: missing formula")
        else:
            try:
                f = parse(text)
                unknown = set(atoms(f)) - set(regions) - {WORKSPACE_LABEL, OBSTACLE_LABEL}
                if unknown:
                    warnings.append(f"{where}: formula mentions undefined labels {sorted(unknown)}")
            except LtlSyntaxError as exc:
                problems.append(f"{where}: formula: {exc}")
        start = rd.get("start_m")
        if not (isinstance(start, list) and len(start) == 2):
            problems.append(f"{where}: 'start_m' must be [x, y]")
            start = None
        elif ws is not None and not ws.contains(start):
            problems.append(f"{where}: start outside the workspace")
        heading = float(rd.get("heading_rad", 0.0))
        if model is not None and radius and start and isinstance(text, str):
            robots.append(RobotConfig(rid, model, radius, text, (float(start[0]), float(start[1])),
                                      prio if isinstance(prio, int) else 0, heading, braking))
    if not robots and not problems:
        problems.append("no robots defined")
    if problems:
        raise ScenarioError(problems)
    cfg = SimConfig(ws, g, robots, R, duration, delta, h, seed, n_max, eta, t_max, wait_s,
                    data.get("name", default_name))
    margin = cfg.sensing_margin()
    if margin <= 0:
        warnings.append(f"sensing radius {R} m is too small for guaranteed collision avoidance "
                        f"(needs more than {R - margin:.3f} m)")
    return LoadedScenario(cfg, warnings)
