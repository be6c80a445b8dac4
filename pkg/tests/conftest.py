"""Shared scenario builders for simulation and command-line tests."""
import pytest


def rect(x0, y0, x1, y1):
    return {"vertices_m": [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]}


def robot(i, start, formula, prio, v=1.0, u=2.0, r=0.2):
    return {"id": i, "model": "double_integrator", "v_max_mps": v, "u_max_mps2": u, "radius_m": r,
            "start_m": list(start), "formula": formula, "priority": prio}


def scenario(obstacles, regions, robots, R=2.0, duration=20.0, extent=(8, 8), seed=0, n_max=600, t_max=10.0,
             name="fixture"):
    return {"name": name,
            "workspace": {"bounds_m": [0, 0, extent[0], extent[1]], "grid_size_m": 0.5,
                          "obstacles": obstacles, "regions": regions},
            "sim": {"detection_period_s": 0.1, "step_s": 0.05, "sensing_radius_m": R, "duration_s": duration,
                    "seed": seed, "n_max": n_max, "t_max_s": t_max},
            "robots": robots}


def dead_end(duration=20.0, t_max=2.0, seed=0):
    """A lane with a dead-end stub below its middle.

    Robot 1 starts in the stub and must reach the lane's left end; robot 2
    (higher static score) drives along the lane past the stub mouth.
    """
    obstacles = [rect(0, 0, 8, 1.0), rect(0, 1.0, 3.5, 3.5), rect(5.0, 1.0, 8, 3.5), rect(0, 5.0, 8, 8)]
    regions = {"L": [rect(0, 3.5, 1.5, 5.0)], "Rt": [rect(6.5, 3.5, 8, 5.0)], "S": [rect(3.5, 1.0, 5.0, 2.0)]}
    robots = [robot(1, (4.25, 1.75), "[](W & !O) & []<>L & []<>S", 1),
              robot(2, (1.25, 4.25), "[](W & !O) & []<>Rt & []<>L", 2)]
    return scenario(obstacles, regions, robots, duration=duration, t_max=t_max, seed=seed, name="dead_end")


def far_apart(duration=12.0):
    """Two robots patrolling opposite ends of a long room, never within sensing range."""
    regions = {"A": [rect(0.5, 0.5, 1.5, 1.5)], "B": [rect(0.5, 2.5, 1.5, 3.5)],
               "C": [rect(10.5, 0.5, 11.5, 1.5)], "D": [rect(10.5, 2.5, 11.5, 3.5)]}
    robots = [robot(1, (1.25, 1.75), "[](W & !O) & []<>A & []<>B", 1),
              robot(2, (10.75, 1.75), "[](W & !O) & []<>C & []<>D", 2)]
    return scenario([], regions, robots, duration=duration, extent=(12, 4), name="far_apart")


@pytest.fixture
def dead_end_dict():
    return dead_end()
