"""Simulated annealing over landing-zone/goal configurations.

The walk samples viable LZ candidates, evaluates each by running A* from
the candidate to its nearest rim goal (the path search is nested inside
the energy evaluation), and applies the Metropolis rule under a geometric
temperature schedule. The energy of a configuration is how far its path
length lands from the mission traverse target.

An exhaustive sweep over all viable candidates serves as the verification
oracle at desk scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import MissionScene
from .search import GridPath, astar


class OptimizationError(RuntimeError):
    """The scene admits no feasible configuration to optimize."""


class ExhaustiveGuardError(RuntimeError):
    """Candidate count exceeds the exhaustive sweep guard."""


_INITIAL_RETRIES = 100
_EXHAUSTIVE_GUARD = 10_000


@dataclass(frozen=True)
class AnnealParams:
    """Schedule and proposal knobs; temperature shares the energy's units."""

    t1: float = 100.0
    alpha: float = 0.95
    max_iter: int = 100
    t_min: float = 0.0
    proposal_radius_max_m: float | None = None
    proposal_radius_min_m: float = 50.0
    shortfall_weight: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.t1 <= 0:
            raise ValueError("t1 must be positive")
        if not 0 <= self.t_min < self.t1:
            raise ValueError("need 0 <= t_min < t1")
        if self.shortfall_weight < 1.0:
            raise ValueError("shortfall_weight must be >= 1")


@dataclass(frozen=True)
class Configuration:
    """One start-goal solution pair with its evaluated path, if reachable."""

    candidate_index: int
    goal: tuple[int, int]
    path: GridPath | None = None
    energy_m: float = math.inf


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    temperature: float
    proposed_energy: float
    current_energy: float
    accepted: bool
    uphill: bool


@dataclass(frozen=True)
class AnnealTrace:
    records: tuple

    def best_so_far(self) -> list[float]:
        out = []
        best = math.inf
        for r in self.records:
            if r.proposed_energy < best:
                best = r.proposed_energy
            out.append(best)
        return out


@dataclass(frozen=True)
class MissionPlan:
    scene_meta: dict
    final: Configuration
    trace: AnnealTrace
    seed: int | None
    params: AnnealParams


def energy(length_m: float, target_m: float, shortfall_weight: float = 1.0) -> float:
    """Disparity of the path length from the traverse target, in meters.

    Symmetric by default; a shortfall weight > 1 penalizes paths that fall
    short of the target more than ones that overshoot it.
    """
    if length_m < 0:
        raise ValueError("length must be non-negative")
    if length_m < target_m:
        return (target_m - length_m) * shortfall_weight
    return length_m - target_m


def schedule_temp(i: int, params: AnnealParams) -> float:
    """Geometric decay: T_i = alpha^(i-1) * T1 for iteration i >= 1."""
    if i < 1:
        raise ValueError("iterations are 1-based")
    return params.alpha ** (i - 1) * params.t1


def accept(delta_e: float, temperature: float, rng: np.random.Generator) -> bool:
    """Metropolis rule: always downhill, uphill with probability exp(-dE/T).

    Consumes exactly one uniform draw for an uphill proposal and none for a
    downhill one, so acceptance streams are reproducible.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if delta_e <= 0:
        return True
    return float(rng.random()) < math.exp(-delta_e / temperature)


def _evaluated(scene: MissionScene, index: int, params: AnnealParams) -> Configuration:
    """Path-evaluate a candidate, memoizing the pure A* result per index."""
    pair = scene.pairs[index]
    if index not in scene.path_cache:
        start = scene.candidates[index].cell
        if scene.costmap.blocked[start[1], start[0]]:
            path = None  # lander-viable but too tight for the rover footprint
        else:
            path, _ = astar(scene.costmap, start, pair.goal)
        scene.path_cache[index] = path
    path = scene.path_cache[index]
    if path is None:
        return Configuration(index, pair.goal, None, math.inf)
    e = energy(path.length_m, scene.target_len_m, params.shortfall_weight)
    return Configuration(index, pair.goal, path, e)


def propose(
    current: Configuration,
    temperature: float,
    scene: MissionScene,
    params: AnnealParams,
    rng: np.random.Generator,
) -> Configuration:
    """Draw a new configuration with temperature-scaled reach.

    The proposal radius shrinks linearly with temperature down to the floor
    radius; candidates inside the radius are drawn uniformly. When none are
    in reach the draw falls back to the whole viable set.
    """
    viable = scene.viable_indices
    if not viable:
        raise OptimizationError("scene has no viable candidates")
    rho_max = params.proposal_radius_max_m
    if rho_max is None:
        rho_max = 2.0 * scene.annulus_m[1]
    rho = max(params.proposal_radius_min_m, rho_max * temperature / params.t1)

    cx, cy = scene.candidates[current.candidate_index].cell
    scale = scene.meters_per_cell
    pool = [
        i
        for i in viable
        if i != current.candidate_index
        and math.hypot(scene.candidates[i].cell[0] - cx, scene.candidates[i].cell[1] - cy)
        * scale
        <= rho
    ]
    if not pool:
        pool = [i for i in viable if i != current.candidate_index]
    if not pool:
        return current  # single viable candidate: self-proposal
    idx = pool[int(rng.integers(len(pool)))]
    return Configuration(idx, scene.pairs[idx].goal)


def optimize(
    scene: MissionScene,
    params: AnnealParams,
    rng: np.random.Generator,
    seed: int | None = None,
) -> MissionPlan:
    """Run the annealing walk and return the best configuration seen.

    The initial configuration is drawn uniformly from the viable set and
    redrawn (bounded retries) until its path exists. Unreachable proposals
    get infinite energy and are rejected without consuming an acceptance
    draw. The returned plan carries the full per-iteration trace.
    """
    viable = scene.viable_indices
    if not viable:
        raise OptimizationError("scene has no viable candidates")
    if not scene.goals:
        raise OptimizationError("scene has no traversable rim goals")

    current = None
    for _ in range(_INITIAL_RETRIES):
        idx = viable[int(rng.integers(len(viable)))]
        cfg = _evaluated(scene, idx, params)
        if cfg.path is not None:
            current = cfg
            break
    if current is None:
        raise OptimizationError(
            f"no reachable initial configuration in {_INITIAL_RETRIES} draws"
        )

    best = current
    records = []
    for i in range(1, params.max_iter + 1):
        temperature = schedule_temp(i, params)
        if temperature < params.t_min:
            break
        prop = propose(current, temperature, scene, params, rng)
        prop = _evaluated(scene, prop.candidate_index, params)
        delta = prop.energy_m - current.energy_m
        if math.isinf(prop.energy_m):
            accepted = False
        else:
            accepted = accept(delta, temperature, rng)
        if accepted:
            current = prop
        if prop.energy_m < best.energy_m:
            best = prop
        records.append(
            TraceRecord(i, temperature, prop.energy_m, current.energy_m, accepted, delta > 0)
        )

    meta = {
        "grid": [scene.costmap.width, scene.costmap.height],
        "meters_per_cell": scene.meters_per_cell,
        "target_len_m": scene.target_len_m,
        "pit_center": list(scene.pit_center),
        "candidates": len(scene.candidates),
        "viable": len(viable),
        "goals": len(scene.goals),
    }
    return MissionPlan(meta, best, AnnealTrace(tuple(records)), seed, params)


def exhaustive_best(scene: MissionScene, params: AnnealParams | None = None) -> Configuration:
    """Sweep every viable candidate and return the minimum-energy
    configuration; the oracle the annealer is judged against."""
    params = params or AnnealParams()
    viable = scene.viable_indices
    if len(viable) > _EXHAUSTIVE_GUARD:
        raise ExhaustiveGuardError(
            f"{len(viable)} viable candidates exceed the sweep guard of {_EXHAUSTIVE_GUARD}"
        )
    if not viable:
        raise OptimizationError("scene has no viable candidates")
    best = None
    for idx in viable:
        cfg = _evaluated(scene, idx, params)
        if cfg.path is None:
            continue
        if best is None or cfg.energy_m < best.energy_m:
            best = cfg
    if best is None:
        raise OptimizationError("no viable candidate has a reachable goal")
    return best


def validate_mission_plan(scene: MissionScene, plan: MissionPlan) -> list[str]:
    """Re-check an emitted plan against the scene invariants.

    Returns human-readable violation strings; an empty list means the plan
    is internally consistent.
    """
    problems = []
    cfg = plan.final
    cand = scene.candidates[cfg.candidate_index]
    x, y = cand.cell
    if not cand.viable:
        problems.append(f"start {cand.cell} is not flagged viable")
    if scene.lander_cspace.occupancy[y, x]:
        problems.append(f"start {cand.cell} is occupied in the lander cspace")
    r_in, r_out = scene.annulus_m
    dist = math.hypot(x - scene.pit_center[0], y - scene.pit_center[1]) * scene.meters_per_cell
    # candidate cells round to the nearest cell, so allow half a cell of slack
    slop = scene.meters_per_cell
    if not r_in - slop <= dist <= r_out + slop:
        problems.append(f"start {cand.cell} lies {dist:.1f} m from pit center, outside the band")
    if cfg.goal not in scene.goals:
        problems.append(f"goal {cfg.goal} is not a traversable rim goal")
    if cfg.path is None:
        problems.append("plan has no path")
        return problems
    wp = cfg.path.waypoints
    if wp[0] != cand.cell:
        problems.append("path does not start at the landing zone")
    if wp[-1] != cfg.goal:
        problems.append("path does not end at the goal")
    a = b = 0
    for (x0, y0), (x1, y1) in zip(wp, wp[1:]):
        dx, dy = abs(x1 - x0), abs(y1 - y0)
        if max(dx, dy) != 1:
            problems.append(f"waypoints {x0, y0} -> {x1, y1} are not 8-adjacent")
        if dx + dy == 1:
            a += 1
        else:
            b += 1
    for (wx, wy) in wp:
        if scene.costmap.blocked[wy, wx]:
            problems.append(f"waypoint {wx, wy} is blocked in the costmap")
    expect_len = (a + b * math.sqrt(2.0)) * scene.meters_per_cell
    if cfg.path.length_m != expect_len:
        problems.append(f"length {cfg.path.length_m} != recomputed {expect_len}")
    expect_e = energy(cfg.path.length_m, scene.target_len_m, plan.params.shortfall_weight)
    if cfg.energy_m != expect_e:
        problems.append(f"energy {cfg.energy_m} != recomputed {expect_e}")
    return problems
