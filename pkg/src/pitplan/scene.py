"""Mission scene construction: the optimization problem the annealer solves.

Builds candidate landing zones in an annulus band around the pit, filters
them against the lander configuration space, pairs each with its nearest
rim goal, and assembles the traversal costmap. Also provides a seeded
synthetic scene generator used for testing and demos in place of orbital
imagery.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .mser import SceneLabels, extract_rim
from .raster import (
    GrayImage,
    OccupancyGrid,
    dilate_obstacles,
    disk_element,
    square_element,
)


class GenerationError(ValueError):
    """Candidate or synthetic-scene generation cannot satisfy its spec."""


@dataclass(frozen=True)
class Candidate:
    """One sampled landing-zone center; viable when free in the lander cspace."""

    cell: tuple[int, int]
    viable: bool = False


@dataclass(frozen=True)
class StartGoalPair:
    start: tuple[int, int]
    goal: tuple[int, int]
    straight_line_m: float


@dataclass(frozen=True, eq=False)
class Costmap:
    """Per-cell traversal cost: unit everywhere except blocked cells."""

    blocked: np.ndarray
    meters_per_cell: float

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.blocked, dtype=bool))
        arr.flags.writeable = False
        object.__setattr__(self, "blocked", arr)

    @property
    def width(self) -> int:
        return self.blocked.shape[1]

    @property
    def height(self) -> int:
        return self.blocked.shape[0]


@dataclass(frozen=True, eq=False)
class MissionScene:
    """Immutable problem instance shared by annealing runs.

    ``pairs[i]`` is the nearest-goal pairing for ``candidates[i]`` (None for
    non-viable candidates). ``path_cache`` memoizes pure A* results per
    candidate index; concurrent runs may share it.
    """

    workspace: OccupancyGrid
    lander_cspace: OccupancyGrid
    rover_cspace: OccupancyGrid
    costmap: Costmap
    candidates: tuple
    goals: tuple
    pairs: tuple
    pit_center: tuple[int, int]
    annulus_m: tuple[float, float]
    target_len_m: float
    meters_per_cell: float
    path_cache: dict = field(default_factory=dict, repr=False)

    @property
    def viable_indices(self) -> tuple:
        return tuple(i for i, c in enumerate(self.candidates) if c.viable)


def generate_candidates(
    pit_center: tuple[int, int],
    r_in_m: float,
    r_out_m: float,
    count: int,
    rng: np.random.Generator,
    grid_dims: tuple[int, int],
    meters_per_cell: float,
) -> list[Candidate]:
    """Sample candidate LZ cells uniformly by area over the annulus band.

    Radius is sqrt-distributed so density is uniform per unit area; draws
    that round off-grid are redrawn. Deterministic for a given generator
    state.
    """
    if not 0 < r_in_m < r_out_m:
        raise GenerationError(f"need 0 < r_in < r_out, got {r_in_m}, {r_out_m}")
    if count <= 0:
        raise GenerationError(f"count must be positive, got {count}")
    w, h = grid_dims
    cx, cy = pit_center
    r_in = r_in_m / meters_per_cell
    r_out = r_out_m / meters_per_cell
    # distance range from the pit center to the grid rectangle
    nearest = math.hypot(
        max(0 - cx, 0, cx - (w - 1)), max(0 - cy, 0, cy - (h - 1))
    )
    farthest = max(
        math.hypot(gx - cx, gy - cy) for gx in (0, w - 1) for gy in (0, h - 1)
    )
    if nearest > r_out or farthest < r_in:
        raise GenerationError(
            f"annulus [{r_in_m}, {r_out_m}] m around {pit_center} lies entirely off-grid"
        )

    out = []
    attempts = 0
    max_attempts = count * 1000
    lo, hi = r_in * r_in, r_out * r_out
    while len(out) < count:
        if attempts >= max_attempts:
            raise GenerationError(
                f"gave up after {attempts} draws; annulus barely intersects the grid"
            )
        attempts += 1
        r = math.sqrt(rng.uniform(lo, hi))
        theta = rng.uniform(0.0, 2.0 * math.pi)
        x = math.floor(cx + r * math.cos(theta) + 0.5)
        y = math.floor(cy + r * math.sin(theta) + 0.5)
        if 0 <= x < w and 0 <= y < h:
            out.append(Candidate((x, y)))
    return out


def filter_viable(candidates, lander_cspace: OccupancyGrid) -> list[Candidate]:
    """Flag each candidate viable iff its cell is free in the lander cspace."""
    occ = lander_cspace.occupancy
    return [replace(c, viable=not occ[c.cell[1], c.cell[0]]) for c in candidates]


def nearest_goal(candidate: Candidate, goals, meters_per_cell: float = 1.0) -> StartGoalPair:
    """Closest rim goal by Euclidean distance (K = 1), ties in row-major order."""
    if not goals:
        raise ValueError("goal list is empty")
    x, y = candidate.cell
    best = min(goals, key=lambda g: ((g[0] - x) ** 2 + (g[1] - y) ** 2, g[1], g[0]))
    d2 = (best[0] - x) ** 2 + (best[1] - y) ** 2
    return StartGoalPair(candidate.cell, best, math.sqrt(d2) * meters_per_cell)


def _pair_all(candidates, goals, meters_per_cell: float):
    """Vectorized nearest-goal pairing; matches nearest_goal on every input."""
    goals_sorted = sorted(goals, key=lambda g: (g[1], g[0]))
    garr = np.array(goals_sorted, dtype=np.int64)
    pairs = []
    cells = np.array([c.cell for c in candidates], dtype=np.int64)
    for start in range(0, len(candidates), 1024):
        chunk = cells[start : start + 1024]
        d2 = ((chunk[:, None, :] - garr[None, :, :]) ** 2).sum(axis=2)
        idx = d2.argmin(axis=1)  # first minimum = row-major tie-break
        for row, c in enumerate(candidates[start : start + 1024]):
            if not c.viable:
                pairs.append(None)
                continue
            g = tuple(int(v) for v in garr[idx[row]])
            pairs.append(
                StartGoalPair(c.cell, g, math.sqrt(float(d2[row, idx[row]])) * meters_per_cell)
            )
    return tuple(pairs)


def build_costmap(rover_cspace: OccupancyGrid) -> Costmap:
    """Unit-cost map blocked exactly where the rover cspace is occupied."""
    return Costmap(rover_cspace.occupancy.copy(), rover_cspace.meters_per_cell)


def build_scene(
    img_dims: tuple[int, int],
    meters_per_cell: float,
    labels: SceneLabels,
    rng: np.random.Generator,
    r_in_m: float = 250.0,
    r_out_m: float = 750.0,
    candidate_count: int = 10_000,
    lander_diameter_m: float = 50.0,
    rover_side_m: float = 1.0,
    target_len_m: float = 550.0,
) -> MissionScene:
    """Assemble the full optimization problem from classified labels.

    The workspace masks obstacles and the pit. The lander cspace dilates
    both by the lander disk. The rover cspace dilates only the obstacles by
    the rover square and then adds the pit undilated: the rim must stay
    traversable (the mission goal is to stand at the pit's edge), while
    paths may never cross the pit itself.
    """
    w, h = img_dims
    workspace = OccupancyGrid.from_cells(
        w, h, meters_per_cell, labels.obstacle_cells | labels.pit_cells
    )
    lander_cspace = dilate_obstacles(
        workspace, disk_element(lander_diameter_m, meters_per_cell)
    )
    obstacles_only = OccupancyGrid.from_cells(w, h, meters_per_cell, labels.obstacle_cells)
    rover_occ = dilate_obstacles(
        obstacles_only, square_element(rover_side_m, meters_per_cell)
    ).occupancy.copy()
    for x, y in labels.pit_cells:
        rover_occ[y, x] = True
    rover_cspace = OccupancyGrid(rover_occ, meters_per_cell)
    costmap = build_costmap(rover_cspace)

    pit_xs = [x for x, _ in labels.pit_cells]
    pit_ys = [y for _, y in labels.pit_cells]
    pit_center = (round(sum(pit_xs) / len(pit_xs)), round(sum(pit_ys) / len(pit_ys)))

    goals = tuple(
        g
        for g in sorted(labels.rim_cells, key=lambda g: (g[1], g[0]))
        if not costmap.blocked[g[1], g[0]]
    )
    candidates = tuple(
        filter_viable(
            generate_candidates(
                pit_center, r_in_m, r_out_m, candidate_count, rng, (w, h), meters_per_cell
            ),
            lander_cspace,
        )
    )
    pairs = _pair_all(candidates, goals, meters_per_cell) if goals else (None,) * len(candidates)
    return MissionScene(
        workspace=workspace,
        lander_cspace=lander_cspace,
        rover_cspace=rover_cspace,
        costmap=costmap,
        candidates=candidates,
        goals=goals,
        pairs=pairs,
        pit_center=pit_center,
        annulus_m=(r_in_m, r_out_m),
        target_len_m=target_len_m,
        meters_per_cell=meters_per_cell,
    )


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic pit scene generator."""

    width: int = 96
    height: int = 96
    meters_per_cell: float = 12.5
    pit_radius_m: float = 100.0
    pit_center_cell: tuple[int, int] | None = None
    crater_count: int = 8
    mound_count: int = 4
    crater_width_m: tuple[float, float] = (25.0, 75.0)
    mound_width_m: tuple[float, float] = (25.0, 75.0)
    min_gap_cells: int = 3
    background: int = 128
    pit_intensity: int = 30
    crater_intensity: int = 70
    mound_intensity: int = 200
    noise_amplitude: int = 6


@dataclass(frozen=True)
class SynthTruth:
    """Exact cell sets the generator stamped, for detector verification."""

    labels: SceneLabels
    crater_regions: tuple
    mound_regions: tuple

    @property
    def obstacle_regions(self) -> tuple:
        return self.crater_regions + self.mound_regions


def synth_scene(seed: int, spec: SynthSpec) -> tuple[GrayImage, SynthTruth]:
    """Deterministic synthetic test scene: noisy mid-gray terrain, one dark
    pit disk, dark crater disks, and bright mound disks.

    Returns the image together with the exact stamped cell sets as ground
    truth. Same seed, same spec -> identical bytes.
    """
    w, h, scale = spec.width, spec.height, spec.meters_per_cell
    pit_r = spec.pit_radius_m / scale
    cx, cy = spec.pit_center_cell if spec.pit_center_cell else (w // 2, h // 2)
    if not (pit_r <= cx <= w - 1 - pit_r and pit_r <= cy <= h - 1 - pit_r):
        raise GenerationError(
            f"pit of radius {spec.pit_radius_m} m at {(cx, cy)} does not fit the frame"
        )

    rng = np.random.default_rng([seed, 0x5C])
    yy, xx = np.mgrid[0:h, 0:w]
    base = np.full((h, w), spec.background, dtype=np.int16)
    pit_mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= pit_r * pit_r
    base[pit_mask] = spec.pit_intensity
    blocked_for_placement = pit_mask.copy()

    def place_disks(count, width_range, intensity):
        regions = []
        attempts = 0
        gap = spec.min_gap_cells
        while len(regions) < count:
            if attempts >= 200 * max(count, 1):
                raise GenerationError(
                    f"could not place {count} disks of width {width_range} m"
                )
            attempts += 1
            width_m = rng.uniform(*width_range)
            r = max(1, math.floor(width_m / 2.0 / scale))
            x = int(rng.integers(r + 1, w - r - 1))
            y = int(rng.integers(r + 1, h - r - 1))
            disk = (xx - x) ** 2 + (yy - y) ** 2 <= r * r
            near = (np.abs(xx - x) <= r + gap) & (np.abs(yy - y) <= r + gap)
            if (blocked_for_placement & near).any():
                continue
            base[disk] = intensity
            blocked_for_placement[disk] = True
            regions.append(
                frozenset(zip(xx[disk].tolist(), yy[disk].tolist()))
            )
        return tuple(regions)

    craters = place_disks(spec.crater_count, spec.crater_width_m, spec.crater_intensity)
    mounds = place_disks(spec.mound_count, spec.mound_width_m, spec.mound_intensity)
    amp = spec.noise_amplitude
    noise = rng.integers(-amp, amp + 1, size=(h, w)) if amp > 0 else 0
    img = GrayImage(np.clip(base + noise, 0, 255).astype(np.uint8), scale)

    pit_cells = frozenset(zip(xx[pit_mask].tolist(), yy[pit_mask].tolist()))
    obstacle_cells = frozenset().union(*craters, *mounds) if (craters or mounds) else frozenset()
    rim = frozenset(extract_rim(pit_cells, (w, h)) - obstacle_cells)
    labels = SceneLabels(obstacle_cells, pit_cells, rim, ())
    return img, SynthTruth(labels, craters, mounds)
