"""Maximally stable extremal region detection and hazard classification.

Detection sweeps intensity thresholds from dark to bright, growing
4-connected components with a union-find merge structure. Every merge
event becomes a node of the component tree; a node's region is stable
when its area barely changes across a window of ``delta`` intensity
levels. Bright regions come from the same sweep on the inverted image.

Classification turns detected regions into scene labels: small regions
are ignored, mid-sized ones are obstacles, very wide ones are terrain,
and one region (largest by default, or seeded) is the pit whose border
cells become the rover goal sites.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import GrayImage

_NEG_INF = float("-inf")


class ClassificationError(ValueError):
    """No pit can be identified from the detected regions."""


@dataclass(frozen=True)
class MserParams:
    """Detector knobs: stability window, area bounds, variation cap, polarity."""

    delta: int
    min_area_cells: int
    max_area_cells: int
    max_variation: float = 0.25
    polarity: str = "both"

    def __post_init__(self):
        if not 1 <= self.delta <= 127:
            raise ValueError(f"delta must be in 1..127, got {self.delta}")
        if not 0 < self.min_area_cells <= self.max_area_cells:
            raise ValueError(
                f"need 0 < min_area <= max_area, got {self.min_area_cells}, {self.max_area_cells}"
            )
        if self.max_variation <= 0:
            raise ValueError("max_variation must be positive")
        if self.polarity not in ("dark", "bright", "both"):
            raise ValueError(f"polarity must be dark|bright|both, got {self.polarity!r}")


def default_params(img: GrayImage, polarity: str = "both") -> MserParams:
    """Defaults sized from the image: area floor from the 2 m hazard rule,
    area ceiling at 25% of the image."""
    cells_per_2m = 2.0 / img.meters_per_cell
    min_area = max(1, round(cells_per_2m * cells_per_2m / 2.0))
    max_area = max(min_area, int(0.25 * img.width * img.height))
    return MserParams(5, min_area, max_area, 0.25, polarity)


@dataclass(frozen=True)
class ExtremalRegion:
    """One detected region: its cells, extraction threshold, and stability."""

    cells: frozenset
    level: int
    stability: float
    polarity: str
    bbox: tuple[int, int, int, int]

    @property
    def area(self) -> int:
        return len(self.cells)

    def width_m(self, meters_per_cell: float) -> float:
        x0, y0, x1, y1 = self.bbox
        return max(x1 - x0 + 1, y1 - y0 + 1) * meters_per_cell


@dataclass(frozen=True)
class PitRule:
    """How to pick the pit among detected regions: largest area, or the
    smallest region containing ``seed_cell``."""

    mode: str = "largest"
    seed_cell: tuple[int, int] | None = None

    def __post_init__(self):
        if self.mode not in ("largest", "seed"):
            raise ValueError(f"pit rule mode must be largest|seed, got {self.mode!r}")
        if self.mode == "seed" and self.seed_cell is None:
            raise ValueError("seed pit rule requires a seed cell")


@dataclass(frozen=True)
class SceneLabels:
    """Classified cell sets: hazards, the pit, and its traversable border."""

    obstacle_cells: frozenset
    pit_cells: frozenset
    rim_cells: frozenset
    terrain_region_ids: tuple[int, ...]

    def __post_init__(self):
        if self.obstacle_cells & self.pit_cells:
            raise ValueError("obstacle and pit cells must be disjoint")


class _ComponentTree:
    """Union-find sweep over one polarity; nodes record the merge history."""

    def __init__(self, arr: np.ndarray):
        self.h, self.w = arr.shape
        n = arr.size
        self.uf = [-1] * n
        self.uf_size = [0] * n
        self.comp_node = [-1] * n
        # node-parallel lists
        self.level: list[int] = []
        self.area: list[int] = []
        self.parent: list[int] = []
        self.children: list[list[int]] = []
        self.pixels: list[list[int]] = []
        self.alive: list[bool] = []
        self._build(arr)

    def _new_node(self, level: int, pix: int) -> int:
        node = len(self.level)
        self.level.append(level)
        self.area.append(1)
        self.parent.append(-1)
        self.children.append([])
        self.pixels.append([pix])
        self.alive.append(True)
        return node

    def _find(self, p: int) -> int:
        uf = self.uf
        while uf[p] != p:
            uf[p] = uf[uf[p]]
            p = uf[p]
        return p

    def _build(self, arr: np.ndarray):
        flat = arr.ravel()
        order = np.argsort(flat, kind="stable")
        w = self.w
        uf, uf_size, comp_node = self.uf, self.uf_size, self.comp_node
        level, area, parent, children, pixels = (
            self.level, self.area, self.parent, self.children, self.pixels,
        )
        for p in order.tolist():
            v = int(flat[p])
            uf[p] = p
            uf_size[p] = 1
            node_p = self._new_node(v, p)
            comp_node[p] = node_p
            x = p % w
            neighbors = []
            if x > 0:
                neighbors.append(p - 1)
            if x + 1 < w:
                neighbors.append(p + 1)
            if p >= w:
                neighbors.append(p - w)
            if p + w < len(uf):
                neighbors.append(p + w)
            for q in neighbors:
                if uf[q] == -1:
                    continue
                rp = self._find(p)
                rq = self._find(q)
                if rp == rq:
                    continue
                na = comp_node[rp]
                nb = comp_node[rq]
                # union by size at the pixel level
                if uf_size[rp] < uf_size[rq]:
                    rp, rq = rq, rp
                uf[rq] = rp
                uf_size[rp] += uf_size[rq]
                if level[na] == v and level[nb] == v:
                    # same-level merge: absorb the smaller node
                    keep, drop = (na, nb)
                    if (area[drop], -drop) > (area[keep], -keep):
                        keep, drop = drop, keep
                    area[keep] += area[drop]
                    pixels[keep].extend(pixels[drop])
                    for c in children[drop]:
                        parent[c] = keep
                    children[keep].extend(children[drop])
                    self.alive[drop] = False
                    comp_node[rp] = keep
                elif level[na] == v:
                    # the older component becomes a child of the level-v node
                    parent[nb] = na
                    children[na].append(nb)
                    area[na] += area[nb]
                    comp_node[rp] = na
                else:
                    parent[na] = nb
                    children[nb].append(na)
                    area[nb] += area[na]
                    comp_node[rp] = nb

    def main_child(self, node: int) -> int:
        """Child continuing the branch: largest area, ties to the lower id."""
        kids = self.children[node]
        if not kids:
            return -1
        best = kids[0]
        for c in kids[1:]:
            if (self.area[c], -c) > (self.area[best], -best):
                best = c
        return best

    def span_end(self, node: int) -> int:
        p = self.parent[node]
        return self.level[p] - 1 if p != -1 else 255

    def stability_of(self, node: int, delta: int) -> float:
        """Minimum variation over the node's level span.

        At threshold t the live region is this node; the variation compares
        the branch areas delta levels up and down, clamping past the branch
        ends (a region is judged against itself where no descendant exists
        that far down). The root spans to the brightest level with nothing
        above it, so it gets infinite variation rather than a vacuous zero.
        """
        level, area, parent = self.level, self.area, self.parent
        if parent[node] == -1:
            return float("inf")
        # descending main-branch chain, node first
        chain = [node]
        c = self.main_child(node)
        while c != -1:
            chain.append(c)
            c = self.main_child(c)
        a_node = area[node]
        lo = level[node]
        hi = self.span_end(node)
        up = node
        down_i = 0  # index into chain of the region at t - delta (clamped)
        best = float("inf")
        for t in range(lo, hi + 1):
            while parent[up] != -1 and level[parent[up]] <= t + delta:
                up = parent[up]
            td = t - delta
            while down_i + 1 < len(chain) and level[chain[down_i]] > td:
                down_i += 1
            # walk back up if the pointer overshot below td (clamped at leaf)
            while down_i > 0 and level[chain[down_i - 1]] <= td:
                down_i -= 1
            q = (area[up] - area[chain[down_i]]) / a_node
            if q < best:
                best = q
        return best

    def collect_cells(self, node: int) -> list[int]:
        out = []
        stack = [node]
        while stack:
            n = stack.pop()
            out.extend(self.pixels[n])
            stack.extend(self.children[n])
        return out

    def is_ancestor(self, anc: int, node: int) -> bool:
        p = self.parent[node]
        while p != -1:
            if p == anc:
                return True
            p = self.parent[p]
        return False


def _sweep(arr: np.ndarray, params: MserParams, polarity: str) -> list[ExtremalRegion]:
    tree = _ComponentTree(arr)
    n_nodes = len(tree.level)
    stab = [0.0] * n_nodes
    for n in range(n_nodes):
        if tree.alive[n]:
            stab[n] = tree.stability_of(n, params.delta)

    candidates = []
    for n in range(n_nodes):
        if not tree.alive[n]:
            continue
        a = tree.area[n]
        if not params.min_area_cells <= a <= params.max_area_cells:
            continue
        if stab[n] > params.max_variation:
            continue
        p = tree.parent[n]
        if p != -1 and stab[n] > stab[p]:
            continue
        mc = tree.main_child(n)
        if mc != -1 and stab[n] > stab[mc]:
            continue
        candidates.append(n)

    # nested near-duplicates: keep the most stable along each branch
    candidates.sort(key=lambda n: (stab[n], -tree.area[n], tree.level[n], n))
    kept: list[int] = []
    for n in candidates:
        duplicate = False
        for k in kept:
            if tree.is_ancestor(k, n):
                ratio = tree.area[n] / tree.area[k]
            elif tree.is_ancestor(n, k):
                ratio = tree.area[k] / tree.area[n]
            else:
                continue
            if ratio > 0.9:
                duplicate = True
                break
        if not duplicate:
            kept.append(n)

    w = tree.w
    regions = []
    for n in kept:
        pix = tree.collect_cells(n)
        xs = [p % w for p in pix]
        ys = [p // w for p in pix]
        cells = frozenset(zip(xs, ys))
        bbox = (min(xs), min(ys), max(xs), max(ys))
        lvl = tree.level[n] if polarity == "dark" else 255 - tree.level[n]
        regions.append(ExtremalRegion(cells, lvl, stab[n], polarity, bbox))
    return regions


def detect(img: GrayImage, params: MserParams) -> list[ExtremalRegion]:
    """Run the threshold sweep for the requested polarities.

    Dark regions are connected components of {p : I(p) <= t}; bright regions
    come from the identical sweep on the inverted image. The result order is
    deterministic: dark before bright, then by bounding box and level.
    """
    regions: list[ExtremalRegion] = []
    if params.polarity in ("dark", "both"):
        regions.extend(_sweep(img.intensities, params, "dark"))
    if params.polarity in ("bright", "both"):
        inverted = (255 - img.intensities.astype(np.int16)).astype(np.uint8)
        regions.extend(_sweep(inverted, params, "bright"))
    regions.sort(
        key=lambda r: (0 if r.polarity == "dark" else 1, r.bbox, r.level, r.area)
    )
    return regions


def extract_rim(pit_cells, grid_dims: tuple[int, int]) -> set:
    """Exterior border of the pit: in-bounds non-pit cells 8-adjacent to it."""
    pit = set(pit_cells)
    if not pit:
        raise ValueError("pit cell set is empty")
    w, h = grid_dims
    rim = set()
    for x, y in pit:
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h and (nx, ny) not in pit:
                    rim.add((nx, ny))
    return rim


def classify(
    regions: list[ExtremalRegion],
    img_scale: float,
    pit_rule: PitRule,
    grid_dims: tuple[int, int],
    min_obstacle_width_m: float = 2.0,
    terrain_cutoff_m: float = 200.0,
) -> SceneLabels:
    """Partition detected regions into obstacles, terrain, and the pit.

    Region width is the larger bounding-box side in meters. Regions
    narrower than the obstacle floor are ignored; wider than the terrain
    cutoff they count as terrain, not hazards. The pit region is chosen by
    the rule, its cells removed from the obstacle set, and its exterior
    border (minus obstacle cells) becomes the rim.
    """
    if not regions:
        raise ClassificationError("no regions detected; cannot identify the pit")

    if pit_rule.mode == "largest":
        pit_idx = max(range(len(regions)), key=lambda i: (regions[i].area, -i))
    else:
        containing = [i for i, r in enumerate(regions) if pit_rule.seed_cell in r.cells]
        if not containing:
            raise ClassificationError(f"seed cell {pit_rule.seed_cell} lies in no detected region")
        pit_idx = min(containing, key=lambda i: (regions[i].area, i))

    pit_cells = frozenset(regions[pit_idx].cells)
    obstacle_cells: set = set()
    terrain_ids = []
    for i, r in enumerate(regions):
        if i == pit_idx:
            continue
        width = r.width_m(img_scale)
        if width < min_obstacle_width_m:
            continue
        if width > terrain_cutoff_m:
            terrain_ids.append(i)
        else:
            obstacle_cells.update(r.cells)
    obstacle_cells -= pit_cells
    rim = extract_rim(pit_cells, grid_dims) - obstacle_cells
    return SceneLabels(
        frozenset(obstacle_cells), pit_cells, frozenset(rim), tuple(terrain_ids)
    )
