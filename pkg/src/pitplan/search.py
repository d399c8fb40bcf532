"""Least-cost global path planning on the traversal costmap.

A* with an 8-connected neighborhood and the octile-distance heuristic,
plus an independently coded Dijkstra used as a verification oracle.

Step costs are 1 for axial and sqrt(2) for diagonal moves, scaled to
meters. Costs are tracked as integer pairs ``(a, b)`` meaning
``a + b*sqrt(2)``, so path costs compare exactly: two costs are equal
iff their pairs are equal (sqrt(2) is irrational), and ordering reduces
to integer arithmetic.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

SQRT2 = math.sqrt(2.0)

# axial moves first, then diagonals; order is fixed for determinism
_STEPS = (
    (1, 0, 1, 0), (-1, 0, 1, 0), (0, 1, 1, 0), (0, -1, 1, 0),
    (1, 1, 0, 1), (1, -1, 0, 1), (-1, 1, 0, 1), (-1, -1, 0, 1),
)


@dataclass(frozen=True)
class GridPath:
    """Waypoint sequence on the grid with its exact step counts."""

    waypoints: tuple
    axial_steps: int
    diag_steps: int
    length_m: float

    @staticmethod
    def from_waypoints(waypoints, meters_per_cell: float) -> "GridPath":
        a = b = 0
        for (x0, y0), (x1, y1) in zip(waypoints, waypoints[1:]):
            dx, dy = abs(x1 - x0), abs(y1 - y0)
            if max(dx, dy) != 1:
                raise ValueError(f"waypoints {x0, y0} -> {x1, y1} are not 8-adjacent")
            if dx + dy == 1:
                a += 1
            else:
                b += 1
        return GridPath(tuple(waypoints), a, b, (a + b * SQRT2) * meters_per_cell)


@dataclass(frozen=True)
class SearchStats:
    expanded_nodes: int
    open_list_peak: int
    outcome: str  # "found" | "unreachable"


def cost_less(a1: int, b1: int, a2: int, b2: int) -> bool:
    """Exact comparison of a1 + b1*sqrt(2) < a2 + b2*sqrt(2)."""
    d = a1 - a2
    e = b1 - b2
    if d == 0:
        return e < 0
    if e == 0:
        return d < 0
    if d < 0 and e < 0:
        return True
    if d > 0 and e > 0:
        return False
    # opposite signs: compare |d| with |e|*sqrt(2) via squares
    if d < 0:  # d < 0 < e: value < 0 iff d*d > 2*e*e
        return d * d > 2 * e * e
    return d * d < 2 * e * e  # e < 0 < d


def octile_h(a, b, scale: float) -> float:
    """Octile distance in meters: the true 8-connected shortest distance on
    an empty grid, hence consistent for this cost model."""
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    lo = min(dx, dy)
    return (max(dx, dy) - lo + SQRT2 * lo) * scale


def _octile_pair(a, b):
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    lo = min(dx, dy)
    return max(dx, dy) - lo, lo


def _check_endpoints(costmap, start, goal):
    for name, (x, y) in (("start", start), ("goal", goal)):
        if not (0 <= x < costmap.width and 0 <= y < costmap.height):
            raise ValueError(f"{name} {x, y} out of bounds")
        if costmap.blocked[y, x]:
            raise ValueError(f"{name} {x, y} is blocked")


def _successors(blocked, x, y, w, h):
    for dx, dy, sa, sb in _STEPS:
        nx, ny = x + dx, y + dy
        if not (0 <= nx < w and 0 <= ny < h) or blocked[ny, nx]:
            continue
        if sb and (blocked[y, nx] or blocked[ny, x]):
            continue  # no cutting corners between touching obstacles
        yield nx, ny, sa, sb


def _reconstruct(parents, cell, scale):
    waypoints = [cell]
    while parents[cell] is not None:
        cell = parents[cell]
        waypoints.append(cell)
    waypoints.reverse()
    return GridPath.from_waypoints(waypoints, scale)


def astar(costmap, start, goal):
    """Optimal path by A* with the octile heuristic.

    Ties on f are broken toward larger g, then row-major cell order, making
    the returned path deterministic. Returns (GridPath | None, SearchStats);
    an exhausted open list reports the "unreachable" outcome.
    """
    _check_endpoints(costmap, start, goal)
    blocked = costmap.blocked
    w, h = costmap.width, costmap.height
    scale = costmap.meters_per_cell

    g_pairs = {start: (0, 0)}
    parents = {start: None}
    closed = set()
    h0 = octile_h(start, goal, 1.0)
    heap = [(h0, 0.0, start[1], start[0], 0, 0)]
    peak = 1
    expanded = 0

    while heap:
        f, neg_g, y, x, ga, gb = heapq.heappop(heap)
        cell = (x, y)
        if cell in closed or (ga, gb) != g_pairs[cell]:
            continue
        closed.add(cell)
        expanded += 1
        if cell == goal:
            return _reconstruct(parents, cell, scale), SearchStats(expanded, peak, "found")
        for nx, ny, sa, sb in _successors(blocked, x, y, w, h):
            ncell = (nx, ny)
            if ncell in closed:
                continue
            na, nb = ga + sa, gb + sb
            old = g_pairs.get(ncell)
            if old is not None and not cost_less(na, nb, old[0], old[1]):
                continue
            g_pairs[ncell] = (na, nb)
            parents[ncell] = cell
            ha, hb = _octile_pair(ncell, goal)
            gf = na + nb * SQRT2
            heapq.heappush(heap, (gf + ha + hb * SQRT2, -gf, ny, nx, na, nb))
            if len(heap) > peak:
                peak = len(heap)
    return None, SearchStats(expanded, peak, "unreachable")


def dijkstra(costmap, start, goal):
    """Optimal path by uniform-cost search; the oracle twin of astar.

    Kept independent of the A* code path on purpose: only the cost model
    (unit/sqrt(2) steps, corner-cutting ban) is shared by specification.
    """
    _check_endpoints(costmap, start, goal)
    blocked = costmap.blocked
    w, h = costmap.width, costmap.height
    scale = costmap.meters_per_cell

    dist = {start: (0, 0)}
    parents = {start: None}
    done = set()
    heap = [(0.0, start[1], start[0], 0, 0)]
    peak = 1
    expanded = 0

    while heap:
        _, y, x, ga, gb = heapq.heappop(heap)
        cell = (x, y)
        if cell in done or (ga, gb) != dist[cell]:
            continue
        done.add(cell)
        expanded += 1
        if cell == goal:
            return _reconstruct(parents, cell, scale), SearchStats(expanded, peak, "found")
        for dx, dy, sa, sb in _STEPS:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < w and 0 <= ny < h) or blocked[ny, nx]:
                continue
            if sb and (blocked[y, nx] or blocked[ny, x]):
                continue
            ncell = (nx, ny)
            if ncell in done:
                continue
            na, nb = ga + sa, gb + sb
            old = dist.get(ncell)
            if old is not None and not cost_less(na, nb, old[0], old[1]):
                continue
            dist[ncell] = (na, nb)
            parents[ncell] = cell
            heapq.heappush(heap, (na + nb * SQRT2, ny, nx, na, nb))
            if len(heap) > peak:
                peak = len(heap)
    return None, SearchStats(expanded, peak, "unreachable")


def check_consistency(costmap, goal, nodes=None) -> dict:
    """Verify h(n) <= c(n, n') + h(n') for sampled nodes and their successors.

    The check is exact: both sides are integer (axial, diag) pairs. Returns
    a report with the number of pairs checked and any violations (expected
    none for the octile heuristic).
    """
    blocked = costmap.blocked
    w, h = costmap.width, costmap.height
    if nodes is None:
        nodes = [
            (x, y) for y in range(h) for x in range(w) if not blocked[y, x]
        ]
    checked = 0
    violations = []
    for (x, y) in nodes:
        if blocked[y, x]:
            continue
        ha, hb = _octile_pair((x, y), goal)
        for nx, ny, sa, sb in _successors(blocked, x, y, w, h):
            ca, cb = _octile_pair((nx, ny), goal)
            checked += 1
            if cost_less(ca + sa, cb + sb, ha, hb):
                violations.append(((x, y), (nx, ny)))
    return {"checked": checked, "violations": violations}
