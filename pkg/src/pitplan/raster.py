"""Grayscale rasters, binary occupancy grids, and footprint dilation.

Cell coordinates are ``(x, y)`` with the origin at the top-left corner,
x growing rightward and y downward. Arrays are indexed ``[y, x]``.
Every raster carries a metric scale (meters per cell) so that mission
constants expressed in meters stay meaningful on any input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage


class PgmError(ValueError):
    """Base class for PGM parse failures."""


class PgmMagicError(PgmError):
    """Input does not start with a supported magic number (P2/P5)."""


class PgmHeaderError(PgmError):
    """Dimensions or maxval are missing, malformed, or out of range."""


class PgmDataError(PgmError):
    """Pixel payload is truncated, overlong, or holds out-of-range samples."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Grayscale terrain raster with a fixed metric scale.

    ``intensities`` is a ``(height, width)`` uint8 array; the instance is
    read-only after construction and safe to share across tasks.
    """

    intensities: np.ndarray
    meters_per_cell: float

    def __post_init__(self):
        arr = np.asarray(self.intensities)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D intensity array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.min(initial=0) < 0 or arr.max(initial=0) > 255:
                raise ValueError("intensities must lie in 0..255")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "intensities", arr)
        scale = float(self.meters_per_cell)
        if not math.isfinite(scale) or scale <= 0:
            raise ValueError(f"meters_per_cell must be positive and finite, got {scale}")
        object.__setattr__(self, "meters_per_cell", scale)

    @property
    def width(self) -> int:
        return self.intensities.shape[1]

    @property
    def height(self) -> int:
        return self.intensities.shape[0]


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Binary workspace/configuration-space grid: False = free, True = occupied."""

    occupancy: np.ndarray
    meters_per_cell: float

    def __post_init__(self):
        arr = np.asarray(self.occupancy)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D occupancy array, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            if not np.isin(arr, (0, 1)).all():
                raise ValueError("occupancy cells must be exactly 0 or 1")
            arr = arr.astype(bool)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "occupancy", arr)
        scale = float(self.meters_per_cell)
        if not math.isfinite(scale) or scale <= 0:
            raise ValueError(f"meters_per_cell must be positive and finite, got {scale}")
        object.__setattr__(self, "meters_per_cell", scale)

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    def is_occupied(self, x: int, y: int) -> bool:
        return bool(self.occupancy[y, x])

    @classmethod
    def from_cells(cls, width, height, meters_per_cell, occupied_cells) -> "OccupancyGrid":
        arr = np.zeros((height, width), dtype=bool)
        for x, y in occupied_cells:
            arr[y, x] = True
        return cls(arr, meters_per_cell)


@dataclass(frozen=True)
class StructuringElement:
    """Set of (dx, dy) offsets stamping a robot footprint onto the grid."""

    offsets: frozenset
    shape_tag: str
    nominal_size_m: float

    def __post_init__(self):
        offs = frozenset((int(dx), int(dy)) for dx, dy in self.offsets)
        object.__setattr__(self, "offsets", offs)
        if (0, 0) not in offs:
            raise ValueError("structuring element must contain the origin")
        for dx, dy in offs:
            if (-dx, -dy) not in offs:
                raise ValueError("structuring element must be point-symmetric about the origin")

    @property
    def extent(self) -> tuple[int, int]:
        """(max |dx|, max |dy|) over the offsets."""
        ex = max(abs(dx) for dx, _ in self.offsets)
        ey = max(abs(dy) for _, dy in self.offsets)
        return ex, ey

    def to_mask(self) -> np.ndarray:
        """Boolean mask of shape (2*ey + 1, 2*ex + 1) with the origin centered."""
        ex, ey = self.extent
        mask = np.zeros((2 * ey + 1, 2 * ex + 1), dtype=bool)
        for dx, dy in self.offsets:
            mask[dy + ey, dx + ex] = True
        return mask


def disk_element(diameter_m: float, meters_per_cell: float) -> StructuringElement:
    """Disk footprint of the given diameter, radius rounded up to whole cells.

    Membership uses squared-integer arithmetic (dx^2 + dy^2 <= r^2); the
    radius never rounds below one cell.
    """
    if diameter_m <= 0:
        raise ValueError(f"diameter must be positive, got {diameter_m}")
    r = max(1, math.ceil((diameter_m / 2.0) / meters_per_cell))
    offsets = frozenset(
        (dx, dy)
        for dx in range(-r, r + 1)
        for dy in range(-r, r + 1)
        if dx * dx + dy * dy <= r * r
    )
    return StructuringElement(offsets, "disk", diameter_m)


def square_element(side_m: float, meters_per_cell: float) -> StructuringElement:
    """Axis-aligned square footprint, half-width rounded up to whole cells."""
    if side_m <= 0:
        raise ValueError(f"side must be positive, got {side_m}")
    h = max(1, math.ceil((side_m / 2.0) / meters_per_cell))
    offsets = frozenset((dx, dy) for dx in range(-h, h + 1) for dy in range(-h, h + 1))
    return StructuringElement(offsets, "square", side_m)


def dilate_obstacles(grid: OccupancyGrid, se: StructuringElement) -> OccupancyGrid:
    """Grow occupied cells by the footprint, producing a configuration space.

    A cell is free in the result only if the footprint stamped there lies
    fully in-bounds and covers no occupied input cell; footprints that would
    poke off-grid mark their center occupied.
    """
    dilated = ndimage.binary_dilation(
        grid.occupancy, structure=se.to_mask(), border_value=1
    )
    return OccupancyGrid(dilated, grid.meters_per_cell)


def read_pgm(data: bytes, meters_per_cell: float) -> GrayImage:
    """Parse a P2 (ASCII) or P5 (binary) PGM with maxval <= 255."""
    if len(data) < 2 or data[0:1] != b"P":
        raise PgmMagicError("not a PGM: missing 'P' magic")
    magic = data[0:2]
    if magic not in (b"P2", b"P5"):
        raise PgmMagicError(f"unsupported magic {magic!r}; expected P2 or P5")

    pos = 2
    header = []

    def next_token():
        nonlocal pos
        while pos < len(data):
            c = data[pos]
            if c in b" \t\r\n":
                pos += 1
            elif c in b"#":
                while pos < len(data) and data[pos] not in b"\r\n":
                    pos += 1
            else:
                break
        if pos >= len(data):
            raise PgmHeaderError("header ended before width/height/maxval")
        start = pos
        while pos < len(data) and data[pos] not in b" \t\r\n":
            pos += 1
        return data[start:pos]

    for name in ("width", "height", "maxval"):
        tok = next_token()
        try:
            header.append(int(tok))
        except ValueError:
            raise PgmHeaderError(f"{name} is not an integer: {tok!r}") from None
    width, height, maxval = header
    if width <= 0 or height <= 0:
        raise PgmHeaderError(f"dimensions must be positive, got {width}x{height}")
    if not 0 < maxval <= 255:
        raise PgmHeaderError(f"maxval must be in 1..255, got {maxval}")

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the payload
        if pos >= len(data) or data[pos] not in b" \t\r\n":
            raise PgmDataError("missing whitespace before binary pixel data")
        pos += 1
        payload = data[pos : pos + count]
        if len(payload) < count:
            raise PgmDataError(f"truncated pixel data: expected {count} bytes, got {len(payload)}")
        samples = np.frombuffer(payload, dtype=np.uint8)
    else:
        values = []
        while len(values) < count:
            if pos >= len(data):
                raise PgmDataError(f"truncated pixel data: expected {count} samples, got {len(values)}")
            tok = next_token()
            try:
                values.append(int(tok))
            except ValueError:
                raise PgmDataError(f"non-integer sample: {tok!r}") from None
        samples = np.array(values, dtype=np.int64)
    if samples.max(initial=0) > maxval:
        raise PgmDataError(f"sample exceeds declared maxval {maxval}")
    return GrayImage(samples.reshape(height, width).astype(np.uint8), meters_per_cell)


def write_pgm(img: GrayImage) -> bytes:
    """Serialize as binary P5; read_pgm(write_pgm(img), s) is an exact round trip."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.intensities.tobytes()
