"""Viewport-overlap tile classification and importance weighting.

Tiles of the equirectangular grid are ranked into four classes by their
overlap with the viewer's field of view, then weighted by ``E * L / 4``
where ``E`` is the prediction probability and ``L`` the class level.
Viewport membership of a sampled direction is a yaw/pitch box test:
within +/- half the field of view of the view direction on each axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CLASS_COUNT = 4
FULL_OVERLAP_TOL = 1e-9
UNIT_TOL = 1e-9


@dataclass(frozen=True)
class Viewpoint:
    """A gaze direction as a unit vector on the sphere."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if abs(self.norm() - 1.0) > UNIT_TOL:
            raise ValueError(f"viewpoint must be unit length, |v|={self.norm()!r}")

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @classmethod
    def from_angles(cls, yaw_deg: float, pitch_deg: float) -> "Viewpoint":
        yaw, pitch = math.radians(yaw_deg), math.radians(pitch_deg)
        return cls(
            math.cos(pitch) * math.cos(yaw),
            math.cos(pitch) * math.sin(yaw),
            math.sin(pitch),
        )

    @classmethod
    def from_vector(cls, vec) -> "Viewpoint":
        v = np.asarray(vec, dtype=np.float64)
        nrm = float(np.linalg.norm(v))
        if nrm == 0.0:
            raise ValueError("zero vector has no direction")
        v = v / nrm
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @property
    def yaw_deg(self) -> float:
        return math.degrees(math.atan2(self.y, self.x))

    @property
    def pitch_deg(self) -> float:
        return math.degrees(math.asin(max(-1.0, min(1.0, self.z))))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


def great_circle_distance(a: Viewpoint, b: Viewpoint) -> float:
    """Arc length between two unit directions, in radians, via atan2."""
    va, vb = a.as_array(), b.as_array()
    for v in (va, vb):
        if abs(float(np.linalg.norm(v)) - 1.0) > UNIT_TOL:
            raise ValueError("great-circle distance requires unit vectors")
    cross = np.cross(va, vb)
    return float(math.atan2(float(np.linalg.norm(cross)), float(np.dot(va, vb))))


@dataclass(frozen=True)
class ViewportSpec:
    """Field of view in degrees; horizontal up to 360, vertical up to 180."""

    h_fov_deg: float = 120.0
    v_fov_deg: float = 120.0

    def __post_init__(self) -> None:
        if not 0.0 < self.h_fov_deg <= 360.0:
            raise ValueError(f"horizontal fov must be in (0, 360], got {self.h_fov_deg}")
        if not 0.0 < self.v_fov_deg <= 180.0:
            raise ValueError(f"vertical fov must be in (0, 180], got {self.v_fov_deg}")


@dataclass(frozen=True)
class TileGrid:
    """Rows x cols partition of the equirectangular frame (default 4 x 6)."""

    rows: int = 4
    cols: int = 6

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("grid must have positive rows and cols")

    @property
    def tile_count(self) -> int:
        return self.rows * self.cols

    def bounds(self, tile: int) -> tuple[float, float, float, float]:
        """(lat_lo, lat_hi, lon_lo, lon_hi) of a tile, degrees."""
        if not 0 <= tile < self.tile_count:
            raise ValueError(f"tile {tile} out of range")
        r, c = divmod(tile, self.cols)
        lat_step = 180.0 / self.rows
        lon_step = 360.0 / self.cols
        return (
            -90.0 + r * lat_step,
            -90.0 + (r + 1) * lat_step,
            -180.0 + c * lon_step,
            -180.0 + (c + 1) * lon_step,
        )

    def center(self, tile: int) -> Viewpoint:
        lat_lo, lat_hi, lon_lo, lon_hi = self.bounds(tile)
        return Viewpoint.from_angles((lon_lo + lon_hi) / 2.0, (lat_lo + lat_hi) / 2.0)


def _wrap_deg(a: np.ndarray) -> np.ndarray:
    """Wrap angle differences into (-180, 180]."""
    return 180.0 - np.mod(180.0 - a, 360.0)


def overlap_fractions(
    view: Viewpoint,
    grid: TileGrid = TileGrid(),
    spec: ViewportSpec = ViewportSpec(),
    samples: int = 64,
) -> np.ndarray:
    """Per-tile fraction of dense angular samples falling inside the viewport."""
    if samples <= 0:
        raise ValueError("samples must be positive")
    half_h, half_v = spec.h_fov_deg / 2.0, spec.v_fov_deg / 2.0
    yaw_v, pitch_v = view.yaw_deg, view.pitch_deg
    offs = (np.arange(samples) + 0.5) / samples
    out = np.empty(grid.tile_count, dtype=np.float64)
    for tile in range(grid.tile_count):
        lat_lo, lat_hi, lon_lo, lon_hi = grid.bounds(tile)
        lats = lat_lo + offs * (lat_hi - lat_lo)
        lons = lon_lo + offs * (lon_hi - lon_lo)
        dp = np.abs(lats - pitch_v)
        dy = np.abs(_wrap_deg(lons - yaw_v))
        inside = (dp[:, None] <= half_v) & (dy[None, :] <= half_h)
        out[tile] = float(np.count_nonzero(inside)) / float(samples * samples)
    return out


def classify_tiles(
    view: Viewpoint,
    grid: TileGrid = TileGrid(),
    spec: ViewportSpec = ViewportSpec(),
    samples: int = 64,
) -> list[int]:
    """Viewport class per tile: 4 full, 3 over half, 2 partial, 1 outside."""
    classes = []
    for f in overlap_fractions(view, grid, spec, samples):
        if f >= 1.0 - FULL_OVERLAP_TOL:
            classes.append(4)
        elif f >= 0.5:
            classes.append(3)
        elif f > 0.0:
            classes.append(2)
        else:
            classes.append(1)
    return classes


def tile_weight(probability: float, level: int) -> float:
    """Importance weight ``E * L / M`` with M = 4 classes."""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {probability}")
    if level not in (1, 2, 3, 4):
        raise ValueError(f"class level must be one of 1..4, got {level}")
    return probability * level / CLASS_COUNT


@dataclass(frozen=True)
class TileWeights:
    """Per-tile importance weights and the classes they derive from."""

    weights: tuple[float, ...]
    classes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.classes):
            raise ValueError("weights and classes must have equal length")
        for w in self.weights:
            if w < 0.0 or not np.isfinite(w):
                raise ValueError("weights must be finite and non-negative")
        for c in self.classes:
            if c not in (1, 2, 3, 4):
                raise ValueError("classes must be in 1..4")

    @classmethod
    def uniform(cls, tiles: int, weight: float = 1.0) -> "TileWeights":
        return cls(tuple(weight for _ in range(tiles)), tuple(4 for _ in range(tiles)))


def weights_for_prediction(
    view: Viewpoint,
    probability: float,
    grid: TileGrid = TileGrid(),
    spec: ViewportSpec = ViewportSpec(),
    samples: int = 64,
) -> TileWeights:
    """Classify tiles against the predicted viewpoint and weight them."""
    classes = classify_tiles(view, grid, spec, samples)
    weights = tuple(tile_weight(probability, c) for c in classes)
    return TileWeights(weights, tuple(classes))
