"""Coordinate math: great-circle distance, affine pixel/world mapping and metric ground footprints.

Conventions used throughout the package:

* Earth is a sphere of radius ``EARTH_RADIUS_M`` (IUGG mean radius). At the
  footprint scales handled here (at most a few hundred meters) ellipsoidal
  corrections are far below every tolerance in play.
* Footprints are axis-aligned lat/lon rectangles under the local
  equirectangular approximation: one degree of latitude spans
  ``METERS_PER_DEGREE`` meters, one degree of longitude spans
  ``METERS_PER_DEGREE * cos(lat)`` meters.
* Boundary containment is inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PolarDegenerate, SingularTransform

EARTH_RADIUS_M = 6_371_008.8
METERS_PER_DEGREE = math.pi * EARTH_RADIUS_M / 180.0


def _normalize_lon(lon: float) -> float:
    """Wrap a longitude into [-180, 180); in-range values pass through unchanged."""
    if -180.0 <= lon < 180.0:
        return lon
    wrapped = math.fmod(lon + 180.0, 360.0)
    if wrapped < 0.0:
        wrapped += 360.0
    return wrapped - 180.0


@dataclass(frozen=True)
class GeoPoint:
    """Geographic coordinate in degrees. Longitude is normalized into [-180, 180)."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        lat = float(self.lat)
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude out of range [-90, 90]: {lat}")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", _normalize_lon(float(self.lon)))


@dataclass(frozen=True)
class AffineGeoTransform:
    """Six-coefficient affine mapping from pixel (col, row) to world (x=lon, y=lat).

        x = origin_x + col * pixel_width  + row * row_rotation
        y = origin_y + col * col_rotation + row * pixel_height

    The coefficient order matches the common geospatial sidecar convention.
    Construction rejects a singular linear part.
    """

    origin_x: float
    pixel_width: float
    row_rotation: float
    origin_y: float
    col_rotation: float
    pixel_height: float

    def __post_init__(self) -> None:
        if self.determinant() == 0.0:
            raise SingularTransform(
                "affine geotransform has a singular linear part: "
                f"{(self.pixel_width, self.row_rotation, self.col_rotation, self.pixel_height)}"
            )

    def determinant(self) -> float:
        return self.pixel_width * self.pixel_height - self.row_rotation * self.col_rotation

    @classmethod
    def identity(cls) -> "AffineGeoTransform":
        return cls(0.0, 1.0, 0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class GroundFootprint:
    """Metric ground-coverage rectangle centered on a coordinate."""

    center: GeoPoint
    width_m: float
    height_m: float

    def __post_init__(self) -> None:
        if not (self.width_m > 0.0 and self.height_m > 0.0):
            raise ValueError(
                f"footprint sides must be strictly positive: {self.width_m} x {self.height_m}"
            )

    def area_m2(self) -> float:
        return self.width_m * self.height_m


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points, in meters."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def pixel_to_geo(t: AffineGeoTransform, col: float, row: float) -> GeoPoint:
    """Map a (possibly fractional) pixel coordinate to a geographic point."""
    x = t.origin_x + col * t.pixel_width + row * t.row_rotation
    y = t.origin_y + col * t.col_rotation + row * t.pixel_height
    return GeoPoint(lat=y, lon=x)


def geo_to_pixel(t: AffineGeoTransform, p: GeoPoint) -> tuple[float, float]:
    """Inverse of :func:`pixel_to_geo`; returns fractional (col, row)."""
    det = t.determinant()
    if det == 0.0:
        raise SingularTransform("cannot invert a singular geotransform")
    dx = p.lon - t.origin_x
    dy = p.lat - t.origin_y
    col = (dx * t.pixel_height - dy * t.row_rotation) / det
    row = (dy * t.pixel_width - dx * t.col_rotation) / det
    return col, row


def footprint_bbox(f: GroundFootprint) -> tuple[float, float, float, float]:
    """Bounding box (lat_min, lat_max, lon_min, lon_max) of a footprint in degrees.

    Raises PolarDegenerate within one degree of the poles, where the
    equirectangular longitude scaling breaks down.
    """
    lat = f.center.lat
    if abs(lat) >= 89.0:
        raise PolarDegenerate(f"footprint center too close to a pole: lat={lat}")
    dlat = (f.height_m / 2.0) / METERS_PER_DEGREE
    dlon = (f.width_m / 2.0) / (METERS_PER_DEGREE * math.cos(math.radians(lat)))
    return lat - dlat, lat + dlat, f.center.lon - dlon, f.center.lon + dlon


def bbox_to_footprint(lat_min: float, lat_max: float, lon_min: float, lon_max: float) -> GroundFootprint:
    """Footprint whose bbox is the given degree rectangle (inverse of footprint_bbox)."""
    lat_c = (lat_min + lat_max) / 2.0
    lon_c = (lon_min + lon_max) / 2.0
    height_m = (lat_max - lat_min) * METERS_PER_DEGREE
    width_m = (lon_max - lon_min) * METERS_PER_DEGREE * math.cos(math.radians(lat_c))
    return GroundFootprint(center=GeoPoint(lat_c, lon_c), width_m=width_m, height_m=height_m)


def overlap_ratio(a: GroundFootprint, b: GroundFootprint) -> float:
    """Bbox intersection area divided by the smaller footprint's bbox area.

    Computed in degree space, which keeps the ratio exactly symmetric in its
    arguments; the denominator is the smaller area so a crop nested inside a
    larger one scores 1. Callers should keep centers within about a degree of
    each other (the local planar regime).
    """
    a_lat0, a_lat1, a_lon0, a_lon1 = footprint_bbox(a)
    b_lat0, b_lat1, b_lon0, b_lon1 = footprint_bbox(b)
    inter_lat = min(a_lat1, b_lat1) - max(a_lat0, b_lat0)
    inter_lon = min(a_lon1, b_lon1) - max(a_lon0, b_lon0)
    if inter_lat <= 0.0 or inter_lon <= 0.0:
        return 0.0
    inter = inter_lat * inter_lon
    area_a = (a_lat1 - a_lat0) * (a_lon1 - a_lon0)
    area_b = (b_lat1 - b_lat0) * (b_lon1 - b_lon0)
    return inter / min(area_a, area_b)


def contains(f: GroundFootprint, p: GeoPoint) -> bool:
    """True when p lies inside the footprint's bbox, boundary inclusive."""
    lat_min, lat_max, lon_min, lon_max = footprint_bbox(f)
    return lat_min <= p.lat <= lat_max and lon_min <= p.lon <= lon_max
