"""Spherical-earth geodesy primitives shared by every other module.

All longitudes inside the package are stored west-positive in [0, 360) so
that the study region, which straddles the antimeridian, stays contiguous
on a plane.  Input files use conventional east-positive degrees and are
converted on load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_NMI = 3440.065  # mean spherical radius, nautical miles


def normalize_longitude(raw_lon_deg: float) -> float:
    """Map an east-positive longitude in [-180, 180] to west-positive [0, 360).

    Western longitudes keep their magnitude (157 W -> 157.0) while eastern
    ones wrap the long way round (144.696 E -> 215.304).  The mapping is
    bijective on [-180, 180).
    """
    if not -180.0 <= raw_lon_deg <= 180.0:
        raise ValueError(f"longitude {raw_lon_deg!r} outside [-180, 180]")
    if raw_lon_deg <= 0.0:
        return 0.0 - raw_lon_deg
    return (360.0 - raw_lon_deg) % 360.0


def denormalize_longitude(lon_deg_w: float) -> float:
    """Inverse of :func:`normalize_longitude`, back to east-positive degrees."""
    if not 0.0 <= lon_deg_w < 360.0:
        raise ValueError(f"west-positive longitude {lon_deg_w!r} outside [0, 360)")
    if lon_deg_w <= 180.0:
        return 0.0 - lon_deg_w
    return 360.0 - lon_deg_w


@dataclass(frozen=True)
class GeoPoint:
    """A latitude / west-positive-longitude pair on the unit sphere.

    ``lon_deg_w`` is west of the prime meridian in [0, 360); use
    :meth:`from_east` when reading conventional coordinates.
    """

    lat_deg: float
    lon_deg_w: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat_deg <= 90.0:
            raise ValueError(f"latitude {self.lat_deg!r} outside [-90, 90]")
        if not 0.0 <= self.lon_deg_w < 360.0:
            raise ValueError(f"longitude {self.lon_deg_w!r} outside [0, 360) west-positive")

    @classmethod
    def from_east(cls, lat_deg: float, lon_deg_east: float) -> "GeoPoint":
        return cls(lat_deg, normalize_longitude(lon_deg_east))

    @property
    def lon_deg_east(self) -> float:
        return denormalize_longitude(self.lon_deg_w)


def haversine_nmi(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in nautical miles."""
    lat1 = math.radians(a.lat_deg)
    lat2 = math.radians(b.lat_deg)
    dlat = lat2 - lat1
    # Longitudes share the west-positive convention, so the difference is
    # already free of antimeridian jumps for nearby points.
    dlon = math.radians(b.lon_deg_w - a.lon_deg_w)
    s = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_NMI * math.asin(min(1.0, math.sqrt(s)))


def travel_time_hours(dist_nmi: float, speed_kts: float) -> float:
    """Hours to cover ``dist_nmi`` at a constant ``speed_kts``."""
    if speed_kts <= 0.0:
        raise ValueError(f"speed must be positive, got {speed_kts!r}")
    if dist_nmi < 0.0:
        raise ValueError(f"distance must be non-negative, got {dist_nmi!r}")
    return dist_nmi / speed_kts
