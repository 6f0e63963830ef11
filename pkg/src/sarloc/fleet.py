"""Fleet and homeport data model shared by the simulation and the solver."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .geo import GeoPoint, denormalize_longitude
from .zoning import AssetClass


class AssetCategory(Enum):
    BOAT = "boat"
    CUTTER = "cutter"
    AIRPLANE = "airplane"
    HELICOPTER = "helicopter"


class HomeportKind(Enum):
    HARBOR = "harbor"
    AIRPORT = "airport"


# Asset/location pairings that can never happen: seagoing hulls cannot sit at
# an airport and aircraft cannot sit in a harbor.
FORBIDDEN_PAIRS = frozenset(
    {
        (AssetCategory.CUTTER, HomeportKind.AIRPORT),
        (AssetCategory.BOAT, HomeportKind.AIRPORT),
        (AssetCategory.AIRPLANE, HomeportKind.HARBOR),
        (AssetCategory.HELICOPTER, HomeportKind.HARBOR),
    }
)


def compatible(category: AssetCategory, kind: HomeportKind) -> bool:
    return (category, kind) not in FORBIDDEN_PAIRS


# How each zone class maps its maritime and aeronautical demand onto asset
# categories: short-range zones call for boats and helicopters, long-range
# zones for cutters and airplanes.
ZONE_CLASS_ASSETS: Mapping[AssetClass, tuple[AssetCategory, AssetCategory]] = {
    AssetClass.BOAT_HELICOPTER: (AssetCategory.BOAT, AssetCategory.HELICOPTER),
    AssetClass.CUTTER_AIRPLANE: (AssetCategory.CUTTER, AssetCategory.AIRPLANE),
}


@dataclass(frozen=True)
class Asset:
    id: str
    category: AssetCategory
    cruise_speed_kts: float
    max_speed_kts: float
    monthly_hours: float  # hours per month available for rescue work
    current_homeport: str

    def __post_init__(self) -> None:
        if self.cruise_speed_kts <= 0.0 or self.max_speed_kts <= 0.0:
            raise ValueError(f"asset {self.id}: speeds must be positive")
        if self.max_speed_kts < self.cruise_speed_kts:
            raise ValueError(f"asset {self.id}: max speed below cruise speed")
        if self.monthly_hours <= 0.0:
            raise ValueError(f"asset {self.id}: monthly hours must be positive")

    @classmethod
    def from_json(cls, obj: Mapping) -> "Asset":
        return cls(
            id=obj["id"],
            category=AssetCategory(obj["category"]),
            cruise_speed_kts=float(obj["cruise_speed_kts"]),
            max_speed_kts=float(obj["max_speed_kts"]),
            monthly_hours=float(obj["monthly_hours"]),
            current_homeport=obj["current_homeport"],
        )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "category": self.category.value,
            "cruise_speed_kts": self.cruise_speed_kts,
            "max_speed_kts": self.max_speed_kts,
            "monthly_hours": self.monthly_hours,
            "current_homeport": self.current_homeport,
        }


@dataclass(frozen=True)
class Homeport:
    id: str
    kind: HomeportKind
    position: GeoPoint

    @classmethod
    def from_json(cls, obj: Mapping) -> "Homeport":
        return cls(
            id=obj["id"],
            kind=HomeportKind(obj["kind"]),
            position=GeoPoint.from_east(float(obj["lat"]), float(obj["lon"])),
        )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "lat": self.position.lat_deg,
            "lon": denormalize_longitude(self.position.lon_deg_w),
        }


def load_assets(path: str | Path) -> list[Asset]:
    with Path(path).open() as fh:
        return [Asset.from_json(obj) for obj in json.load(fh)]


def load_homeports(path: str | Path) -> list[Homeport]:
    with Path(path).open() as fh:
        ports = [Homeport.from_json(obj) for obj in json.load(fh)]
    ids = [p.id for p in ports]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate homeport ids in {path}")
    return ports


def validate_fleet(assets: Sequence[Asset], homeports: Sequence[Homeport]) -> None:
    """Every asset's current homeport must exist and be of a compatible kind."""
    by_id = {p.id: p for p in homeports}
    for a in assets:
        port = by_id.get(a.current_homeport)
        if port is None:
            raise ValueError(f"asset {a.id}: unknown current homeport {a.current_homeport!r}")
        if not compatible(a.category, port.kind):
            raise ValueError(
                f"asset {a.id} ({a.category.value}) cannot be homeported at "
                f"{port.id} ({port.kind.value})"
            )
