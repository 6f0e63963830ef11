"""Location-allocation instance data: travel-time parameters derived from
geography plus the integer demand levels of one scenario.

The per-asset event cap replaces the generic big constant in the linking
constraint: an asset that spends at least the on-site mission time per event
can never serve more than monthly_hours / mission_hours events, so the cap
is safe and much tighter.  ``Instance.with_q`` restores the loose constant
for comparison experiments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..fleet import Asset, AssetCategory, Homeport, compatible, validate_fleet
from ..geo import GeoPoint, denormalize_longitude, haversine_nmi, travel_time_hours
from ..mcsim import DemandScenario
from ..zoning import AssetClass

DEFAULT_MISSION_HOURS = 1.5

CATEGORIES = tuple(AssetCategory)


class Scope(Enum):
    CURRENT_ONLY = "current_only"  # only stations some asset already occupies
    PACIFIC_REGION = "pacific_region"  # every candidate homeport supplied


@dataclass(frozen=True)
class DemandNode:
    zone_id: str
    position: GeoPoint
    asset_class: AssetClass
    levels: Mapping[AssetCategory, int]


@dataclass(frozen=True)
class Instance:
    assets: tuple[Asset, ...]
    homeports: tuple[Homeport, ...]
    zones: tuple[DemandNode, ...]
    mission_hours: float
    scope: Scope
    compat: np.ndarray  # (n_assets, n_ports) bool
    reloc_hours: np.ndarray  # (n_assets, n_ports) c, hours; 0 at the current port
    deploy_hours: np.ndarray  # (n_assets, n_ports, n_zones) d, hours
    q_events: np.ndarray  # (n_assets,) linking cap per asset
    demand: np.ndarray  # (n_zones, len(CATEGORIES)) integer levels

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_ports(self) -> int:
        return len(self.homeports)

    @property
    def n_zones(self) -> int:
        return len(self.zones)

    def category_assets(self, category: AssetCategory) -> list[int]:
        return [a_idx for a_idx, a in enumerate(self.assets) if a.category is category]

    def with_q(self, q: int | Sequence[int]) -> "Instance":
        """Copy of the instance with a different linking cap, e.g. the loose
        100*|J| constant the capacity-derived cap replaces."""
        arr = np.full(self.n_assets, q, dtype=np.int64) if np.isscalar(q) else np.asarray(q, dtype=np.int64)
        if np.any(arr < 0):
            raise ValueError("linking cap must be non-negative")
        return replace(self, q_events=arr)

    def to_json(self) -> dict:
        return {
            "assets": [a.to_json() for a in self.assets],
            "homeports": [p.to_json() for p in self.homeports],
            "zones": [
                {
                    "id": z.zone_id,
                    "lat": z.position.lat_deg,
                    "lon": denormalize_longitude(z.position.lon_deg_w),
                    "asset_class": z.asset_class.value,
                    "levels": {c.value: int(v) for c, v in z.levels.items()},
                }
                for z in self.zones
            ],
            "parameters": {"mission_hours": self.mission_hours, "scope": self.scope.value},
        }

    def save(self, path: str | Path) -> None:
        with Path(path).open("w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_instance(
    assets: Sequence[Asset],
    homeports: Sequence[Homeport],
    scenario: DemandScenario,
    mission_hours: float = DEFAULT_MISSION_HOURS,
    scope: Scope = Scope.CURRENT_ONLY,
) -> Instance:
    """Assemble all travel-time parameters and demand levels for one solve.

    Relocation time divides the distance from an asset's current homeport by
    its cruise speed (zero for staying put); deployment time divides the
    homeport-to-zone distance by its maximum speed.
    """
    if mission_hours <= 0.0:
        raise ValueError("mission_hours must be positive")
    validate_fleet(assets, homeports)

    if scope is Scope.CURRENT_ONLY:
        current_ids = {a.current_homeport for a in assets}
        ports = tuple(p for p in homeports if p.id in current_ids)
    else:
        ports = tuple(homeports)
    port_index = {p.id: i for i, p in enumerate(ports)}
    for a in assets:
        if a.current_homeport not in port_index:
            raise ValueError(f"asset {a.id}: current homeport {a.current_homeport!r} not in scope")

    zones = tuple(
        DemandNode(
            zone_id=zone_id,
            position=scenario.positions[zone_id],
            asset_class=scenario.zone_classes[zone_id],
            levels={
                cat: scenario.levels.get((zone_id, cat), 0)
                for cat in CATEGORIES
                if (zone_id, cat) in scenario.levels
            },
        )
        for zone_id in scenario.positions
    )

    n_a, n_p, n_z = len(assets), len(ports), len(zones)
    compat_m = np.zeros((n_a, n_p), dtype=bool)
    reloc = np.zeros((n_a, n_p))
    deploy = np.zeros((n_a, n_p, n_z))
    for ai, a in enumerate(assets):
        home = ports[port_index[a.current_homeport]]
        for pi, p in enumerate(ports):
            if not compatible(a.category, p.kind):
                continue
            compat_m[ai, pi] = True
            if p.id == a.current_homeport:
                reloc[ai, pi] = 0.0
            else:
                reloc[ai, pi] = travel_time_hours(
                    haversine_nmi(home.position, p.position), a.cruise_speed_kts
                )
            for zi, z in enumerate(zones):
                deploy[ai, pi, zi] = travel_time_hours(
                    haversine_nmi(p.position, z.position), a.max_speed_kts
                )

    q = np.array([int(a.monthly_hours // mission_hours) for a in assets], dtype=np.int64)
    demand = np.zeros((n_z, len(CATEGORIES)), dtype=np.int64)
    for zi, z in enumerate(zones):
        for ci, cat in enumerate(CATEGORIES):
            demand[zi, ci] = z.levels.get(cat, 0)

    return Instance(
        assets=tuple(assets),
        homeports=ports,
        zones=zones,
        mission_hours=mission_hours,
        scope=scope,
        compat=compat_m,
        reloc_hours=reloc,
        deploy_hours=deploy,
        q_events=q,
        demand=demand,
    )


def capacity_shortfalls(instance: Instance) -> list[str]:
    """Necessary-condition screen: optimistic per-category capability versus
    total demand.  A non-empty result proves the instance infeasible."""
    messages = []
    t = instance.mission_hours
    for ci, cat in enumerate(CATEGORIES):
        required = int(instance.demand[:, ci].sum())
        if required == 0:
            continue
        capability = 0
        for ai in instance.category_assets(cat):
            ports = np.flatnonzero(instance.compat[ai])
            if len(ports) == 0 or instance.n_zones == 0:
                continue
            best_d = float(instance.deploy_hours[ai][ports].min())
            per_event = 2.0 * best_d + t
            capability += min(
                int(instance.assets[ai].monthly_hours // per_event), int(instance.q_events[ai])
            )
        if capability < required:
            messages.append(
                f"category {cat.value}: aggregate capability {capability} cannot cover "
                f"total demand {required}"
            )
    return messages
