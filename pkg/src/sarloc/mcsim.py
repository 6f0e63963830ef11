"""Monte Carlo replication of monthly zone activity into demand levels.

Each zone is replicated for many synthetic months: draw the month's event
count from the fitted count distribution, then draw a capped
(maritime, aero) response for every event and add them up.  Percentiles of
the resulting monthly totals become the integer demand levels the location
model consumes.

Randomness comes from a counter-based Philox generator with one substream
per zone (keyed on the zone id), so results do not depend on the order in
which zones are simulated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .distfit import CountDistribution, DistributionKind, ResponseModel, ZoneFitReport
from .fleet import ZONE_CLASS_ASSETS, AssetCategory
from .geo import GeoPoint, denormalize_longitude
from .zoning import AssetClass, Zone

DEFAULT_MONTHS = 10_000
SUPPORTED_PERCENTILES = (0, 25, 50, 75, 100)


def zone_stream(seed: int, zone_id: str) -> np.random.Generator:
    """Independent, order-insensitive random stream for one zone."""
    raw = zone_id.encode()
    words = tuple(
        int.from_bytes(raw[i : i + 4], "little") for i in range(0, len(raw), 4)
    )
    seq = np.random.SeedSequence(entropy=seed, spawn_key=words)
    return np.random.Generator(np.random.Philox(seq))


def sample_count(dist: CountDistribution, rng: np.random.Generator) -> int:
    """One monthly event count draw from a fitted distribution."""
    if dist.kind is DistributionKind.POISSON:
        return int(rng.poisson(dist.lam))
    rate = rng.gamma(shape=dist.alpha, scale=dist.beta)
    return int(rng.poisson(rate))


def _draw_counts(dist: CountDistribution, rng: np.random.Generator, size: int) -> np.ndarray:
    if dist.kind is DistributionKind.POISSON:
        return rng.poisson(dist.lam, size)
    rates = rng.gamma(shape=dist.alpha, scale=dist.beta, size=size)
    return rng.poisson(rates)


def _level_table(model: ResponseModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pairs = sorted(model.level_pmf)
    probs = np.array([model.level_pmf[p] for p in pairs])
    maritime = np.array([m for m, _ in pairs], dtype=np.int64)
    aero = np.array([a for _, a in pairs], dtype=np.int64)
    return maritime, aero, probs / probs.sum()


def sample_response(model: ResponseModel, rng: np.random.Generator) -> tuple[int, int]:
    """One (maritime, aero) response draw; (0, 0) means nothing dispatched."""
    maritime, aero, probs = _level_table(model)
    idx = int(rng.choice(len(probs), p=probs))
    return int(maritime[idx]), int(aero[idx])


@dataclass(frozen=True)
class MonthlyDemand:
    """Simulated per-month asset demand for one zone."""

    zone_id: str
    maritime: np.ndarray  # (months,) integer totals
    aero: np.ndarray


def simulate_months(
    fit: ZoneFitReport,
    months: int = DEFAULT_MONTHS,
    seed: int = 0,
) -> MonthlyDemand:
    """Replicate ``months`` of activity for one fitted zone.

    Deterministic for a fixed seed; the zone id selects the substream, so a
    batch simulation gives each zone the same months it would get alone.
    """
    if months < 1:
        raise ValueError("need at least one replication month")
    rng = zone_stream(seed, fit.zone_id)
    counts = _draw_counts(fit.distribution, rng, months)
    total_events = int(counts.sum())
    maritime = np.zeros(months, dtype=np.int64)
    aero = np.zeros(months, dtype=np.int64)
    if total_events > 0:
        level_m, level_a, probs = _level_table(fit.response)
        picks = rng.choice(len(probs), size=total_events, p=probs)
        month_of_event = np.repeat(np.arange(months), counts)
        np.add.at(maritime, month_of_event, level_m[picks])
        np.add.at(aero, month_of_event, level_a[picks])
    return MonthlyDemand(fit.zone_id, maritime, aero)


# ------------------------------ summaries ------------------------------


def nearest_rank(sorted_values: np.ndarray, percentile: int) -> int:
    """Nearest-rank percentile: the ceil(q*N)-th entry of the sorted sample
    (clamped to the largest), so outputs are always observed values."""
    if percentile not in SUPPORTED_PERCENTILES:
        raise ValueError(f"percentile {percentile} not in {SUPPORTED_PERCENTILES}")
    n = len(sorted_values)
    idx = min(int(math.ceil(percentile / 100.0 * n)), n - 1)
    return int(sorted_values[idx])


@dataclass(frozen=True)
class DemandStats:
    mean: float
    std: float
    minimum: int
    p25: int
    p50: int
    p75: int
    maximum: int

    def __post_init__(self) -> None:
        if not self.minimum <= self.p25 <= self.p50 <= self.p75 <= self.maximum:
            raise ValueError("percentiles out of order")

    def percentile(self, q: int) -> int:
        return {0: self.minimum, 25: self.p25, 50: self.p50, 75: self.p75, 100: self.maximum}[q]

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "min": self.minimum,
            "p25": self.p25,
            "p50": self.p50,
            "p75": self.p75,
            "max": self.maximum,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "DemandStats":
        return cls(
            mean=float(obj["mean"]),
            std=float(obj["std"]),
            minimum=int(obj["min"]),
            p25=int(obj["p25"]),
            p50=int(obj["p50"]),
            p75=int(obj["p75"]),
            maximum=int(obj["max"]),
        )


def summarize(values: np.ndarray) -> DemandStats:
    """Descriptive statistics of one simulated demand stream."""
    if len(values) < 1:
        raise ValueError("need at least one replication to summarize")
    ordered = np.sort(values)
    return DemandStats(
        mean=float(values.mean()),
        std=float(values.std(ddof=1)) if len(values) > 1 else 0.0,
        minimum=int(ordered[0]),
        p25=nearest_rank(ordered, 25),
        p50=nearest_rank(ordered, 50),
        p75=nearest_rank(ordered, 75),
        maximum=int(ordered[-1]),
    )


@dataclass(frozen=True)
class SimSummary:
    """Per (zone, demand kind) statistics across all replications."""

    months: int
    seed: int
    entries: Mapping[tuple[str, str], DemandStats]  # (zone_id, "maritime"|"aero")

    def to_json(self) -> dict:
        return {
            "months": self.months,
            "seed": self.seed,
            "zones": {
                zone_id: {
                    kind: self.entries[(zone_id, kind)].to_json()
                    for kind in ("maritime", "aero")
                }
                for zone_id in sorted({z for z, _ in self.entries})
            },
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "SimSummary":
        entries = {}
        for zone_id, kinds in obj["zones"].items():
            for kind, stats in kinds.items():
                entries[(zone_id, kind)] = DemandStats.from_json(stats)
        return cls(months=int(obj["months"]), seed=int(obj["seed"]), entries=entries)


def simulate_all(
    fits: Sequence[ZoneFitReport],
    months: int = DEFAULT_MONTHS,
    seed: int = 0,
) -> SimSummary:
    entries: dict[tuple[str, str], DemandStats] = {}
    for fit in fits:
        demand = simulate_months(fit, months, seed)
        entries[(fit.zone_id, "maritime")] = summarize(demand.maritime)
        entries[(fit.zone_id, "aero")] = summarize(demand.aero)
    return SimSummary(months=months, seed=seed, entries=entries)


# ------------------------------ scenarios ------------------------------


@dataclass(frozen=True)
class DemandScenario:
    """Integer demand levels at one percentile, ready for the location model."""

    percentile: int
    levels: Mapping[tuple[str, AssetCategory], int]
    positions: Mapping[str, GeoPoint]
    zone_classes: Mapping[str, AssetClass]

    def __post_init__(self) -> None:
        if self.percentile not in SUPPORTED_PERCENTILES:
            raise ValueError(f"percentile {self.percentile} not in {SUPPORTED_PERCENTILES}")
        for (zone_id, _), level in self.levels.items():
            if level < 0:
                raise ValueError(f"negative demand level for {zone_id}")
            if zone_id not in self.positions:
                raise ValueError(f"zone {zone_id} has a level but no position")

    def to_json(self) -> dict:
        zones: dict[str, dict] = {}
        for zone_id in self.positions:
            pos = self.positions[zone_id]
            zones[zone_id] = {
                "lat": pos.lat_deg,
                "lon": denormalize_longitude(pos.lon_deg_w),
                "asset_class": self.zone_classes[zone_id].value,
                "levels": {
                    cat.value: self.levels.get((zone_id, cat), 0)
                    for cat in ZONE_CLASS_ASSETS[self.zone_classes[zone_id]]
                },
            }
        return {"percentile": self.percentile, "zones": zones}

    @classmethod
    def from_json(cls, obj: Mapping) -> "DemandScenario":
        levels: dict[tuple[str, AssetCategory], int] = {}
        positions: dict[str, GeoPoint] = {}
        zone_classes: dict[str, AssetClass] = {}
        for zone_id, entry in obj["zones"].items():
            positions[zone_id] = GeoPoint.from_east(float(entry["lat"]), float(entry["lon"]))
            zone_classes[zone_id] = AssetClass(entry["asset_class"])
            for cat_name, level in entry["levels"].items():
                levels[(zone_id, AssetCategory(cat_name))] = int(level)
        return cls(int(obj["percentile"]), levels, positions, zone_classes)

    @classmethod
    def load(cls, path: str | Path) -> "DemandScenario":
        with Path(path).open() as fh:
            return cls.from_json(json.load(fh))


def build_scenario(
    summary: SimSummary,
    zones: Sequence[Zone],
    percentile: int,
) -> DemandScenario:
    """Read one percentile out of the summary and map maritime/aero demand
    onto the asset categories each zone class calls for."""
    if percentile not in SUPPORTED_PERCENTILES:
        raise ValueError(f"percentile {percentile} not in {SUPPORTED_PERCENTILES}")
    levels: dict[tuple[str, AssetCategory], int] = {}
    positions: dict[str, GeoPoint] = {}
    zone_classes: dict[str, AssetClass] = {}
    for zone in zones:
        maritime_cat, aero_cat = ZONE_CLASS_ASSETS[zone.category.asset_class]
        positions[zone.id] = zone.superaccident
        zone_classes[zone.id] = zone.category.asset_class
        levels[(zone.id, maritime_cat)] = summary.entries[(zone.id, "maritime")].percentile(percentile)
        levels[(zone.id, aero_cat)] = summary.entries[(zone.id, "aero")].percentile(percentile)
    return DemandScenario(percentile, levels, positions, zone_classes)
