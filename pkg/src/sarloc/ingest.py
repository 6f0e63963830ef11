"""Event record loading, validation, cleaning, and synthetic data generation.

The CSV schema (header required, one event per row):

    id, timestamp, lat, lon, subtype, organization,
    maritime_sorties, aero_sorties, activity_count

``timestamp`` is naive ISO-8601 UTC, ``lat``/``lon`` are decimal degrees with
``lon`` east-positive in [-180, 180] (converted to the internal west-positive
convention on load).  ``lat``/``lon`` may both be empty for records without a
GPS fix.  ``organization`` is one of ``SectorGuam``, ``SectorHonolulu``,
``DistrictHQ``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geo import GeoPoint, denormalize_longitude, normalize_longitude

CSV_COLUMNS = [
    "id",
    "timestamp",
    "lat",
    "lon",
    "subtype",
    "organization",
    "maritime_sorties",
    "aero_sorties",
    "activity_count",
]

MEDICO_SUBTYPE = "MEDICO"


class Organization(Enum):
    SECTOR_GUAM = "SectorGuam"
    SECTOR_HONOLULU = "SectorHonolulu"
    DISTRICT_HQ = "DistrictHQ"


@dataclass(frozen=True)
class StudyWindow:
    """Consecutive calendar months covered by the historical record."""

    start_year: int
    start_month: int
    n_months: int

    def __post_init__(self) -> None:
        if not 1 <= self.start_month <= 12:
            raise ValueError(f"start_month {self.start_month} outside 1..12")
        if self.n_months < 1:
            raise ValueError("window must span at least one month")

    @classmethod
    def from_json(cls, obj: dict) -> "StudyWindow":
        year, month = (int(part) for part in str(obj["start"]).split("-"))
        return cls(year, month, int(obj["months"]))

    def to_json(self) -> dict:
        return {"start": f"{self.start_year:04d}-{self.start_month:02d}", "months": self.n_months}

    def month_start(self, index: int) -> datetime:
        total = (self.start_year * 12 + self.start_month - 1) + index
        return datetime(total // 12, total % 12 + 1, 1)

    @property
    def end(self) -> datetime:
        return self.month_start(self.n_months)

    def month_index(self, ts: datetime) -> int:
        """0-based calendar-month index of ``ts``; raises if outside the window."""
        idx = (ts.year * 12 + ts.month - 1) - (self.start_year * 12 + self.start_month - 1)
        if not 0 <= idx < self.n_months:
            raise ValueError(f"timestamp {ts.isoformat()} outside study window")
        return idx

    def contains(self, ts: datetime) -> bool:
        return self.month_start(0) <= ts < self.end


@dataclass(frozen=True)
class EventRecord:
    """One historical or synthetic search-and-rescue event."""

    id: str
    timestamp: datetime
    position: GeoPoint | None
    subtype: str
    organization: Organization
    maritime_sorties: int
    aero_sorties: int
    activity_count: int

    def __post_init__(self) -> None:
        if self.maritime_sorties < 0 or self.aero_sorties < 0:
            raise ValueError(f"event {self.id}: sortie counts must be non-negative")
        if self.activity_count < 1:
            raise ValueError(f"event {self.id}: activity_count must be at least 1")


@dataclass(frozen=True)
class RejectedRow:
    """A CSV data row that failed validation, with its 1-based file line."""

    line: int
    reason: str


class EventSchemaError(ValueError):
    """File-level problem: missing file, wrong header, duplicated columns."""


def _parse_timestamp(raw: str) -> datetime:
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1]
    return datetime.fromisoformat(text)


def _parse_row(line: int, row: dict[str, str], window: StudyWindow | None) -> EventRecord:
    try:
        ts = _parse_timestamp(row["timestamp"])
    except ValueError as exc:
        raise ValueError(f"unparseable timestamp {row['timestamp']!r}: {exc}") from None
    if window is not None and not window.contains(ts):
        raise ValueError(f"timestamp {ts.isoformat()} outside study window")

    lat_raw = row["lat"].strip()
    lon_raw = row["lon"].strip()
    if bool(lat_raw) != bool(lon_raw):
        raise ValueError("lat and lon must both be present or both empty")
    position = None
    if lat_raw:
        lat = float(lat_raw)
        lon = float(lon_raw)
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        if not -180.0 <= lon <= 180.0:
            raise ValueError(f"longitude {lon} outside [-180, 180]")
        position = GeoPoint(lat, normalize_longitude(lon))

    try:
        organization = Organization(row["organization"].strip())
    except ValueError:
        raise ValueError(f"unknown organization {row['organization']!r}") from None

    def _count(name: str, minimum: int) -> int:
        value = int(row[name])
        if value < minimum:
            raise ValueError(f"{name} must be >= {minimum}, got {value}")
        return value

    return EventRecord(
        id=row["id"].strip(),
        timestamp=ts,
        position=position,
        subtype=row["subtype"].strip(),
        organization=organization,
        maritime_sorties=_count("maritime_sorties", 0),
        aero_sorties=_count("aero_sorties", 0),
        activity_count=_count("activity_count", 1),
    )


def load_events(
    csv_path: str | Path,
    window: StudyWindow | None = None,
) -> tuple[list[EventRecord], list[RejectedRow]]:
    """Read event records from ``csv_path``.

    Returns the parsed records plus a reject report for malformed data rows
    (each with its file line number and reason); rows are never silently
    dropped.  File-level problems raise :class:`EventSchemaError`.
    """
    path = Path(csv_path)
    if not path.exists():
        raise EventSchemaError(f"events file not found: {path}")
    events: list[EventRecord] = []
    rejects: list[RejectedRow] = []
    seen_ids: set[str] = set()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EventSchemaError(f"{path}: empty file, expected header {CSV_COLUMNS}") from None
        if [h.strip() for h in header] != CSV_COLUMNS:
            raise EventSchemaError(f"{path}: header {header} does not match schema {CSV_COLUMNS}")
        for line, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if len(raw) != len(CSV_COLUMNS):
                rejects.append(RejectedRow(line, f"expected {len(CSV_COLUMNS)} fields, got {len(raw)}"))
                continue
            row = dict(zip(CSV_COLUMNS, raw))
            try:
                record = _parse_row(line, row, window)
            except ValueError as exc:
                rejects.append(RejectedRow(line, str(exc)))
                continue
            if record.id in seen_ids:
                rejects.append(RejectedRow(line, f"duplicate event id {record.id!r}"))
                continue
            seen_ids.add(record.id)
            events.append(record)
    return events, rejects


def write_events_csv(events: Iterable[EventRecord], csv_path: str | Path) -> None:
    """Write events back out in the documented schema (lon east-positive)."""
    with Path(csv_path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for e in events:
            if e.position is None:
                lat, lon = "", ""
            else:
                lat = repr(e.position.lat_deg)
                lon = repr(denormalize_longitude(e.position.lon_deg_w))
            writer.writerow(
                [
                    e.id,
                    e.timestamp.isoformat(),
                    lat,
                    lon,
                    e.subtype,
                    e.organization.value,
                    e.maritime_sorties,
                    e.aero_sorties,
                    e.activity_count,
                ]
            )


# --------------------------- region filtering ---------------------------


@dataclass(frozen=True)
class RegionPolygon:
    """Simple closed polygon in the (lat, west-positive lon) plane."""

    vertices: tuple[GeoPoint, ...]

    def __post_init__(self) -> None:
        if len(self.vertices) < 3:
            raise ValueError("region polygon needs at least 3 vertices")
        if self._self_intersects():
            raise ValueError("region polygon must be simple (no self-intersection)")

    def _segments(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        pts = [(v.lon_deg_w, v.lat_deg) for v in self.vertices]
        return [(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]

    def _self_intersects(self) -> bool:
        segs = self._segments()
        n = len(segs)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue  # shared endpoints between neighbours are fine
                if _segments_cross(segs[i], segs[j]):
                    return True
        return False

    @classmethod
    def from_json(cls, obj: Sequence[Sequence[float]]) -> "RegionPolygon":
        """Build from a JSON array of [lat, lon] pairs, lon east-positive."""
        return cls(tuple(GeoPoint.from_east(float(lat), float(lon)) for lat, lon in obj))

    def to_json(self) -> list[list[float]]:
        return [[v.lat_deg, denormalize_longitude(v.lon_deg_w)] for v in self.vertices]

    def contains(self, point: GeoPoint) -> bool:
        """Ray-casting point-in-polygon test; boundary points count as inside."""
        x, y = point.lon_deg_w, point.lat_deg
        pts = [(v.lon_deg_w, v.lat_deg) for v in self.vertices]
        n = len(pts)
        for i in range(n):
            if _on_segment((x, y), pts[i], pts[(i + 1) % n]):
                return True
        inside = False
        for i in range(n):
            (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % n]
            if (y1 > y) != (y2 > y):
                x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < x_cross:
                    inside = not inside
        return inside


_EPS = 1e-12


def _on_segment(p: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) > _EPS * max(1.0, abs(b[0] - a[0]) + abs(b[1] - a[1])):
        return False
    dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    if dot < -_EPS:
        return False
    sq_len = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    return dot <= sq_len + _EPS


def _segments_cross(
    s1: tuple[tuple[float, float], tuple[float, float]],
    s2: tuple[tuple[float, float], tuple[float, float]],
) -> bool:
    (p1, p2), (p3, p4) = s1, s2

    def orient(a, b, c) -> float:
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


@dataclass(frozen=True)
class CleaningReport:
    initial: int
    removed_medico: int
    removed_no_gps: int
    removed_outside_region: int
    retained: int

    def __post_init__(self) -> None:
        counts = (
            self.initial,
            self.removed_medico,
            self.removed_no_gps,
            self.removed_outside_region,
            self.retained,
        )
        if any(c < 0 for c in counts):
            raise ValueError("cleaning report counts must be non-negative")
        expected = self.initial - self.removed_medico - self.removed_no_gps - self.removed_outside_region
        if self.retained != expected:
            raise ValueError(f"cleaning report does not balance: retained {self.retained} != {expected}")

    @property
    def retained_fraction(self) -> float:
        return self.retained / self.initial if self.initial else 1.0

    def to_json(self) -> dict:
        return {
            "initial": self.initial,
            "removed_medico": self.removed_medico,
            "removed_no_gps": self.removed_no_gps,
            "removed_outside_region": self.removed_outside_region,
            "retained": self.retained,
            "retained_fraction": self.retained_fraction,
        }


def clean_events(
    events: Sequence[EventRecord],
    region: RegionPolygon,
) -> tuple[list[EventRecord], CleaningReport]:
    """Apply the three removal rules, in a fixed order, and account for them.

    Order matters for the report: medical-consultation records go first, then
    records without a GPS fix, then records outside the region (a record with
    no position cannot be classified by region).  Records with zero response
    sorties are retained.
    """
    medico = 0
    no_gps = 0
    outside = 0
    kept: list[EventRecord] = []
    for e in events:
        if e.subtype.strip().upper() == MEDICO_SUBTYPE:
            medico += 1
        elif e.position is None:
            no_gps += 1
        elif not region.contains(e.position):
            outside += 1
        else:
            kept.append(e)
    report = CleaningReport(
        initial=len(events),
        removed_medico=medico,
        removed_no_gps=no_gps,
        removed_outside_region=outside,
        retained=len(kept),
    )
    return kept, report


# ------------------------- synthetic generation -------------------------


@dataclass(frozen=True)
class MonthlyCountSpec:
    """Count distribution for events per month in one archetype zone."""

    kind: str  # "poisson" or "gamma_poisson"
    lam: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == "poisson":
            if self.lam < 0.0:
                raise ValueError(f"poisson rate must be non-negative, got {self.lam}")
        elif self.kind == "gamma_poisson":
            if self.alpha <= 0.0 or self.beta < 0.0:
                raise ValueError(f"gamma-poisson needs alpha > 0 and beta >= 0, got {self.alpha}, {self.beta}")
        else:
            raise ValueError(f"unknown count distribution kind {self.kind!r}")

    @property
    def mean(self) -> float:
        return self.lam if self.kind == "poisson" else self.alpha * self.beta

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "poisson":
            return rng.poisson(self.lam, size)
        rates = rng.gamma(shape=self.alpha, scale=self.beta, size=size)
        return rng.poisson(rates)

    @classmethod
    def from_json(cls, obj: dict) -> "MonthlyCountSpec":
        kind = obj["kind"]
        if kind == "poisson":
            return cls(kind, lam=float(obj["lam"]))
        return cls(kind, alpha=float(obj["alpha"]), beta=float(obj["beta"]))


@dataclass(frozen=True)
class ZoneArchetype:
    """Generator blueprint for one demand neighbourhood."""

    name: str
    organization: Organization
    center: GeoPoint
    spread_deg: float
    monthly: MonthlyCountSpec
    levels: tuple[tuple[tuple[int, int], float], ...]  # ((maritime, aero), probability)
    subtype: str = "SAR"

    def __post_init__(self) -> None:
        if self.spread_deg < 0.0:
            raise ValueError("spread_deg must be non-negative")
        if not self.levels:
            raise ValueError(f"archetype {self.name}: needs at least one response level")
        total = sum(p for _, p in self.levels)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"archetype {self.name}: level probabilities sum to {total}, not 1")
        for (m, a), p in self.levels:
            if m < 0 or a < 0 or p < 0.0:
                raise ValueError(f"archetype {self.name}: invalid level (({m},{a}), {p})")

    @classmethod
    def from_json(cls, obj: dict) -> "ZoneArchetype":
        return cls(
            name=obj["name"],
            organization=Organization(obj["organization"]),
            center=GeoPoint.from_east(float(obj["center"]["lat"]), float(obj["center"]["lon"])),
            spread_deg=float(obj["spread_deg"]),
            monthly=MonthlyCountSpec.from_json(obj["monthly"]),
            levels=tuple(((int(lv["m"]), int(lv["a"])), float(lv["p"])) for lv in obj["levels"]),
            subtype=obj.get("subtype", "SAR"),
        )


@dataclass(frozen=True)
class Contamination:
    """Optional bad-record admixture so the cleaning stage has work to do.

    Rates are fractions of the base event count; ``outside_center`` should sit
    outside the study region.
    """

    medico_rate: float = 0.0
    missing_gps_rate: float = 0.0
    outside_rate: float = 0.0
    outside_center: GeoPoint | None = None

    def __post_init__(self) -> None:
        for r in (self.medico_rate, self.missing_gps_rate, self.outside_rate):
            if r < 0.0:
                raise ValueError("contamination rates must be non-negative")
        if self.outside_rate > 0.0 and self.outside_center is None:
            raise ValueError("outside_rate requires an outside_center")

    @classmethod
    def from_json(cls, obj: dict) -> "Contamination":
        center = obj.get("outside_center")
        return cls(
            medico_rate=float(obj.get("medico_rate", 0.0)),
            missing_gps_rate=float(obj.get("missing_gps_rate", 0.0)),
            outside_rate=float(obj.get("outside_rate", 0.0)),
            outside_center=None
            if center is None
            else GeoPoint.from_east(float(center["lat"]), float(center["lon"])),
        )


@dataclass(frozen=True)
class GeneratorConfig:
    window: StudyWindow
    archetypes: tuple[ZoneArchetype, ...]
    contamination: Contamination = field(default_factory=Contamination)

    def __post_init__(self) -> None:
        if not self.archetypes:
            raise ValueError("generator config needs at least one zone archetype")

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorConfig":
        return cls(
            window=StudyWindow.from_json(obj["window"]),
            archetypes=tuple(ZoneArchetype.from_json(a) for a in obj["archetypes"]),
            contamination=Contamination.from_json(obj.get("contamination", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "GeneratorConfig":
        with Path(path).open() as fh:
            return cls.from_json(json.load(fh))


def _draw_position(rng: np.random.Generator, center: GeoPoint, spread_deg: float) -> GeoPoint:
    lat = float(np.clip(rng.normal(center.lat_deg, spread_deg), -89.9, 89.9))
    lon_w = float(rng.normal(center.lon_deg_w, spread_deg)) % 360.0
    return GeoPoint(lat, lon_w)


def generate_synthetic(config: GeneratorConfig, seed: int) -> list[EventRecord]:
    """Draw a deterministic synthetic event history from ``config``.

    Per archetype and calendar month the event count follows the configured
    count distribution; each event gets a position scattered around the
    archetype center and a response level drawn from the archetype's level
    probabilities.  The same seed always yields the same records.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    window = config.window
    drafts: list[tuple[datetime, dict]] = []
    for arch in config.archetypes:
        counts = arch.monthly.draw(rng, window.n_months)
        level_pairs = [pair for pair, _ in arch.levels]
        level_probs = np.array([p for _, p in arch.levels])
        for month_idx in range(window.n_months):
            n = int(counts[month_idx])
            if n == 0:
                continue
            start = window.month_start(month_idx)
            span = (window.month_start(month_idx + 1) - start).total_seconds()
            offsets = rng.uniform(0.0, span, n)
            choices = rng.choice(len(level_pairs), size=n, p=level_probs)
            for k in range(n):
                ts = start + timedelta(seconds=float(np.floor(offsets[k])))
                m, a = level_pairs[int(choices[k])]
                drafts.append(
                    (
                        ts,
                        {
                            "position": _draw_position(rng, arch.center, arch.spread_deg),
                            "subtype": arch.subtype,
                            "organization": arch.organization,
                            "maritime_sorties": m,
                            "aero_sorties": a,
                            "activity_count": max(1, m + a),
                        },
                    )
                )

    n_base = len(drafts)
    contam = config.contamination
    orgs = [a.organization for a in config.archetypes]
    centers = [a.center for a in config.archetypes]

    def _contaminated(count: int, center_override: GeoPoint | None = None, **overrides) -> None:
        for _ in range(count):
            month_idx = int(rng.integers(window.n_months))
            start = window.month_start(month_idx)
            span = (window.month_start(month_idx + 1) - start).total_seconds()
            ts = start + timedelta(seconds=float(np.floor(rng.uniform(0.0, span))))
            pick = int(rng.integers(len(centers)))
            center = centers[pick] if center_override is None else center_override
            base = {
                "position": _draw_position(rng, center, 0.5),
                "subtype": "SAR",
                "organization": orgs[pick],
                "maritime_sorties": int(rng.integers(0, 3)),
                "aero_sorties": int(rng.integers(0, 2)),
                "activity_count": 1,
            }
            base["activity_count"] = max(1, base["maritime_sorties"] + base["aero_sorties"])
            base.update(overrides)
            drafts.append((ts, base))

    _contaminated(int(round(contam.medico_rate * n_base)), subtype=MEDICO_SUBTYPE)
    _contaminated(int(round(contam.missing_gps_rate * n_base)), position=None)
    if contam.outside_rate > 0.0:
        _contaminated(int(round(contam.outside_rate * n_base)), center_override=contam.outside_center)

    drafts.sort(key=lambda item: item[0])
    return [
        EventRecord(id=f"E{k:06d}", timestamp=ts, **payload)
        for k, (ts, payload) in enumerate(drafts)
    ]
