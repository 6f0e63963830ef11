"""Event classification and weighted clustering into demand zones.

Events are first sorted into four categories by coordinating organization
and by responding-asset class (short-range boat/helicopter work near the
reference islands versus long-range cutter/airplane work), then each
category is clustered with weighted k-means++ on the (lat, west-positive
lon) plane.  Each cluster's activity-weighted centroid becomes the zone's
aggregated demand point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .geo import GeoPoint, denormalize_longitude, haversine_nmi
from .ingest import EventRecord, Organization

DEFAULT_CLASSIFICATION_RADIUS_NMI = 50.0
LLOYD_MAX_ITER = 300


class OrganizationGroup(Enum):
    GUAM = "guam"
    HONOLULU = "honolulu"  # Sector Honolulu and district headquarters combined


class AssetClass(Enum):
    BOAT_HELICOPTER = "boat_helicopter"
    CUTTER_AIRPLANE = "cutter_airplane"


@dataclass(frozen=True)
class EventCategory:
    organization_group: OrganizationGroup
    asset_class: AssetClass

    @property
    def key(self) -> str:
        return f"{self.organization_group.value}_{self.asset_class.value}"


# Fixed presentation order: short-range categories first, Guam before Honolulu.
CATEGORY_ORDER = (
    EventCategory(OrganizationGroup.GUAM, AssetClass.BOAT_HELICOPTER),
    EventCategory(OrganizationGroup.HONOLULU, AssetClass.BOAT_HELICOPTER),
    EventCategory(OrganizationGroup.GUAM, AssetClass.CUTTER_AIRPLANE),
    EventCategory(OrganizationGroup.HONOLULU, AssetClass.CUTTER_AIRPLANE),
)

_GROUP_LABEL = {OrganizationGroup.GUAM: "Guam", OrganizationGroup.HONOLULU: "Hawaii"}


@dataclass(frozen=True)
class ReferenceIslandSet:
    """Named island reference points used by the 50 nmi classification rule."""

    islands: tuple[tuple[str, GeoPoint], ...]

    def __post_init__(self) -> None:
        if not self.islands:
            raise ValueError("reference island set must not be empty")

    @classmethod
    def from_json(cls, obj: Sequence[dict]) -> "ReferenceIslandSet":
        return cls(
            tuple(
                (str(entry["name"]), GeoPoint.from_east(float(entry["lat"]), float(entry["lon"])))
                for entry in obj
            )
        )

    def min_distance_nmi(self, point: GeoPoint) -> float:
        return min(haversine_nmi(point, p) for _, p in self.islands)


def classify_event(
    event: EventRecord,
    islands: ReferenceIslandSet,
    radius_nmi: float = DEFAULT_CLASSIFICATION_RADIUS_NMI,
) -> EventCategory:
    """Assign an event to one of the four organization/asset-class categories.

    Events at most ``radius_nmi`` from any reference island are short-range
    boat/helicopter work; everything further out needs cutters or airplanes.
    """
    if event.position is None:
        raise ValueError(f"event {event.id} has no position; clean events first")
    group = (
        OrganizationGroup.GUAM
        if event.organization is Organization.SECTOR_GUAM
        else OrganizationGroup.HONOLULU
    )
    asset_class = (
        AssetClass.BOAT_HELICOPTER
        if islands.min_distance_nmi(event.position) <= radius_nmi
        else AssetClass.CUTTER_AIRPLANE
    )
    return EventCategory(group, asset_class)


# ----------------------------- k-means++ -----------------------------


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray  # (n,) int cluster index per point
    centers: np.ndarray  # (k, 2) rows of (lat, lon_w)
    sse: float  # weighted sum of squared distances
    n_iter: int
    sse_history: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.centers)


def _as_arrays(points: Sequence[tuple[GeoPoint, float]]) -> tuple[np.ndarray, np.ndarray]:
    if not points:
        raise ValueError("no points to cluster")
    pts = np.array([[p.lat_deg, p.lon_deg_w] for p, _ in points], dtype=float)
    weights = np.array([w for _, w in points], dtype=float)
    if np.any(weights <= 0.0):
        raise ValueError("point weights must be positive")
    return pts, weights


def _sq_dist_to_centers(pts: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _seed_centers(pts: np.ndarray, weights: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first center uniform, then weight times squared
    distance to the nearest already-chosen center."""
    n = len(pts)
    chosen = [int(rng.integers(n))]
    d2 = np.sum((pts - pts[chosen[0]]) ** 2, axis=1)
    while len(chosen) < k:
        scores = weights * d2
        total = scores.sum()
        if total <= 0.0:
            # All remaining mass sits on already-chosen coordinates; pick any
            # point with a distinct location uniformly.
            fresh = np.flatnonzero(d2 > 0.0)
            idx = int(rng.choice(fresh)) if len(fresh) else int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=scores / total))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((pts - pts[idx]) ** 2, axis=1))
    return pts[chosen].copy()


def _lloyd(
    pts: np.ndarray,
    weights: np.ndarray,
    centers: np.ndarray,
    max_iter: int = LLOYD_MAX_ITER,
) -> tuple[np.ndarray, np.ndarray, float, int, list[float]]:
    k = len(centers)
    labels = np.full(len(pts), -1, dtype=int)
    history: list[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dist_to_centers(pts, centers)
        new_labels = np.argmin(d2, axis=1)

        # Repair empty clusters by reseeding at the point with the largest
        # weighted squared distance to its current center.
        for c in range(k):
            if not np.any(new_labels == c):
                contrib = weights * d2[np.arange(len(pts)), new_labels]
                on_center = (d2.min(axis=1) == 0.0)
                contrib = np.where(on_center, -1.0, contrib)
                far = int(np.argmax(contrib))
                centers[c] = pts[far]
                d2 = _sq_dist_to_centers(pts, centers)
                new_labels = np.argmin(d2, axis=1)

        sse = float(np.sum(weights * d2[np.arange(len(pts)), new_labels]))
        if history:
            assert sse <= history[-1] * (1.0 + 1e-9) + 1e-12, "Lloyd step increased weighted SSE"
        history.append(sse)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            wsum = weights[mask].sum()
            centers[c] = (weights[mask, None] * pts[mask]).sum(axis=0) / wsum
    # Final SSE against the final centers.
    d2 = _sq_dist_to_centers(pts, centers)
    labels = np.argmin(d2, axis=1)
    sse = float(np.sum(weights * d2[np.arange(len(pts)), labels]))
    history.append(sse)
    return labels, centers, sse, n_iter, history


def kmeans_pp_weighted(
    points: Sequence[tuple[GeoPoint, float]],
    k: int,
    seed: int,
    max_iter: int = LLOYD_MAX_ITER,
) -> KMeansResult:
    """Weighted k-means with k-means++ seeding on the (lat, lon_w) plane.

    Deterministic for a fixed seed.  Raises if ``k`` exceeds the number of
    distinct point locations.
    """
    pts, weights = _as_arrays(points)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    n_distinct = len(np.unique(pts, axis=0))
    if k > n_distinct:
        raise ValueError(f"k={k} exceeds {n_distinct} distinct point locations")
    rng = np.random.Generator(np.random.Philox(seed))
    centers = _seed_centers(pts, weights, k, rng)
    labels, centers, sse, n_iter, history = _lloyd(pts, weights, centers, max_iter)
    return KMeansResult(labels, centers, sse, n_iter, tuple(history))


def kmeans_best_of(
    points: Sequence[tuple[GeoPoint, float]],
    k: int,
    seed: int,
    restarts: int = 8,
) -> KMeansResult:
    """Best-of-``restarts`` k-means runs; ties go to the lowest seed index."""
    best: KMeansResult | None = None
    for r in range(restarts):
        result = kmeans_pp_weighted(points, k, seed + r)
        if best is None or result.sse < best.sse - 1e-12:
            best = result
    assert best is not None
    return best


def elbow_curve(
    points: Sequence[tuple[GeoPoint, float]],
    k_max: int,
    seed: int,
    restarts: int = 8,
) -> list[tuple[int, float]]:
    """Weighted SSE for k = 1..k_max, non-increasing by construction.

    Each k gets the same restart budget; in addition the best (k-1)-solution,
    extended by the point farthest from its center, seeds one extra run so
    the curve can never go back up.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    pts, weights = _as_arrays(points)
    n_distinct = len(np.unique(pts, axis=0))
    curve: list[tuple[int, float]] = []
    prev_centers: np.ndarray | None = None
    prev_sse = math.inf
    for k in range(1, k_max + 1):
        if k > n_distinct:
            curve.append((k, 0.0))
            continue
        best = kmeans_best_of(points, k, seed, restarts)
        sse, centers = best.sse, best.centers
        if prev_centers is not None and len(prev_centers) == k - 1:
            d2 = _sq_dist_to_centers(pts, prev_centers)
            far = int(np.argmax(weights * d2.min(axis=1)))
            warm = np.vstack([prev_centers, pts[far]])
            _, warm_centers, warm_sse, _, _ = _lloyd(pts, weights, warm.copy())
            if warm_sse < sse:
                sse, centers = warm_sse, warm_centers
        sse = min(sse, prev_sse)
        curve.append((k, sse))
        prev_centers, prev_sse = centers, sse
    return curve


# ----------------------------- zones -----------------------------


@dataclass(frozen=True)
class Zone:
    """A cluster of events represented by its weighted centroid."""

    id: str
    category: EventCategory
    member_ids: tuple[str, ...]
    superaccident: GeoPoint
    total_weight: float

    def __post_init__(self) -> None:
        if not self.member_ids:
            raise ValueError(f"zone {self.id} has no members")


def superaccident(members: Sequence[EventRecord]) -> GeoPoint:
    """Activity-weighted centroid of a cluster in the (lat, lon_w) plane."""
    if not members:
        raise ValueError("cannot take the centroid of an empty cluster")
    weights = np.array([max(1, e.activity_count) for e in members], dtype=float)
    lats = np.array([e.position.lat_deg for e in members])
    lons = np.array([e.position.lon_deg_w for e in members])
    total = weights.sum()
    return GeoPoint(float(weights @ lats / total), float(weights @ lons / total) % 360.0)


def build_zones(
    events: Sequence[EventRecord],
    islands: ReferenceIslandSet,
    k_per_category: Mapping[EventCategory, int],
    seed: int,
    radius_nmi: float = DEFAULT_CLASSIFICATION_RADIUS_NMI,
    restarts: int = 8,
) -> list[Zone]:
    """Classify, cluster per category, and emit labeled zones.

    Zone ids carry the organization prefix and a single running index across
    all zones (Guam-0, Guam-1, Hawaii-2, ...), short-range categories first.
    """
    by_category: dict[EventCategory, list[EventRecord]] = {}
    for e in events:
        by_category.setdefault(classify_event(e, islands, radius_nmi), []).append(e)

    zones: list[Zone] = []
    index = 0
    for category in CATEGORY_ORDER:
        members = by_category.get(category)
        if not members:
            continue
        if category not in k_per_category:
            raise ValueError(f"no cluster count configured for category {category.key}")
        k = k_per_category[category]
        pts = [(e.position, float(max(1, e.activity_count))) for e in members]
        result = kmeans_best_of(pts, k, seed, restarts)
        clusters: list[list[EventRecord]] = [[] for _ in range(result.k)]
        for e, label in zip(members, result.labels):
            clusters[int(label)].append(e)
        anchored = [(superaccident(cluster), cluster) for cluster in clusters if cluster]
        anchored.sort(key=lambda item: (item[0].lat_deg, item[0].lon_deg_w))
        for center, cluster in anchored:
            zones.append(
                Zone(
                    id=f"{_GROUP_LABEL[category.organization_group]}-{index}",
                    category=category,
                    member_ids=tuple(e.id for e in cluster),
                    superaccident=center,
                    total_weight=float(sum(max(1, e.activity_count) for e in cluster)),
                )
            )
            index += 1
    return zones


# ----------------------------- serialization -----------------------------


def zones_to_json(zones: Sequence[Zone]) -> list[dict]:
    return [
        {
            "id": z.id,
            "organization_group": z.category.organization_group.value,
            "asset_class": z.category.asset_class.value,
            "superaccident": {
                "lat": z.superaccident.lat_deg,
                "lon": denormalize_longitude(z.superaccident.lon_deg_w),
            },
            "member_ids": list(z.member_ids),
            "total_weight": z.total_weight,
        }
        for z in zones
    ]


def zones_from_json(obj: Sequence[dict]) -> list[Zone]:
    zones = []
    for entry in obj:
        zones.append(
            Zone(
                id=entry["id"],
                category=EventCategory(
                    OrganizationGroup(entry["organization_group"]),
                    AssetClass(entry["asset_class"]),
                ),
                member_ids=tuple(entry["member_ids"]),
                superaccident=GeoPoint.from_east(
                    float(entry["superaccident"]["lat"]),
                    float(entry["superaccident"]["lon"]),
                ),
                total_weight=float(entry["total_weight"]),
            )
        )
    return zones


def load_zones(path: str | Path) -> list[Zone]:
    with Path(path).open() as fh:
        return zones_from_json(json.load(fh))
