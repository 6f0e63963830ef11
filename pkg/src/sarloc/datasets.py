"""Access to the bundled synthetic study bundle.

The package ships a self-contained synthetic dataset shaped like a multi-year
Pacific search-and-rescue record: an event history, the study region polygon,
reference islands, a 21-asset fleet at six stations, and a catalog of
candidate homeports across the region.  Everything is reproducible from
``generator.json`` with the recorded seed.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .fleet import Asset, Homeport, load_assets, load_homeports
from .ingest import EventRecord, GeneratorConfig, RegionPolygon, StudyWindow, load_events
from .zoning import ReferenceIslandSet

BUNDLED_SEED = 1205  # seed that produced data/events.csv from data/generator.json


def data_path(name: str) -> Path:
    """Filesystem path of one bundled data file."""
    path = resources.files("sarloc").joinpath("data", name)
    return Path(str(path))


def load_bundled_region() -> RegionPolygon:
    with data_path("region.json").open() as fh:
        return RegionPolygon.from_json(json.load(fh))


def load_bundled_islands() -> ReferenceIslandSet:
    with data_path("islands.json").open() as fh:
        return ReferenceIslandSet.from_json(json.load(fh))


def load_bundled_fleet() -> list[Asset]:
    return load_assets(data_path("fleet.json"))


def load_bundled_homeports() -> list[Homeport]:
    return load_homeports(data_path("homeports.json"))


def load_bundled_generator_config() -> GeneratorConfig:
    return GeneratorConfig.load(data_path("generator.json"))


def bundled_window() -> StudyWindow:
    return load_bundled_generator_config().window


def load_bundled_events() -> list[EventRecord]:
    events, rejects = load_events(data_path("events.csv"), bundled_window())
    if rejects:
        raise RuntimeError(f"bundled events failed validation: {rejects[:3]}")
    return events


def bundled_manifest_path() -> Path:
    return data_path("manifest.json")
