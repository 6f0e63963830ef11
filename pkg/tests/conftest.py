"""Session-wide fixtures: the bundled synthetic study run end to end once."""

from __future__ import annotations

import pytest

from sarloc.datasets import (
    bundled_window,
    load_bundled_events,
    load_bundled_fleet,
    load_bundled_generator_config,
    load_bundled_homeports,
    load_bundled_islands,
    load_bundled_region,
)
from sarloc.distfit import fit_zone
from sarloc.ingest import clean_events
from sarloc.mcsim import build_scenario, simulate_all
from sarloc.milp import Scope, build_instance
from sarloc.zoning import AssetClass, EventCategory, OrganizationGroup, build_zones

K_PER_CATEGORY = {
    EventCategory(OrganizationGroup.GUAM, AssetClass.BOAT_HELICOPTER): 2,
    EventCategory(OrganizationGroup.HONOLULU, AssetClass.BOAT_HELICOPTER): 4,
    EventCategory(OrganizationGroup.GUAM, AssetClass.CUTTER_AIRPLANE): 3,
    EventCategory(OrganizationGroup.HONOLULU, AssetClass.CUTTER_AIRPLANE): 6,
}
ZONING_SEED = 7
SIM_SEED = 11
SIM_MONTHS = 10_000


@pytest.fixture(scope="session")
def bundled_events():
    return load_bundled_events()


@pytest.fixture(scope="session")
def bundled_cleaned(bundled_events):
    cleaned, report = clean_events(bundled_events, load_bundled_region())
    return cleaned, report


@pytest.fixture(scope="session")
def bundled_zones(bundled_cleaned):
    cleaned, _ = bundled_cleaned
    return build_zones(cleaned, load_bundled_islands(), K_PER_CATEGORY, seed=ZONING_SEED)


@pytest.fixture(scope="session")
def bundled_fits(bundled_cleaned, bundled_zones):
    cleaned, _ = bundled_cleaned
    window = bundled_window()
    by_id = {e.id: e for e in cleaned}
    return [
        fit_zone(zone.id, [by_id[m] for m in zone.member_ids], window)
        for zone in bundled_zones
    ]


@pytest.fixture(scope="session")
def bundled_summary(bundled_fits):
    return simulate_all(bundled_fits, months=SIM_MONTHS, seed=SIM_SEED)


@pytest.fixture(scope="session")
def bundled_scenarios(bundled_summary, bundled_zones):
    return {
        q: build_scenario(bundled_summary, bundled_zones, q) for q in (50, 75)
    }


@pytest.fixture(scope="session")
def bundled_instance_p75(bundled_scenarios):
    return build_instance(
        load_bundled_fleet(),
        load_bundled_homeports(),
        bundled_scenarios[75],
        1.5,
        Scope.CURRENT_ONLY,
    )


@pytest.fixture(scope="session")
def bundled_instance_p50(bundled_scenarios):
    return build_instance(
        load_bundled_fleet(),
        load_bundled_homeports(),
        bundled_scenarios[50],
        1.5,
        Scope.CURRENT_ONLY,
    )


@pytest.fixture(scope="session")
def bundled_generator_config():
    return load_bundled_generator_config()


@pytest.fixture(scope="session")
def bundled_front(bundled_instance_p75):
    """Weighted-sum sweep of the bundled instance, with its wall time."""
    import time

    from sarloc.milp import pareto_sweep

    start = time.perf_counter()
    front = pareto_sweep(bundled_instance_p75)
    return front, time.perf_counter() - start
