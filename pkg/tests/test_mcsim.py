import math

import numpy as np
import pytest

from sarloc import mcsim
from sarloc.distfit import (
    CountDistribution,
    DistributionKind,
    ResponseModel,
    ResponseStrategy,
    ZoneFitReport,
)
from sarloc.fleet import AssetCategory
from sarloc.geo import GeoPoint
from sarloc.mcsim import (
    DemandScenario,
    build_scenario,
    nearest_rank,
    sample_count,
    sample_response,
    simulate_all,
    simulate_months,
    summarize,
    zone_stream,
)
from sarloc.zoning import AssetClass


def _model(level_pmf):
    strategy = {s: 0.0 for s in ResponseStrategy}
    for (m, a), p in level_pmf.items():
        if m > 0 and a > 0:
            strategy[ResponseStrategy.MARITIME_AND_AIRCRAFT] += p
        elif m > 0:
            strategy[ResponseStrategy.MARITIME_ONLY] += p
        elif a > 0:
            strategy[ResponseStrategy.AIRCRAFT_ONLY] += p
        else:
            strategy[ResponseStrategy.NO_RESPONSE] += p
    return ResponseModel(strategy_pmf=strategy, level_pmf=level_pmf, n_events=100)


def _fit(zone_id, dist, level_pmf, asset_class=AssetClass.BOAT_HELICOPTER):
    return ZoneFitReport(
        zone_id=zone_id,
        acf_12=None,
        acf_24=None,
        distribution=dist,
        response=_model(level_pmf),
    )


POISSON0 = CountDistribution(DistributionKind.POISSON, 0.0, degenerate=True)
POISSON_REF = CountDistribution(DistributionKind.POISSON, 5.433)
GP_REF = CountDistribution(DistributionKind.GAMMA_POISSON, 5.433044, alpha=52.748, beta=0.103)


# ------------------------------- sampling -------------------------------


def test_sample_count_degenerate_zero():
    rng = zone_stream(0, "z")
    assert all(sample_count(POISSON0, rng) == 0 for _ in range(50))


def test_sample_count_poisson_mean():
    rng = zone_stream(1, "z")
    draws = np.array([sample_count(POISSON_REF, rng) for _ in range(10_000)])
    tol = 3.0 * math.sqrt(5.433) / math.sqrt(10_000)
    assert abs(draws.mean() - 5.433) < tol


def test_sample_count_gamma_poisson_moments():
    rng = zone_stream(2, "z")
    draws = np.array([sample_count(GP_REF, rng) for _ in range(10_000)])
    expected_var = 52.748 * 0.103 * 1.103
    assert draws.mean() == pytest.approx(5.433, abs=3.0 * math.sqrt(expected_var / 10_000))
    assert draws.var(ddof=1) == pytest.approx(expected_var, rel=0.05)


def test_sample_response_degenerate():
    rng = zone_stream(3, "z")
    model = _model({(1, 0): 1.0})
    assert all(sample_response(model, rng) == (1, 0) for _ in range(20))


def test_sample_response_frequencies():
    rng = zone_stream(4, "z")
    model = _model({(1, 0): 0.5, (0, 1): 0.5})
    draws = [sample_response(model, rng) for _ in range(10_000)]
    maritime_rate = sum(1 for m, _ in draws if m) / len(draws)
    assert maritime_rate == pytest.approx(0.5, abs=0.02)


def test_sample_response_all_mass_on_no_response():
    rng = zone_stream(5, "z")
    model = _model({(0, 0): 1.0})
    assert all(sample_response(model, rng) == (0, 0) for _ in range(20))


def test_sample_response_respects_caps(bundled_fits):
    rng = zone_stream(6, "caps")
    for fit in bundled_fits[:3]:
        for _ in range(200):
            m, a = sample_response(fit.response, rng)
            assert 0 <= m <= 4 and 0 <= a <= 2


# ------------------------------ simulation ------------------------------


def test_simulate_months_zero_counts():
    demand = simulate_months(_fit("z", POISSON0, {(1, 0): 1.0}), months=100, seed=0)
    assert not demand.maritime.any() and not demand.aero.any()


def test_simulate_months_constant_count_and_response(monkeypatch):
    monkeypatch.setattr(mcsim, "_draw_counts", lambda dist, rng, size: np.ones(size, dtype=np.int64))
    demand = simulate_months(_fit("z", POISSON_REF, {(2, 1): 1.0}), months=50, seed=0)
    assert np.all(demand.maritime == 2)
    assert np.all(demand.aero == 1)


def test_simulate_months_thinning_identity():
    # Every event demands exactly one maritime asset, so monthly maritime
    # demand inherits the Poisson count law: mean and variance both near lam.
    lam = 4.0
    fit = _fit("z", CountDistribution(DistributionKind.POISSON, lam), {(1, 0): 1.0})
    demand = simulate_months(fit, months=10_000, seed=12)
    assert demand.maritime.mean() == pytest.approx(lam, rel=0.05)
    assert demand.maritime.var(ddof=1) == pytest.approx(lam, rel=0.05)
    assert not demand.aero.any()


def test_simulate_months_deterministic_and_order_insensitive():
    fits = [
        _fit("alpha", POISSON_REF, {(1, 0): 0.6, (0, 1): 0.3, (0, 0): 0.1}),
        _fit("bravo", GP_REF, {(2, 0): 0.5, (1, 1): 0.5}),
    ]
    once = simulate_all(fits, months=500, seed=99)
    again = simulate_all(fits, months=500, seed=99)
    assert once == again
    reversed_order = simulate_all(list(reversed(fits)), months=500, seed=99)
    assert reversed_order.entries == once.entries


def test_compound_mean_sanity(bundled_fits, bundled_summary):
    for fit in bundled_fits:
        expected_maritime = fit.distribution.mean * sum(
            m * p for (m, _), p in fit.response.level_pmf.items()
        )
        stats = bundled_summary.entries[(fit.zone_id, "maritime")]
        se = stats.std / math.sqrt(bundled_summary.months)
        assert abs(stats.mean - expected_maritime) <= 3.0 * se + 1e-9


# ------------------------------- summaries -------------------------------


def test_summarize_constant():
    stats = summarize(np.full(200, 3))
    assert (stats.minimum, stats.p25, stats.p50, stats.p75, stats.maximum) == (3, 3, 3, 3, 3)
    assert stats.mean == 3.0


def test_summarize_single_month():
    stats = summarize(np.array([7]))
    assert (stats.minimum, stats.p25, stats.p50, stats.p75, stats.maximum) == (7, 7, 7, 7, 7)


def test_nearest_rank_order_statistics():
    values = np.arange(10_000)
    assert nearest_rank(values, 0) == 0
    assert nearest_rank(values, 25) == 2500
    assert nearest_rank(values, 50) == 5000
    assert nearest_rank(values, 75) == 7500
    assert nearest_rank(values, 100) == 9999
    with pytest.raises(ValueError):
        nearest_rank(values, 42)


def test_percentile_ordering_invariant(bundled_summary):
    for stats in bundled_summary.entries.values():
        assert stats.minimum <= stats.p25 <= stats.p50 <= stats.p75 <= stats.maximum


# ------------------------------- scenarios -------------------------------


def test_build_scenario_maps_zone_classes(bundled_scenarios, bundled_zones):
    scenario = bundled_scenarios[75]
    for zone in bundled_zones:
        if zone.category.asset_class is AssetClass.BOAT_HELICOPTER:
            assert (zone.id, AssetCategory.BOAT) in scenario.levels
            assert (zone.id, AssetCategory.HELICOPTER) in scenario.levels
            assert (zone.id, AssetCategory.CUTTER) not in scenario.levels
        else:
            assert (zone.id, AssetCategory.CUTTER) in scenario.levels
            assert (zone.id, AssetCategory.AIRPLANE) in scenario.levels


def test_scenario_levels_monotone_in_percentile(bundled_scenarios):
    p50, p75 = bundled_scenarios[50], bundled_scenarios[75]
    for key, level in p50.levels.items():
        assert p75.levels[key] >= level


def test_build_scenario_p0_all_zero_when_zero_months_exist():
    fit = _fit("quiet", CountDistribution(DistributionKind.POISSON, 0.5), {(1, 0): 1.0})
    summary = simulate_all([fit], months=2000, seed=5)
    from sarloc.zoning import EventCategory, OrganizationGroup, Zone

    zone = Zone(
        id="quiet",
        category=EventCategory(OrganizationGroup.HONOLULU, AssetClass.BOAT_HELICOPTER),
        member_ids=("e",),
        superaccident=GeoPoint.from_east(20.0, -156.0),
        total_weight=1.0,
    )
    scenario = build_scenario(summary, [zone], 0)
    assert all(level == 0 for level in scenario.levels.values())


def test_build_scenario_rejects_unsupported_percentile(bundled_summary, bundled_zones):
    with pytest.raises(ValueError):
        build_scenario(bundled_summary, bundled_zones, 60)


def test_scenario_json_roundtrip(bundled_scenarios):
    scenario = bundled_scenarios[75]
    clone = DemandScenario.from_json(scenario.to_json())
    assert clone.percentile == scenario.percentile
    assert clone.levels == scenario.levels
    assert clone.zone_classes == scenario.zone_classes
    for zone_id, pos in scenario.positions.items():
        other = clone.positions[zone_id]
        assert other.lat_deg == pytest.approx(pos.lat_deg, abs=1e-12)
        assert other.lon_deg_w == pytest.approx(pos.lon_deg_w, abs=1e-12)


def test_summary_json_roundtrip(bundled_summary):
    from sarloc.mcsim import SimSummary

    clone = SimSummary.from_json(bundled_summary.to_json())
    assert clone.entries == dict(bundled_summary.entries)
    assert clone.months == bundled_summary.months
