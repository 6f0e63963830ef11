"""Stochastic zonal demand forecasting and exact location-allocation for
heterogeneous search-and-rescue fleets.

The pipeline runs in two stages: historical event records become per-zone
probabilistic demand forecasts (zoning, distribution fitting, Monte Carlo
replication), and those forecasts parameterize an exact multi-objective
integer program that places the fleet and allocates expected demand to it.
"""

from .geo import EARTH_RADIUS_NMI, GeoPoint, haversine_nmi, normalize_longitude, travel_time_hours
from .ingest import (
    CleaningReport,
    EventRecord,
    GeneratorConfig,
    Organization,
    RegionPolygon,
    StudyWindow,
    clean_events,
    generate_synthetic,
    load_events,
    write_events_csv,
)
from .zoning import (
    AssetClass,
    EventCategory,
    OrganizationGroup,
    ReferenceIslandSet,
    Zone,
    build_zones,
    classify_event,
    elbow_curve,
    kmeans_pp_weighted,
    superaccident,
)
from .distfit import (
    CountDistribution,
    MonthlySeries,
    ResponseModel,
    ResponseStrategy,
    ZoneFitReport,
    autocorrelation,
    chisq_gof,
    fit_gamma_poisson,
    fit_poisson,
    fit_response_model,
    fit_zone,
    select_distribution,
)
from .fleet import Asset, AssetCategory, Homeport, HomeportKind, load_assets, load_homeports
from .mcsim import (
    DemandScenario,
    SimSummary,
    build_scenario,
    sample_count,
    sample_response,
    simulate_all,
    simulate_months,
    summarize,
)
from .milp import (
    Instance,
    ParetoFront,
    Scope,
    Solution,
    build_instance,
    cross_evaluate,
    default_weight_grid,
    lp_solve,
    pareto_sweep,
    solve,
)

__version__ = "0.1.0"
