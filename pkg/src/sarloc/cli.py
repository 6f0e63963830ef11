"""Pipeline orchestration: one manifest, one subcommand per stage.

    sar-locate <ingest|zone|fit|simulate|solve|pareto|crosscheck>
               --manifest <path> [--out <dir>] [--seed <n>]

Every stage reads its inputs from the manifest (paths are resolved relative
to the manifest file) and its upstream artifacts from the output directory,
so any stage can be re-run in isolation.  Artifacts embed the manifest hash
and the stage seed; reruns with the same manifest are byte-identical.

Exit codes: 0 success, 2 validation failure, 3 infeasible model, 4 internal
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from .distfit import ZoneFitReport, fit_zone
from .fleet import Asset, Homeport, load_assets, load_homeports
from .ingest import (
    EventRecord,
    RegionPolygon,
    StudyWindow,
    clean_events,
    load_events,
    write_events_csv,
)
from .mcsim import DemandScenario, SimSummary, build_scenario, simulate_all
from .milp import (
    Instance,
    Scope,
    build_instance,
    cross_evaluate,
    default_weight_grid,
    pareto_sweep,
    solve,
    write_front_csv,
)
from .milp.pareto import DEFAULT_DELTA, InfeasibleModelError
from .milp.solver import SolveStatus
from .zoning import (
    AssetClass,
    EventCategory,
    OrganizationGroup,
    ReferenceIslandSet,
    Zone,
    build_zones,
    load_zones,
    zones_to_json,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4

SCENARIO_PRESETS = {
    "scenario1": {"scope": "current_only"},
    "scenario2": {"scope": "pacific_region"},
    "scenario3": {},  # full weight grid; scope stays explicit
}


class ManifestError(ValueError):
    """Anything wrong with the manifest or referenced input files."""


@dataclass(frozen=True)
class Manifest:
    path: Path
    raw: Mapping[str, Any]
    sha256: str

    @property
    def base_dir(self) -> Path:
        return self.path.parent

    def resolve(self, relative: str) -> Path:
        p = Path(relative)
        return p if p.is_absolute() else self.base_dir / p

    def section(self, name: str) -> Mapping[str, Any]:
        value = self.raw.get(name)
        if not isinstance(value, dict):
            raise ManifestError(f"manifest is missing the {name!r} section")
        return value

    def input_path(self, key: str) -> Path:
        paths = self.section("paths")
        if key not in paths:
            raise ManifestError(f"manifest paths section is missing {key!r}")
        resolved = self.resolve(str(paths[key]))
        if not resolved.exists():
            raise ManifestError(f"input file for {key!r} not found: {resolved}")
        return resolved

    def window(self) -> StudyWindow:
        try:
            return StudyWindow.from_json(self.section("study_window"))
        except (KeyError, ValueError) as exc:
            raise ManifestError(f"bad study_window: {exc}") from None

    def output_dir(self, override: str | None) -> Path:
        if override is not None:
            out = Path(override)
        else:
            raw = self.raw.get("output_dir")
            if raw is None:
                raise ManifestError("manifest has no output_dir and no --out was given")
            out = self.resolve(str(raw))
        out.mkdir(parents=True, exist_ok=True)
        return out


def load_manifest(path: str | Path) -> Manifest:
    p = Path(path)
    if not p.exists():
        raise ManifestError(f"manifest not found: {p}")
    data = p.read_bytes()
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")
    return Manifest(path=p, raw=raw, sha256=hashlib.sha256(data).hexdigest())


def _write_json(path: Path, payload: dict, manifest: Manifest, seed: int | None) -> None:
    payload = dict(payload)
    payload["_meta"] = {"manifest_sha256": manifest.sha256, "seed": seed}
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv_meta(csv_path: Path, manifest: Manifest, seed: int | None) -> None:
    _write_json(csv_path.with_suffix(csv_path.suffix + ".meta.json"), {}, manifest, seed)


def _read_artifact(out: Path, name: str) -> dict:
    path = out / name
    if not path.exists():
        raise ManifestError(f"missing upstream artifact {name}; run the earlier stage first")
    with path.open() as fh:
        return json.load(fh)


# ------------------------------- stages -------------------------------


def _load_cleaned_events(manifest: Manifest, out: Path) -> list[EventRecord]:
    path = out / "cleaned_events.csv"
    if not path.exists():
        raise ManifestError("missing cleaned_events.csv; run the ingest stage first")
    events, rejects = load_events(path, manifest.window())
    if rejects:
        raise ManifestError(f"cleaned events failed validation: {rejects[0]}")
    return events


def cmd_ingest(manifest: Manifest, out: Path, seed: int | None) -> int:
    events, rejects = load_events(manifest.input_path("events_csv"), manifest.window())
    with manifest.input_path("region_polygon").open() as fh:
        region = RegionPolygon.from_json(json.load(fh))
    cleaned, report = clean_events(events, region)
    write_events_csv(cleaned, out / "cleaned_events.csv")
    _write_csv_meta(out / "cleaned_events.csv", manifest, None)
    _write_json(
        out / "cleaning_report.json",
        {
            "report": report.to_json(),
            "load_rejects": [{"line": r.line, "reason": r.reason} for r in rejects],
        },
        manifest,
        None,
    )
    print(
        f"ingest: {report.initial} records in, removed {report.removed_medico} medico / "
        f"{report.removed_no_gps} without GPS / {report.removed_outside_region} outside region; "
        f"retained {report.retained} ({report.retained_fraction:.2%})"
    )
    return EXIT_OK


def _islands_from_config(manifest: Manifest, zoning_cfg: Mapping[str, Any]) -> ReferenceIslandSet:
    islands = zoning_cfg.get("islands")
    if islands is None:
        raise ManifestError("zoning config is missing islands")
    if isinstance(islands, str):
        path = manifest.resolve(islands)
        if not path.exists():
            raise ManifestError(f"islands file not found: {path}")
        with path.open() as fh:
            islands = json.load(fh)
    try:
        return ReferenceIslandSet.from_json(islands)
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"bad islands config: {exc}") from None


def _k_per_category(zoning_cfg: Mapping[str, Any]) -> dict[EventCategory, int]:
    raw = zoning_cfg.get("k_per_category")
    if not isinstance(raw, dict):
        raise ManifestError("zoning config needs a k_per_category table")
    result: dict[EventCategory, int] = {}
    for key, value in raw.items():
        try:
            group_name, class_name = key.split("_", 1)
            category = EventCategory(OrganizationGroup(group_name), AssetClass(class_name))
        except ValueError:
            raise ManifestError(f"unknown category key {key!r} in k_per_category") from None
        result[category] = int(value)
    return result


def cmd_zone(manifest: Manifest, out: Path, seed: int | None) -> int:
    zoning_cfg = manifest.section("zoning")
    islands = _islands_from_config(manifest, zoning_cfg)
    events = _load_cleaned_events(manifest, out)
    stage_seed = int(zoning_cfg.get("seed", 0)) if seed is None else seed
    zones = build_zones(
        events,
        islands,
        _k_per_category(zoning_cfg),
        seed=stage_seed,
        radius_nmi=float(zoning_cfg.get("radius_nmi", 50.0)),
        restarts=int(zoning_cfg.get("restarts", 8)),
    )
    _write_json(out / "zones.json", {"zones": zones_to_json(zones)}, manifest, stage_seed)
    for z in zones:
        print(
            f"zone {z.id}: {z.category.key}, {len(z.member_ids)} events, "
            f"weight {z.total_weight:.0f}"
        )
    return EXIT_OK


def _load_zone_artifact(out: Path) -> list[Zone]:
    payload = _read_artifact(out, "zones.json")
    from .zoning import zones_from_json

    return zones_from_json(payload["zones"])


def cmd_fit(manifest: Manifest, out: Path, seed: int | None) -> int:
    events = _load_cleaned_events(manifest, out)
    zones = _load_zone_artifact(out)
    window = manifest.window()
    by_id = {e.id: e for e in events}
    fits = []
    for zone in zones:
        members = [by_id[m] for m in zone.member_ids]
        fits.append(fit_zone(zone.id, members, window))
    _write_json(out / "fits.json", {"fits": [f.to_json() for f in fits]}, manifest, None)
    for f in fits:
        d = f.distribution
        extra = "" if d.alpha is None else f", alpha={d.alpha:.3f}, beta={d.beta:.3f}"
        print(f"fit {f.zone_id}: {d.kind.value}, lam={d.lam:.3f}{extra}")
    return EXIT_OK


def cmd_simulate(manifest: Manifest, out: Path, seed: int | None) -> int:
    sim_cfg = manifest.section("simulation")
    fits_payload = _read_artifact(out, "fits.json")
    fits = [ZoneFitReport.from_json(obj) for obj in fits_payload["fits"]]
    zones = _load_zone_artifact(out)
    months = int(sim_cfg.get("months", 10_000))
    stage_seed = int(sim_cfg.get("seed", 0)) if seed is None else seed
    percentiles = [int(q) for q in sim_cfg.get("percentiles", [50, 75])]
    summary = simulate_all(fits, months=months, seed=stage_seed)
    _write_json(out / "sim_summary.json", summary.to_json(), manifest, stage_seed)
    for q in percentiles:
        scenario = build_scenario(summary, zones, q)
        _write_json(out / f"scenario_p{q}.json", scenario.to_json(), manifest, stage_seed)
        total = sum(scenario.levels.values())
        print(f"simulate: percentile {q} -> total monthly demand {total} asset-events")
    return EXIT_OK


def _load_fleet_inputs(manifest: Manifest) -> tuple[list[Asset], list[Homeport]]:
    try:
        assets = load_assets(manifest.input_path("fleet"))
        ports = load_homeports(manifest.input_path("homeports"))
    except (KeyError, ValueError) as exc:
        raise ManifestError(f"bad fleet/homeport inputs: {exc}") from None
    return assets, ports


def _scenario_from_artifact(out: Path, percentile: int) -> DemandScenario:
    return DemandScenario.from_json(_read_artifact(out, f"scenario_p{percentile}.json"))


def _resolve_solve_config(cfg: Mapping[str, Any]) -> tuple[Scope, tuple[float, float], int, float]:
    merged: dict[str, Any] = {}
    preset = cfg.get("scenario")
    if preset is not None:
        if preset not in SCENARIO_PRESETS:
            raise ManifestError(f"unknown scenario preset {preset!r}")
        merged.update(SCENARIO_PRESETS[preset])
    merged.update(cfg)
    delta = float(merged.get("delta", DEFAULT_DELTA))
    try:
        scope = Scope(merged.get("scope", "current_only"))
    except ValueError:
        raise ManifestError(f"unknown scope {merged.get('scope')!r}") from None
    weights_raw = merged.get("weights")
    weights = (delta, 1.0 - delta) if weights_raw is None else (float(weights_raw[0]), float(weights_raw[1]))
    percentile = int(merged.get("percentile", 75))
    mission_hours = float(merged.get("mission_hours", 1.5))
    return scope, weights, percentile, mission_hours


def cmd_solve(manifest: Manifest, out: Path, seed: int | None) -> int:
    scope, weights, percentile, mission_hours = _resolve_solve_config(manifest.section("solve"))
    assets, ports = _load_fleet_inputs(manifest)
    scenario = _scenario_from_artifact(out, percentile)
    instance = build_instance(assets, ports, scenario, mission_hours, scope)
    _write_json(out / "instance.json", instance.to_json(), manifest, None)
    solution = solve(instance, weights)
    _write_json(out / "solution.json", solution.to_json(), manifest, None)
    if solution.status is SolveStatus.INFEASIBLE:
        print(f"solve: infeasible ({solution.infeasible_reason})", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(
        f"solve: {solution.status.value}, relocation {solution.f1:.1f} h, "
        f"deployment {solution.f2:.1f} h ({solution.stats.nodes} nodes, "
        f"{solution.stats.lp_iterations} LP pivots, {solution.stats.wall_time_s:.1f} s)"
    )
    return EXIT_OK


def cmd_pareto(manifest: Manifest, out: Path, seed: int | None) -> int:
    cfg = manifest.section("pareto")
    scope, _, percentile, mission_hours = _resolve_solve_config(cfg)
    delta = float(cfg.get("delta", DEFAULT_DELTA))
    grid_raw = cfg.get("weight_grid")
    grid = (
        default_weight_grid(delta)
        if grid_raw is None
        else tuple((float(w1), float(w2)) for w1, w2 in grid_raw)
    )
    assets, ports = _load_fleet_inputs(manifest)
    scenario = _scenario_from_artifact(out, percentile)
    instance = build_instance(assets, ports, scenario, mission_hours, scope)
    front = pareto_sweep(instance, grid)
    write_front_csv(front, out / "pareto.csv")
    _write_csv_meta(out / "pareto.csv", manifest, None)
    _write_json(
        out / "pareto.json",
        {
            "points": [
                {
                    "f1_relocation_hours": p.f1,
                    "f2_deployment_hours": p.f2,
                    "weights": [list(w) for w in p.weights],
                    "solution": p.solution.to_json(),
                }
                for p in front.points
            ],
            "sweep": [
                {
                    "w1": e.w1,
                    "w2": e.w2,
                    "f1_relocation_hours": e.solution.f1,
                    "f2_deployment_hours": e.solution.f2,
                    "dominated": e.dominated,
                }
                for e in front.sweep
            ],
        },
        manifest,
        None,
    )
    for e in front.sweep:
        flag = " (dominated)" if e.dominated else ""
        print(f"pareto: w1={e.w1:g} f1={e.solution.f1:.1f} f2={e.solution.f2:.1f}{flag}")
    print(f"pareto: {len(front.points)} non-dominated points")
    return EXIT_OK


def cmd_crosscheck(manifest: Manifest, out: Path, seed: int | None) -> int:
    cfg = manifest.section("crosscheck")
    scope, _, _, mission_hours = _resolve_solve_config(cfg)
    delta = float(cfg.get("delta", DEFAULT_DELTA))
    weights_raw = cfg.get("weights")
    weights = (delta, 1.0 - delta) if weights_raw is None else (float(weights_raw[0]), float(weights_raw[1]))
    percentiles = [int(q) for q in cfg.get("percentiles", [50, 75])]
    if len(percentiles) != 2:
        raise ManifestError("crosscheck needs exactly two percentiles")
    assets, ports = _load_fleet_inputs(manifest)
    instances = {
        q: build_instance(assets, ports, _scenario_from_artifact(out, q), mission_hours, scope)
        for q in percentiles
    }
    results = {}
    for q_loc, q_dem in (percentiles, list(reversed(percentiles))):
        cross = cross_evaluate(instances[q_loc], instances[q_dem], weights)
        direct = solve(instances[q_dem], weights)
        robust = (
            cross.feasible
            and direct.status is SolveStatus.OPTIMAL
            and cross.f2 is not None
            and abs(cross.f2 - direct.f2) <= 1e-6
        )
        results[f"p{q_loc}_locations_on_p{q_dem}_demand"] = {
            "cross": cross.to_json(),
            "direct_f2": direct.f2 if direct.status is SolveStatus.OPTIMAL else None,
            "gap_hours": None
            if not cross.feasible or direct.status is not SolveStatus.OPTIMAL
            else cross.f2 - direct.f2,
            "robust": robust,
        }
        label = "robust" if robust else ("infeasible" if not cross.feasible else "gap")
        print(
            f"crosscheck: p{q_loc} locations on p{q_dem} demand -> "
            f"f2={cross.f2 if cross.f2 is not None else 'n/a'} ({label})"
        )
    _write_json(out / "crosscheck.json", {"weights": list(weights), "results": results}, manifest, None)
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "zone": cmd_zone,
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "pareto": cmd_pareto,
    "crosscheck": cmd_crosscheck,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sar-locate",
        description="Search-and-rescue demand forecasting and asset location pipeline",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--manifest", required=True, help="run manifest JSON")
    parser.add_argument("--out", default=None, help="output directory (overrides manifest)")
    parser.add_argument("--seed", type=int, default=None, help="override the stage seed")
    args = parser.parse_args(argv)

    try:
        manifest = load_manifest(args.manifest)
        out = manifest.output_dir(args.out)
        return COMMANDS[args.command](manifest, out, args.seed)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleModelError as exc:
        print(f"error: model infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
