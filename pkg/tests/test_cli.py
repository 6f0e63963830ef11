import json
import subprocess
import sys
from pathlib import Path

import pytest

from sarloc.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_VALIDATION, main
from sarloc.ingest import GeneratorConfig, generate_synthetic, write_events_csv


def _write(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _tiny_workspace(tmp_path: Path, with_helicopter: bool = True) -> Path:
    """Self-contained manifest directory: one nearshore zone, tiny fleet."""
    generator = {
        "window": {"start": "2014-01", "months": 36},
        "archetypes": [
            {
                "name": "nearshore",
                "organization": "SectorHonolulu",
                "center": {"lat": 21.2, "lon": -157.8},
                "spread_deg": 0.15,
                "monthly": {"kind": "poisson", "lam": 3.0},
                "levels": [
                    {"m": 1, "a": 0, "p": 0.45},
                    {"m": 0, "a": 1, "p": 0.35},
                    {"m": 1, "a": 1, "p": 0.15},
                    {"m": 0, "a": 0, "p": 0.05},
                ],
            }
        ],
    }
    config = GeneratorConfig.from_json(generator)
    events = generate_synthetic(config, seed=5)
    write_events_csv(events, tmp_path / "events.csv")
    _write(tmp_path / "region.json", [[25.0, -150.0], [25.0, -165.0], [15.0, -165.0], [15.0, -150.0]])
    fleet = [
        {
            "id": "B1",
            "category": "boat",
            "cruise_speed_kts": 22.0,
            "max_speed_kts": 35.0,
            "monthly_hours": 160.0,
            "current_homeport": "harbor-a",
        }
    ]
    if with_helicopter:
        fleet.append(
            {
                "id": "H1",
                "category": "helicopter",
                "cruise_speed_kts": 120.0,
                "max_speed_kts": 165.0,
                "monthly_hours": 120.0,
                "current_homeport": "strip-a",
            }
        )
    _write(tmp_path / "fleet.json", fleet)
    _write(
        tmp_path / "homeports.json",
        [
            {"id": "harbor-a", "kind": "harbor", "lat": 21.31, "lon": -157.87},
            {"id": "harbor-b", "kind": "harbor", "lat": 21.0, "lon": -156.7},
            {"id": "strip-a", "kind": "airport", "lat": 21.32, "lon": -158.05},
        ],
    )
    manifest = {
        "study_window": {"start": "2014-01", "months": 36},
        "paths": {
            "events_csv": "events.csv",
            "region_polygon": "region.json",
            "fleet": "fleet.json",
            "homeports": "homeports.json",
        },
        "zoning": {
            "islands": [{"name": "Oahu", "lat": 21.45, "lon": -158.0}],
            "radius_nmi": 50.0,
            "k_per_category": {"honolulu_boat_helicopter": 1},
            "seed": 3,
            "restarts": 4,
        },
        "simulation": {"months": 400, "seed": 9, "percentiles": [50, 75]},
        "solve": {"scope": "pacific_region", "percentile": 75},
        "pareto": {"scope": "pacific_region", "percentile": 75, "delta": 5e-05},
        "crosscheck": {"scope": "pacific_region", "percentiles": [50, 75]},
        "output_dir": "out",
    }
    _write(tmp_path / "manifest.json", manifest)
    return tmp_path / "manifest.json"


ALL_STAGES = ["ingest", "zone", "fit", "simulate", "solve", "pareto", "crosscheck"]


def _run_all(manifest: Path, out: Path) -> None:
    for stage in ALL_STAGES:
        code = main([stage, "--manifest", str(manifest), "--out", str(out)])
        assert code == EXIT_OK, f"stage {stage} exited {code}"


def test_full_pipeline_and_artifacts(tmp_path):
    manifest = _tiny_workspace(tmp_path)
    out = tmp_path / "run"
    _run_all(manifest, out)
    expected = {
        "cleaned_events.csv",
        "cleaning_report.json",
        "zones.json",
        "fits.json",
        "sim_summary.json",
        "scenario_p50.json",
        "scenario_p75.json",
        "instance.json",
        "solution.json",
        "pareto.csv",
        "pareto.json",
        "crosscheck.json",
    }
    assert expected <= {p.name for p in out.iterdir()}
    report = json.loads((out / "cleaning_report.json").read_text())
    r = report["report"]
    assert r["retained"] == r["initial"] - r["removed_medico"] - r["removed_no_gps"] - r["removed_outside_region"]
    manifest_hash = __import__("hashlib").sha256(manifest.read_bytes()).hexdigest()
    for name in ("zones.json", "solution.json", "crosscheck.json"):
        payload = json.loads((out / name).read_text())
        assert payload["_meta"]["manifest_sha256"] == manifest_hash


def test_reruns_are_byte_identical(tmp_path):
    manifest = _tiny_workspace(tmp_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    _run_all(manifest, out_a)
    _run_all(manifest, out_b)
    for path_a in sorted(out_a.iterdir()):
        path_b = out_b / path_a.name
        assert path_a.read_bytes() == path_b.read_bytes(), f"{path_a.name} differs"


def test_stage_rerun_from_persisted_artifacts(tmp_path):
    manifest = _tiny_workspace(tmp_path)
    out = tmp_path / "run"
    _run_all(manifest, out)
    zones_before = (out / "zones.json").read_bytes()
    (out / "zones.json").unlink()
    assert main(["zone", "--manifest", str(manifest), "--out", str(out)]) == EXIT_OK
    assert (out / "zones.json").read_bytes() == zones_before


def test_seed_override_changes_simulation(tmp_path):
    manifest = _tiny_workspace(tmp_path)
    out = tmp_path / "run"
    for stage in ["ingest", "zone", "fit", "simulate"]:
        assert main([stage, "--manifest", str(manifest), "--out", str(out)]) == EXIT_OK
    base = (out / "sim_summary.json").read_bytes()
    assert main(["simulate", "--manifest", str(manifest), "--out", str(out), "--seed", "1234"]) == EXIT_OK
    assert (out / "sim_summary.json").read_bytes() != base


def test_missing_manifest_is_validation_error(tmp_path):
    assert main(["ingest", "--manifest", str(tmp_path / "nope.json")]) == EXIT_VALIDATION


def test_missing_events_file_is_validation_error(tmp_path):
    manifest = _tiny_workspace(tmp_path)
    (tmp_path / "events.csv").unlink()
    code = main(["ingest", "--manifest", str(manifest), "--out", str(tmp_path / "o")])
    assert code == EXIT_VALIDATION


def test_stage_without_upstream_is_validation_error(tmp_path):
    manifest = _tiny_workspace(tmp_path)
    assert main(["zone", "--manifest", str(manifest), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION


def test_infeasible_model_exits_3(tmp_path):
    manifest = _tiny_workspace(tmp_path, with_helicopter=False)
    out = tmp_path / "run"
    for stage in ["ingest", "zone", "fit", "simulate"]:
        assert main([stage, "--manifest", str(manifest), "--out", str(out)]) == EXIT_OK
    assert main(["solve", "--manifest", str(manifest), "--out", str(out)]) == EXIT_INFEASIBLE


def test_single_weight_pareto(tmp_path):
    manifest_path = _tiny_workspace(tmp_path)
    raw = json.loads(manifest_path.read_text())
    raw["pareto"]["weight_grid"] = [[0.4, 0.6]]
    _write(manifest_path, raw)
    out = tmp_path / "run"
    for stage in ["ingest", "zone", "fit", "simulate", "pareto"]:
        assert main([stage, "--manifest", str(manifest_path), "--out", str(out)]) == EXIT_OK
    payload = json.loads((out / "pareto.json").read_text())
    assert len(payload["sweep"]) == 1
    assert len(payload["points"]) == 1


def test_module_entry_point_runs():
    result = subprocess.run(
        [sys.executable, "-m", "sarloc.cli", "--help"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert result.returncode == 0
    assert "sar-locate" in result.stdout
