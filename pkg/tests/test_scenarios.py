import json
from pathlib import Path

import numpy as np
import pytest

from ricciflowlab.cli import main as cli_main
from ricciflowlab.heat import export_solution, solve_heat_forward
from ricciflowlab.geometry import GridField
from ricciflowlab.scenarios import (
    EXIT_CONFIG,
    EXIT_OK,
    convergence_study,
    load_config,
    run_scenario,
)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def small_sphere_config(**overrides):
    cfg = {
        "name": "test_sphere",
        "seed": 3,
        "geometry": {"family": "sphere", "dim": 2, "radius_sq": 1.0, "mode_cutoff": 24},
        "flow": {"mode": "exact_sphere", "time_horizon": 0.2, "dt": 2e-3},
        "solutions": {
            "u": {"equation": "heat", "data": "1 + 0.2*cos(theta)"},
            "w": {"equation": "conjugate_backward", "data_random": {"amplitude": 0.2, "max_mode": 2}},
        },
        "checks": [
            {"name": "flow_residual", "max_normalized": 1e-10},
            {"name": "heat_lyh", "solution": "u"},
            {"name": "conjugate_lyh", "solution": "w", "variant": "ancient"},
        ],
    }
    cfg.update(overrides)
    return cfg


def test_run_scenario_holds(tmp_path):
    report = run_scenario(load_config(small_sphere_config()), outdir=tmp_path)
    assert report.exit_code == EXIT_OK
    assert all(e["verdict"] in ("holds", "info") for e in report.checks)
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["schema_version"] == "1"
    assert payload["provenance"]["config_sha256"]
    assert (tmp_path / "timings.json").exists()
    assert list(tmp_path.glob("series_*.csv"))


def test_determinism_byte_identical(tmp_path):
    cfg = load_config(small_sphere_config())
    run_scenario(cfg, outdir=tmp_path / "a")
    run_scenario(cfg, outdir=tmp_path / "b")
    assert (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()


def test_cfl_violation_is_config_error(tmp_path, capsys):
    cfg = {
        "name": "bad_cfl",
        "geometry": {"family": "torus", "grid_size": 32, "period": 1.0},
        "flow": {"mode": "numerical_torus", "time_horizon": 0.001, "dt": 1e-3},
        "solutions": {},
        "checks": [],
    }
    report = run_scenario(load_config(cfg), outdir=tmp_path)
    assert report.exit_code == EXIT_CONFIG
    assert "CFL" in report.checks[0]["data"]["message"]


def test_hypothesis_error_is_inconclusive_not_failure():
    cfg = {
        "name": "bumpy_lyh",
        "seed": 1,
        "geometry": {
            "family": "torus",
            "grid_size": 32,
            "period": 1.0,
            "phi": "0.05*sin(2*pi*x/period)",
        },
        "flow": {"mode": "numerical_torus", "time_horizon": 0.001, "dt": "auto"},
        "solutions": {"u": {"equation": "heat", "data": "2 + 0.3*cos(2*pi*y/period)"}},
        "checks": [{"name": "heat_lyh", "solution": "u"}],
    }
    report = run_scenario(load_config(cfg))
    assert report.exit_code == EXIT_OK
    assert report.checks[0]["verdict"] == "inconclusive"


def test_unknown_check_is_config_error():
    cfg = small_sphere_config(checks=[{"name": "no_such_check"}])
    report = run_scenario(load_config(cfg))
    assert report.exit_code == EXIT_CONFIG


@pytest.mark.parametrize(
    "scenario", ["sphere_matrix_harnack", "flat_gaussian_equality", "sphere_frequency", "bumpy_torus_fit"]
)
def test_bundled_scenarios_pass(tmp_path, scenario):
    report = run_scenario(load_config(SCENARIOS / f"{scenario}.yaml"), outdir=tmp_path)
    assert report.exit_code == EXIT_OK, [
        (e["id"], e["verdict"]) for e in report.checks if e["verdict"] == "violated"
    ]


def test_cli_run_and_export_plots(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli_main(
        ["run", "--config", str(SCENARIOS / "sphere_matrix_harnack.yaml"), "--out", str(out)]
    )
    assert code == 0
    code = cli_main(["export-plots", "--out", str(out)])
    assert code == 0
    assert list(out.glob("plot_*.dat"))


def test_cli_seed_override(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    cfg = SCENARIOS / "sphere_matrix_harnack.yaml"
    assert cli_main(["run", "--config", str(cfg), "--out", str(out_a), "--seed", "99"]) == 0
    assert cli_main(["run", "--config", str(cfg), "--out", str(out_b), "--seed", "99"]) == 0
    assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()


def test_convergence_exact_flag_on_sphere():
    cfg = {
        "name": "sphere_exact_flow",
        "seed": 1,
        "geometry": {"family": "sphere", "dim": 2, "radius_sq": 1.0, "mode_cutoff": 16},
        "flow": {"mode": "exact_sphere", "time_horizon": 0.1, "dt": 2e-3},
        "solutions": {},
        "checks": [{"name": "flow_residual"}],
    }
    result = convergence_study(load_config(cfg), levels=3)
    entry = result["orders"]["flow_residual#0"]
    assert entry["orders"] == "exact"


def test_uncertified_monotonicity_is_inconclusive(bumpy32):
    from ricciflowlab.flow import FlowConfig, evolve_ricci_flow, torus_cfl_limit
    from ricciflowlab.frequency import corrected_frequency_series
    from ricciflowlab.geometry import MetricSnapshot, geom_key
    from ricciflowlab.heat import approximate_heat_kernel, solve_conjugate_backward

    dt = torus_cfl_limit(bumpy32, 0.9) / 1.2
    traj = evolve_ricci_flow(
        MetricSnapshot(bumpy32, 0.0), FlowConfig(0.03, dt, "numerical_torus", store_every=4)
    )
    ker = approximate_heat_kernel(traj)
    u = solve_conjugate_backward(traj, GridField(geom_key(bumpy32), np.full((32, 32), 2.0)))
    rep = corrected_frequency_series(u, ker, "sec_nonneg", t_burn=ker.t_burn, end_exclude_steps=2)
    assert rep.verdict == "inconclusive"  # series emitted, hypothesis not certified
    assert len(rep.corrected) > 0


def test_convergence_study_orders():
    cfg = load_config(SCENARIOS / "torus_evolution_convergence.yaml")
    result = convergence_study(cfg, levels=3)
    evo = [v for k, v in result["orders"].items() if k.startswith("evolution_residual")]
    assert len(evo) == 2
    for entry in evo:
        assert all(1.6 <= o <= 2.4 for o in entry["orders"]), entry


def test_export_solution_roundtrip(tmp_path, sphere2_flow):
    sol = solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, np.array([1.0, 0.2])))
    export_solution(sol, tmp_path / "sol", fmt="csv")
    manifest = json.loads((tmp_path / "sol/manifest.json").read_text())
    assert manifest["equation"] == "heat"
    assert len(list((tmp_path / "sol").glob("step_*.csv"))) == sol.n_times
