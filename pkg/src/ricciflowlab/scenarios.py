"""Scenario-driven execution: config -> flow -> solutions -> checks -> report.

A scenario is a YAML file (key-value with nesting); data fields are
formulas in the tiny expression grammar or seeded random-field specs.
``run_scenario`` executes every requested check, writes ``report.json``
plus CSV time series into the output directory, and returns a RunReport
whose exit code contract is:

    0  every certified check holds (fit-only checks are always info)
    2  a certified check is violated
    3  configuration error

Hypothesis failures surface as per-check ``inconclusive`` verdicts, not
process failures.  Identical config + seed reproduces report.json
byte-for-byte; wall-clock timings go to a separate ``timings.json`` so
they cannot break determinism.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .calculus import (
    classical_identity_residuals,
    evolution_residual,
    lichnerowicz_commutator_residual,
)
from .corrections import (
    correction_c_ode_residual,
    correction_c,
    eta_correction,
    eta_inequality_margin,
    eta_ode_residual,
)
from .exprgrammar import Expression, ExpressionError
from .flow import (
    CFLError,
    FlowConfig,
    HorizonError,
    evolve_ricci_flow,
    ricci_flow_residual,
    torus_cfl_limit,
)
from .frequency import (
    corrected_frequency_series,
    frequency_derivative_residuals,
    vanishing_order_probe,
)
from .geometry import (
    ConformalTorus2D,
    GridField,
    MetricSnapshot,
    RoundSphere,
    geom_key,
    random_torus_field,
    random_zonal_coeffs,
)
from .harnack import (
    brendle_harnack_report,
    conjugate_lyh_report,
    general_beta_report,
    heat_kernel_bound_report,
    heat_lyh_report,
    static_hamilton_report,
)
from .heat import (
    ConfigurationError,
    KernelApprox,
    approximate_heat_kernel,
    solve_conjugate_backward,
    solve_heat_forward,
)
from .reporting import (
    SCHEMA_VERSION,
    VERDICT_HOLDS,
    VERDICT_INFO,
    VERDICT_VIOLATED,
    HypothesisError,
    to_jsonable,
    write_report_json,
)
from .serialize import write_series_csv

__all__ = ["ScenarioConfig", "RunReport", "run_scenario", "convergence_study", "load_config"]

EXIT_OK = 0
EXIT_VIOLATED = 2
EXIT_CONFIG = 3


@dataclass(frozen=True)
class ScenarioConfig:
    """Parsed scenario: raw mapping plus its canonical hash."""

    raw: dict
    sha256: str

    @property
    def name(self) -> str:
        return self.raw.get("name", "scenario")

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))


@dataclass(frozen=True)
class RunReport:
    name: str
    exit_code: int
    checks: tuple[dict, ...]
    provenance: dict

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "exit_code": self.exit_code,
            "checks": list(self.checks),
            "provenance": self.provenance,
        }


def load_config(path_or_mapping) -> ScenarioConfig:
    if isinstance(path_or_mapping, dict):
        text = yaml.safe_dump(path_or_mapping, sort_keys=True)
        raw = path_or_mapping
    else:
        text = Path(path_or_mapping).read_text()
        raw = yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ConfigurationError("scenario config must be a mapping")
    canonical = yaml.safe_dump(raw, sort_keys=True)
    return ScenarioConfig(raw, hashlib.sha256(canonical.encode()).hexdigest())


def _rng_for(seed: int, purpose: str) -> np.random.Generator:
    digest = int.from_bytes(hashlib.sha256(purpose.encode()).digest()[:4], "little")
    return np.random.default_rng([seed, digest])


# ---------------------------------------------------------------------------
# geometry / flow / solutions


def _build_geometry(cfg: dict, seed: int):
    section = cfg.get("geometry")
    if not isinstance(section, dict):
        raise ConfigurationError("missing geometry section")
    family = section.get("family")
    if family == "sphere":
        return RoundSphere(int(section.get("dim", 2)), float(section.get("radius_sq", 1.0)),
                           int(section.get("mode_cutoff", 32)))
    if family == "torus":
        n = int(section.get("grid_size", 32))
        period = float(section.get("period", 1.0))
        params = {"period": period}
        if "phi" in section:
            expr = Expression(str(section["phi"]), params)
            from .geometry import TorusGrid

            grid = TorusGrid(n, period)
            phi = np.broadcast_to(np.asarray(expr(x=grid.x, y=grid.y), dtype=float), (n, n)).copy()
            lap = np.broadcast_to(
                np.asarray(expr.flat_laplacian()(x=grid.x, y=grid.y), dtype=float), (n, n)
            ).copy()
            return ConformalTorus2D(n, period, phi, lap)
        if "phi_random" in section:
            rspec = section["phi_random"]
            rng = _rng_for(seed, "phi")
            phi = random_torus_field(
                n, period, rng, float(rspec.get("amplitude", 0.05)), int(rspec.get("max_mode", 2))
            )
            return ConformalTorus2D(n, period, phi)
        return ConformalTorus2D(n, period, np.zeros((n, n)))
    raise ConfigurationError(f"unknown geometry family {family!r}")


def _build_flow(cfg: dict, geometry) -> FlowConfig:
    section = cfg.get("flow")
    if not isinstance(section, dict):
        raise ConfigurationError("missing flow section")
    mode = section.get("mode")
    horizon = float(section.get("time_horizon"))
    cfl = float(section.get("cfl_safety", 0.9))
    dt = section.get("dt", "auto")
    if dt == "auto":
        if isinstance(geometry, ConformalTorus2D):
            dt = torus_cfl_limit(geometry, cfl) / 1.2
        else:
            dt = horizon / 200.0
    return FlowConfig(horizon, float(dt), mode, cfl, int(section.get("store_every", 1)))


def _field_from_data(section: dict, geometry, seed: int, purpose: str) -> GridField:
    key = geom_key(geometry)
    if isinstance(geometry, RoundSphere):
        basis = geometry.basis
        if "data" in section:
            expr = Expression(str(section["data"]))
            theta = np.arccos(np.clip(basis.x, -1, 1))
            nodal = np.broadcast_to(np.asarray(expr(theta=theta), dtype=float), theta.shape)
            coeffs = basis.coeffs(nodal, geometry.mode_cutoff + 1)
            return GridField(key, coeffs)
        rspec = section.get("data_random", {})
        rng = _rng_for(seed, purpose)
        coeffs = random_zonal_coeffs(
            basis, rng, float(rspec.get("amplitude", 0.25)), int(rspec.get("max_mode", 3))
        )
        coeffs[0] = float(rspec.get("base", 1.0))
        return GridField(key, coeffs)
    grid = geometry.grid
    if "data" in section:
        expr = Expression(str(section["data"]), {"period": geometry.period})
        vals = np.broadcast_to(
            np.asarray(expr(x=grid.x, y=grid.y), dtype=float), (geometry.grid_size,) * 2
        ).copy()
        return GridField(key, vals)
    rspec = section.get("data_random", {})
    rng = _rng_for(seed, purpose)
    vals = float(rspec.get("base", 2.0)) + random_torus_field(
        geometry.grid_size,
        geometry.period,
        rng,
        float(rspec.get("amplitude", 0.25)),
        int(rspec.get("max_mode", 3)),
    )
    return GridField(key, vals)


def _build_solutions(cfg: dict, traj, geometry, seed: int) -> dict:
    out = {}
    for name, section in (cfg.get("solutions") or {}).items():
        eq = section.get("equation")
        method = section.get("method", "auto")
        if eq == "heat":
            data = _field_from_data(section, geometry, seed, f"solution:{name}")
            t0 = float(section.get("t0", 0.0))
            out[name] = solve_heat_forward(traj, data, t0=t0, method=method)
        elif eq == "conjugate_backward":
            data = _field_from_data(section, geometry, seed, f"solution:{name}")
            out[name] = solve_conjugate_backward(traj, data, method=method)
        elif eq == "kernel":
            t_start = section.get("t_start", "auto")
            t_start = None if t_start == "auto" else float(t_start)
            floor = section.get("floor_rel", "auto")
            floor = None if floor == "auto" else float(floor)
            out[name] = approximate_heat_kernel(traj, t_start=t_start, floor_rel=floor, method=method)
        else:
            raise ConfigurationError(f"solution {name!r}: unknown equation {eq!r}")
    return out


def _get_solution(solutions: dict, name: str):
    if name not in solutions:
        raise ConfigurationError(f"check references unknown solution {name!r}")
    return solutions[name]


def _plain_field(sol):
    return sol.solution if isinstance(sol, KernelApprox) else sol


def _burn_of(sol) -> float:
    return sol.t_burn if isinstance(sol, KernelApprox) else 0.0


# ---------------------------------------------------------------------------
# check dispatch


def _interior_sample_times(traj, t_lo: float, fracs=(0.25, 0.5, 0.75)) -> list[float]:
    """Stored times at fixed window fractions (stable across refinement)."""
    t_hi = traj.times[-2]
    lo = max(t_lo, traj.times[1])
    out = []
    for f in fracs:
        target = lo + f * (t_hi - lo)
        i = int(np.clip(round((target - traj.times[0]) / traj.dt_store), 1, traj.n_stored - 2))
        t = float(traj.times[i])
        if t not in out:
            out.append(t)
    return out


def _run_check(chk: dict, traj, solutions: dict, seed: int, tol_scale: float) -> dict:
    name = chk.get("name")
    if name == "flow_residual":
        res = ricci_flow_residual(traj)
        bound = chk.get("max_normalized")
        verdict = VERDICT_INFO
        if bound is not None:
            verdict = VERDICT_HOLDS if res <= float(bound) else VERDICT_VIOLATED
        return {"name": name, "verdict": verdict, "data": {"linf_normalized": res}}

    if name == "correction_functions":
        return _correction_functions_check(chk)

    if name == "heat_lyh":
        sol = _get_solution(solutions, chk["solution"])
        rep = heat_lyh_report(
            _plain_field(sol),
            kappa=chk.get("kappa"),
            t_burn=float(chk.get("t_burn", _burn_of(sol))),
            c_tol=10.0 * tol_scale,
        )
        return {"name": name, "report": rep}

    if name == "conjugate_lyh":
        sol = _get_solution(solutions, chk["solution"])
        rep = conjugate_lyh_report(
            _plain_field(sol),
            variant=chk.get("variant", "explicit"),
            kappa=chk.get("kappa"),
            t_burn=float(chk.get("t_burn", 0.0)),
            end_exclude_steps=int(chk.get("end_exclude_steps", 10)),
            c_tol=10.0 * tol_scale,
        )
        return {"name": name, "report": rep}

    if name == "general_beta":
        sol = _get_solution(solutions, chk["solution"])
        rep = general_beta_report(
            _plain_field(sol),
            constants=chk.get("constants"),
            t_burn=float(chk.get("t_burn", _burn_of(sol))),
        )
        return {"name": name, "report": rep}

    if name == "static_hamilton":
        sol = _get_solution(solutions, chk["solution"])
        rep = static_hamilton_report(
            _plain_field(sol),
            constants=chk.get("constants"),
            t_burn=float(chk.get("t_burn", _burn_of(sol))),
        )
        return {"name": name, "report": rep}

    if name == "brendle_harnack":
        rep = brendle_harnack_report(
            traj,
            n_samples=int(chk.get("n_samples", 10000)),
            seed=seed,
            t_burn=float(chk.get("t_burn", 0.0)),
        )
        return {"name": name, "report": rep}

    if name == "heat_kernel_bounds":
        sol = _get_solution(solutions, chk["solution"])
        if not isinstance(sol, KernelApprox):
            raise ConfigurationError("heat_kernel_bounds needs a kernel solution")
        rep = heat_kernel_bound_report(sol)
        return {"name": name, "report": rep}

    if name == "evolution_residual":
        sol = _plain_field(_get_solution(solutions, chk["solution"]))
        eps = float(chk.get("eps", 1.0))
        delta = float(chk.get("delta", 0.0))
        t_lo = traj.times[sol.start_index]
        rep = evolution_residual(
            sol, eps, delta, sample_times=_interior_sample_times(traj, t_lo)
        )
        bound = chk.get("max_normalized")
        verdict = VERDICT_INFO if bound is None else (
            VERDICT_HOLDS if rep.linf_normalized <= float(bound) else VERDICT_VIOLATED
        )
        return {"name": name, "verdict": verdict, "data": rep.as_dict()}

    if name == "lichnerowicz":
        eps = float(chk.get("eps", 1.0))
        fs = _time_field(chk, traj, seed)
        rep = lichnerowicz_commutator_residual(
            fs, traj, eps, sample_times=_interior_sample_times(traj, traj.times[0])
        )
        return {"name": name, "verdict": VERDICT_INFO, "data": rep.as_dict()}

    if name == "classical_identities":
        sol = _plain_field(_get_solution(solutions, chk["solution"]))
        t_lo = traj.times[sol.start_index]
        rep = classical_identity_residuals(
            sol, sample_times=_interior_sample_times(traj, t_lo)
        )
        return {"name": name, "verdict": VERDICT_INFO, "data": rep.as_dict()}

    if name == "frequency_residuals":
        u = _plain_field(_get_solution(solutions, chk["u"]))
        weight = _get_solution(solutions, chk["weight"])
        rep = frequency_derivative_residuals(
            u,
            weight,
            t_burn=float(chk.get("t_burn", _burn_of(weight))),
            end_exclude_steps=int(chk.get("end_exclude_steps", 1)),
        )
        dt = traj.dt_store
        worst = max(p["i_prime_residual"] / (p["i_prime_scale"] * 10.0 * tol_scale * dt**2) for p in rep.per_time)
        verdict = VERDICT_HOLDS if worst <= 1.0 else VERDICT_VIOLATED
        data = rep.as_dict()
        data["i_prime_within_10_dt2"] = bool(worst <= 1.0)
        return {"name": name, "verdict": verdict, "data": data}

    if name == "corrected_frequency":
        u = _plain_field(_get_solution(solutions, chk["u"]))
        weight = solutions.get(chk.get("weight")) if chk.get("weight") else None
        rep = corrected_frequency_series(
            u,
            weight,
            chk.get("variant", "sec_nonneg"),
            params=chk.get("params"),
            t_burn=float(chk.get("t_burn", _burn_of(weight) if weight is not None else 0.0)),
            end_exclude_steps=int(chk.get("end_exclude_steps", 10)),
            c_tol=10.0 * tol_scale,
        )
        return {"name": name, "report": rep}

    if name == "vanishing_order":
        u = _plain_field(_get_solution(solutions, chk["u"]))
        weight = _get_solution(solutions, chk["weight"])
        rep = vanishing_order_probe(
            u,
            weight,
            t1=float(chk["t1"]),
            t_burn=float(chk.get("t_burn", _burn_of(weight))),
            end_exclude_steps=int(chk.get("end_exclude_steps", 10)),
        )
        return {"name": name, "report": rep}

    raise ConfigurationError(f"unknown check {name!r}")


def _time_field(chk: dict, traj, seed: int) -> np.ndarray:
    """Stored-time stack of fields for the commutator check."""
    geo = traj.snapshots[0].geometry
    formula = chk.get("field")
    if formula is None:
        raise ConfigurationError("lichnerowicz check needs a 'field' formula (may use t)")
    if isinstance(geo, RoundSphere):
        basis = geo.basis
        theta = np.arccos(np.clip(basis.x, -1, 1))
        expr = Expression(str(formula))
        out = []
        for t in traj.times:
            nodal = np.broadcast_to(np.asarray(expr(theta=theta, t=float(t)), dtype=float), theta.shape)
            out.append(basis.coeffs(nodal, geo.mode_cutoff + 1))
        return np.array(out)
    grid = geo.grid
    expr = Expression(str(formula), {"period": geo.period})
    out = []
    for t in traj.times:
        vals = np.broadcast_to(
            np.asarray(expr(x=grid.x, y=grid.y, t=float(t)), dtype=float), (geo.grid_size,) * 2
        ).copy()
        out.append(vals)
    return np.array(out)


def _correction_functions_check(chk: dict) -> dict:
    """Grid checks of c(t), the explicit eta inequality, and the ancient ODE."""
    kappas = np.logspace(-3, 1, int(chk.get("n_kappa", 20)))
    ts = np.linspace(0.05, 10.0, int(chk.get("n_t", 20)))
    worst_ode = 0.0
    sandwich_ok = True
    for k in kappas:
        resid = np.max(correction_c_ode_residual(float(k), ts))
        worst_ode = max(worst_ode, float(resid))
        c = correction_c(float(k), ts)
        lower, upper = 1.0 / (2 * ts), 1.0 / (2 * ts) + k
        sandwich_ok = sandwich_ok and bool(np.all(c > lower) and np.all(c < upper))
    horizon = 1.0
    teval = np.linspace(0.02, horizon - 0.02, 25)
    eta_margin = float("inf")
    worst_eta_ode = 0.0
    for k in (0.5, 1.0, 2.0, 5.0):
        margin = eta_inequality_margin(k, teval, horizon, "explicit")
        scale = eta_correction(k, teval, horizon, "explicit") ** 2
        eta_margin = min(eta_margin, float(np.min(margin / (2 * scale))))
        worst_eta_ode = max(worst_eta_ode, float(np.max(eta_ode_residual(k, teval, horizon))))
    blowup_ok = all(
        eta_correction(1.0, horizon - d, horizon, "ancient") > 1.0 / (4 * d)
        for d in (1e-2, 1e-3, 1e-4, 1e-5)
    )
    ok = worst_ode <= 1e-10 and sandwich_ok and eta_margin >= -1e-10 and worst_eta_ode <= 1e-10 and blowup_ok
    return {
        "name": "correction_functions",
        "verdict": VERDICT_HOLDS if ok else VERDICT_VIOLATED,
        "data": {
            "c_ode_residual_max": worst_ode,
            "sandwich_strict": sandwich_ok,
            "eta_explicit_min_margin_normalized": eta_margin,
            "eta_ancient_ode_residual_max": worst_eta_ode,
            "eta_blowup_ok": blowup_ok,
        },
    }


# ---------------------------------------------------------------------------
# scenario execution


def run_scenario(config: ScenarioConfig, outdir=None, tolerance_scale: float = 1.0) -> RunReport:
    cfg = config.raw
    timings = {}
    t_total = time.perf_counter()
    try:
        geometry = _build_geometry(cfg, config.seed)
        flow_cfg = _build_flow(cfg, geometry)
        t0 = time.perf_counter()
        traj = evolve_ricci_flow(MetricSnapshot(geometry, 0.0), flow_cfg)
        timings["flow"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        solutions = _build_solutions(cfg, traj, geometry, config.seed)
        timings["solutions"] = time.perf_counter() - t0
    except (ConfigurationError, CFLError, HorizonError, ExpressionError, ValueError, KeyError, TypeError) as exc:
        report = RunReport(
            name=config.name,
            exit_code=EXIT_CONFIG,
            checks=({"name": "configuration", "verdict": "error", "data": {"message": str(exc)}},),
            provenance=_provenance(config),
        )
        if outdir is not None:
            _write_outputs(report, outdir, timings, time.perf_counter() - t_total)
        return report

    entries = []
    any_violated = False
    for k, chk in enumerate(cfg.get("checks") or []):
        label = f'{chk.get("name", "check")}#{k}'
        t0 = time.perf_counter()
        try:
            result = _run_check(chk, traj, solutions, config.seed, tolerance_scale)
        except HypothesisError as exc:
            result = {
                "name": chk.get("name"),
                "verdict": "inconclusive",
                "data": {"hypothesis_error": str(exc)},
            }
        except (ConfigurationError, KeyError) as exc:
            report = RunReport(
                name=config.name,
                exit_code=EXIT_CONFIG,
                checks=(
                    {"name": label, "verdict": "error", "data": {"message": str(exc)}},
                ),
                provenance=_provenance(config),
            )
            if outdir is not None:
                _write_outputs(report, outdir, timings, time.perf_counter() - t_total)
            return report
        timings[label] = time.perf_counter() - t0
        entry = _normalize_entry(label, result)
        if entry["verdict"] == VERDICT_VIOLATED:
            any_violated = True
        entries.append(entry)

    report = RunReport(
        name=config.name,
        exit_code=EXIT_VIOLATED if any_violated else EXIT_OK,
        checks=tuple(entries),
        provenance=_provenance(config),
    )
    if outdir is not None:
        _write_outputs(report, outdir, timings, time.perf_counter() - t_total)
    return report


def _normalize_entry(label: str, result: dict) -> dict:
    if "report" in result:
        rep = result["report"]
        payload = to_jsonable(rep)
        verdict = payload.get("verdict", VERDICT_INFO)
        return {"id": label, "name": result["name"], "verdict": verdict, "data": payload}
    return {
        "id": label,
        "name": result["name"],
        "verdict": result.get("verdict", VERDICT_INFO),
        "data": to_jsonable(result.get("data", {})),
    }


def _provenance(config: ScenarioConfig) -> dict:
    return {
        "config_sha256": config.sha256,
        "code_version": __version__,
        "seed": config.seed,
    }


def _write_outputs(report: RunReport, outdir, timings: dict, total: float) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_report_json(out / "report.json", report.as_dict())
    timings = dict(timings, total=total)
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    for entry in report.checks:
        series = _series_columns(entry)
        if series:
            write_series_csv(out / f"series_{entry['id'].replace('#', '_')}.csv", series)


def _series_columns(entry: dict) -> dict | None:
    data = entry.get("data", {})
    if "per_time" in data and data["per_time"]:
        rows = data["per_time"]
        keys = [k for k in rows[0] if isinstance(rows[0][k], (int, float))]
        return {k: np.array([r.get(k, np.nan) for r in rows], dtype=float) for k in keys}
    if "times" in data and "corrected" in data:
        cols = {"t": np.asarray(data["times"], dtype=float),
                "corrected": np.asarray(data["corrected"], dtype=float)}
        n = len(cols["t"])
        for name in ("I", "D", "S", "F"):
            vals = data.get("details", {}).get(name)
            if isinstance(vals, list) and len(vals) == n:
                cols[name] = np.asarray(vals, dtype=float)
        diffs = np.asarray(data.get("forward_differences", []), dtype=float)
        if len(diffs) == n - 1:
            cols["forward_difference"] = np.append(diffs, np.nan)
        return cols
    return None


# ---------------------------------------------------------------------------
# convergence study


def convergence_study(config: ScenarioConfig, levels: int = 3, outdir=None) -> dict:
    """Re-run the scenario at (h, dt) / 2^k and report observed orders.

    Torus scenarios double the grid and halve dt per level; sphere
    scenarios halve dt (the zonal space is exact).  Residual-bearing
    checks are compared via log2 ratios of their normalized sup norms.
    """
    if levels < 3:
        raise ConfigurationError("convergence study needs at least 3 levels")
    base = config.raw
    family = base.get("geometry", {}).get("family")
    reports = []
    for k in range(levels):
        cfg = json.loads(json.dumps(base))  # deep copy
        flow = cfg["flow"]
        if flow.get("dt", "auto") == "auto":
            raise ConfigurationError("convergence study needs an explicit base dt")
        flow["dt"] = float(flow["dt"]) / 2**k
        if family == "torus":
            cfg["geometry"]["grid_size"] = int(cfg["geometry"]["grid_size"]) * 2**k
        reports.append(run_scenario(load_config(cfg)))
    orders = {}
    for entry0 in reports[0].checks:
        cid = entry0["id"]
        series = []
        for rep in reports:
            match = [e for e in rep.checks if e["id"] == cid]
            if not match or "linf_normalized" not in match[0].get("data", {}):
                series = []
                break
            series.append(match[0]["data"]["linf_normalized"])
        if len(series) == levels:
            if max(series) < 1e-12:
                orders[cid] = {"residuals": series, "orders": "exact"}
            else:
                orders[cid] = {
                    "residuals": series,
                    "orders": [float(np.log2(series[i] / series[i + 1])) for i in range(levels - 1)],
                }
    result = {
        "name": config.name,
        "levels": levels,
        "orders": orders,
        "exit_codes": [r.exit_code for r in reports],
    }
    if outdir is not None:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        write_report_json(out / "convergence.json", result)
    return result
