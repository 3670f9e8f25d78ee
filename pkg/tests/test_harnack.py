import numpy as np
import pytest

from ricciflowlab.corrections import correction_c

from ricciflowlab.flow import FlowConfig, evolve_ricci_flow, torus_cfl_limit
from ricciflowlab.geometry import ConformalTorus2D, GridField, MetricSnapshot, RoundSphere, geom_key
from ricciflowlab.harnack import (
    brendle_harnack_report,
    conjugate_lyh_report,
    general_beta_report,
    heat_kernel_bound_report,
    heat_lyh_report,
    max_abs_sectional,
    sphere_harnack_tensors,
    static_hamilton_report,
)
from ricciflowlab.heat import approximate_heat_kernel, solve_conjugate_backward, solve_heat_forward
from ricciflowlab.reporting import HypothesisError, certificate_for
from ricciflowlab.tensors import harnack_quadratic


@pytest.fixture(scope="module")
def flat_kernel():
    geo = ConformalTorus2D(64, 1.0, np.zeros((64, 64)))
    traj = evolve_ricci_flow(
        MetricSnapshot(geo, 0.0), FlowConfig(0.01, 2e-5, "static", store_every=10)
    )
    return approximate_heat_kernel(traj)


def test_certificates(sphere2_flow, flat_static32, bumpy32):
    cert = certificate_for(sphere2_flow)
    assert cert.sec_nonneg and cert.complex_sec_nonneg and cert.ric_nonneg
    assert cert.kappa == pytest.approx(1 / 0.6)
    assert certificate_for(flat_static32).kappa == 0.0
    traj = evolve_ricci_flow(
        MetricSnapshot(bumpy32, 0.0),
        FlowConfig(0.0005, torus_cfl_limit(bumpy32, 0.9), "numerical_torus"),
    )
    cert = certificate_for(traj)
    assert not cert.sec_nonneg and cert.kappa is None


# ---------------------------------------------------------------------------
# heat LYH


def test_heat_lyh_constant_on_shrinking_sphere(sphere2_flow):
    sol = solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, np.array([1.0])))
    rep = heat_lyh_report(sol)
    assert rep.verdict == "holds"
    # H = 0: per-time minimum is exactly c(t)
    for entry in rep.per_time:
        assert entry["lambda_min"] == pytest.approx(entry["c_t"], rel=1e-12)


def test_heat_lyh_flat_kernel_equality(flat_kernel):
    rep = heat_lyh_report(flat_kernel.solution, kappa=0.0, t_burn=flat_kernel.t_burn)
    assert rep.verdict == "holds"
    for entry in rep.per_time:
        assert entry["lambda_min"] >= -1e-3 * entry["c_t"]
    assert rep.details["trace_consistency_rel"] < 1e-8


def test_heat_lyh_seeded_spheres(sphere2_flow):
    rng = np.random.default_rng(0)
    for _ in range(3):
        c = np.zeros(33)
        c[0] = 1.0
        c[1:4] = rng.normal(size=3) * [0.15, 0.08, 0.04]
        sol = solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, c))
        rep = heat_lyh_report(sol)
        assert rep.verdict == "holds"


def test_heat_lyh_hypothesis_error(bumpy32):
    traj = evolve_ricci_flow(
        MetricSnapshot(bumpy32, 0.0),
        FlowConfig(0.0005, torus_cfl_limit(bumpy32, 0.9), "numerical_torus"),
    )
    grid = bumpy32.grid
    sol = solve_heat_forward(traj, GridField(geom_key(bumpy32), 2.0 + 0.1 * np.sin(2 * np.pi * grid.x)))
    with pytest.raises(HypothesisError):
        heat_lyh_report(sol)


# ---------------------------------------------------------------------------
# conjugate LYH


def test_conjugate_lyh_constant_scalar_comparison(sphere2_flow):
    # spatially constant u: check (n-1)/r^2(t) <= eta(t) for both variants
    sol = solve_conjugate_backward(sphere2_flow, GridField(sphere2_flow.key, np.array([2.0])))
    for variant in ("explicit", "ancient"):
        rep = conjugate_lyh_report(sol, variant=variant)
        assert rep.verdict == "holds", variant
        for entry in rep.per_time:
            r2 = 1.0 - 2 * entry["t"]
            assert entry["lambda_max"] == pytest.approx(1.0 / r2 - entry["eta"], rel=1e-10)


def test_conjugate_lyh_zonal_s3():
    geo = RoundSphere(3, 1.0, 24)
    traj = evolve_ricci_flow(MetricSnapshot(geo, 0.0), FlowConfig(0.2, 1e-3, "exact_sphere"))
    final = np.zeros(25)
    final[0], final[1], final[3] = 1.0, 0.15, 0.05
    sol = solve_conjugate_backward(traj, GridField(traj.key, final))
    for variant in ("explicit", "ancient"):
        rep = conjugate_lyh_report(sol, variant=variant)
        assert rep.verdict == "holds", (variant, rep.extremal_value)


def test_conjugate_lyh_flat_static_limit(flat_static32):
    # flat static torus: Ric = 0 and eta degenerates to 1/(2(T-t));
    # the estimate becomes hess log u >= -g/(2(T-t)), the time-reversed
    # sharp matrix bound, so both constant and perturbed data must hold
    grid = flat_static32.snapshots[0].geometry.grid
    for final in (np.full((32, 32), 2.0), 2.0 + 0.4 * np.sin(2 * np.pi * grid.x)):
        sol = solve_conjugate_backward(flat_static32, GridField(flat_static32.key, final))
        rep = conjugate_lyh_report(sol, variant="explicit", end_exclude_steps=10)
        assert rep.verdict == "holds"
        assert rep.details["kappa"] == 0.0


def test_conjugate_lyh_needs_certificate(bumpy32):
    traj = evolve_ricci_flow(
        MetricSnapshot(bumpy32, 0.0),
        FlowConfig(0.0005, torus_cfl_limit(bumpy32, 0.9), "numerical_torus"),
    )
    sol = solve_conjugate_backward(traj, GridField(geom_key(bumpy32), np.full((32, 32), 2.0)))
    with pytest.raises(HypothesisError):
        conjugate_lyh_report(sol)


# ---------------------------------------------------------------------------
# Brendle Harnack quadratic


def test_brendle_spot_value(sphere2_flow):
    snap = [s for s in sphere2_flow.snapshots if abs(s.time - 0.1) < 1e-12][0]
    m, p, rm, g = sphere_harnack_tensors(snap, 0.1)
    w = np.array([1.0 / np.sqrt(snap.geometry.radius_sq), 0.0])
    val = harnack_quadratic(m, p, rm, np.zeros(2), w, g)
    assert abs(val - 7.8125) <= 1e-10


def test_brendle_sampled_positive(sphere2_flow):
    rep = brendle_harnack_report(sphere2_flow, n_samples=1500, seed=4)
    assert rep.verdict == "holds"
    assert rep.data["min_value"] >= -1e-10


def test_brendle_m_term_positive_for_v_equals_w(sphere2_flow):
    snap = sphere2_flow.snapshots[10]
    t = float(sphere2_flow.times[10])
    m, p, rm, g = sphere_harnack_tensors(snap, t)
    rng = np.random.default_rng(1)
    w = rng.normal(size=2)
    val = harnack_quadratic(m, p, rm, w, w, g)
    assert val == pytest.approx(m.quad(w), rel=1e-12)
    assert val > 0


def test_brendle_requires_sphere(flat_static32):
    with pytest.raises(HypothesisError):
        brendle_harnack_report(flat_static32, n_samples=10)


# ---------------------------------------------------------------------------
# general beta / static Hamilton / kernel bounds


def test_general_beta_flat_kernel_near_zero(flat_kernel):
    rep = general_beta_report(flat_kernel.solution, t_burn=flat_kernel.t_burn)
    assert rep.data["K"] == 0.0
    # equality case: the empirical correction vanishes up to discretization
    assert rep.data["beta_emp_max"] <= 1e-3
    assert rep.verdict == "info"


def test_general_beta_bumpy_finite(bumpy32):
    dt = torus_cfl_limit(bumpy32, 0.9) / 1.2
    traj = evolve_ricci_flow(
        MetricSnapshot(bumpy32, 0.0), FlowConfig(0.02, dt, "numerical_torus", store_every=8)
    )
    ker = approximate_heat_kernel(traj)
    rep = general_beta_report(ker.solution, t_burn=ker.t_burn)
    assert np.isfinite(rep.data["beta_emp_max"])
    assert rep.data["fitted_min_constants"]["feasible"]
    assert rep.data["K"] > 0


def test_general_beta_sphere_cross_check(sphere2_flow):
    # on the certified sphere, the empirical correction must stay below the
    # sharp one: beta_emp(t) <= c(t) t - 1/2 + tol
    sol = solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, np.array([1.0, 0.15, 0.05])))
    rep = general_beta_report(sol)
    kappa = certificate_for(sphere2_flow).kappa
    for t, emp in zip(rep.data["times"], rep.data["beta_emp"]):
        bound = correction_c(kappa, t) * t - 0.5
        assert emp <= bound + 1e-8


def test_static_hamilton_gradient_bound(flat_kernel, sphere2):
    rep = static_hamilton_report(flat_kernel.solution, t_burn=flat_kernel.t_burn)
    assert rep.verdict == "holds"
    assert rep.data["L"] == 0.0
    traj = evolve_ricci_flow(MetricSnapshot(RoundSphere(2, 1.0, 48), 0.0), FlowConfig(0.3, 2e-3, "static"))
    ker = approximate_heat_kernel(traj)
    rep = static_hamilton_report(ker.solution, t_burn=ker.t_burn)
    assert rep.verdict == "holds"
    assert rep.data["L"] == 0.0  # grad Ric vanishes analytically on the round sphere


def test_static_hamilton_constant_solution_equality(sphere2_static):
    sol = solve_heat_forward(sphere2_static, GridField(sphere2_static.key, np.array([3.0])))
    rep = static_hamilton_report(sol)
    assert rep.verdict == "holds"
    for entry in rep.data["gradient_bound"]:
        assert entry["max_violation"] <= 0.0 + 1e-15


def test_static_hamilton_rejects_flow(sphere2_flow):
    sol = solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, np.array([1.0])))
    with pytest.raises(HypothesisError):
        static_hamilton_report(sol)


def test_heat_kernel_bounds_fit(flat_kernel):
    rep = heat_kernel_bound_report(flat_kernel)
    fit = rep.data["fitted_min_constants"]
    assert fit.get("C1") is not None
    # Gaussian exponent 1/(4t) vs d^2/(C1 t): small-t fit lands near 4
    assert 2.0 <= fit["C1"] <= 6.5
    assert np.isfinite(fit["C2"])
    assert rep.verdict == "info"


def test_heat_kernel_bounds_sphere(sphere2):
    traj = evolve_ricci_flow(MetricSnapshot(RoundSphere(2, 1.0, 48), 0.0), FlowConfig(0.24, 2e-3, "exact_sphere"))
    ker = approximate_heat_kernel(traj)
    rep = heat_kernel_bound_report(ker)
    fit = rep.data["fitted_min_constants"]
    assert fit.get("C1") is not None and np.isfinite(fit["C2"])


def test_max_abs_sectional(sphere2_flow, bumpy32):
    assert max_abs_sectional(sphere2_flow) == pytest.approx(1 / 0.6)
    traj = evolve_ricci_flow(
        MetricSnapshot(bumpy32, 0.0),
        FlowConfig(0.0005, torus_cfl_limit(bumpy32, 0.9), "numerical_torus"),
    )
    assert max_abs_sectional(traj) > 0
