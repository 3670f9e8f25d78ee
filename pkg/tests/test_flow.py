import numpy as np
import pytest

from ricciflowlab.flow import (
    CFLError,
    FlowConfig,
    HorizonError,
    evolve_ricci_flow,
    load_trajectory,
    ricci_flow_residual,
    save_trajectory,
    torus_cfl_limit,
)
from ricciflowlab.geometry import (
    ConformalTorus2D,
    MetricSnapshot,
    RoundSphere,
    integrate_nodal,
)


def test_sphere_radius_closed_form(sphere2):
    traj = evolve_ricci_flow(MetricSnapshot(sphere2, 0.0), FlowConfig(0.25, 1e-3, "exact_sphere"))
    for i, t in enumerate(traj.times):
        assert traj.snapshots[i].geometry.radius_sq == pytest.approx(1.0 - 2 * t, abs=1e-12)
    assert traj.snapshots[-1].geometry.radius_sq == pytest.approx(0.5, abs=1e-12)


def test_sphere_horizon_error():
    geo = RoundSphere(3, 1.0, 16)  # extinction at 1/(2*2) = 0.25
    with pytest.raises(HorizonError):
        evolve_ricci_flow(MetricSnapshot(geo, 0.0), FlowConfig(0.3, 1e-3, "exact_sphere"))


def test_constant_phi_is_fixed_point():
    geo = ConformalTorus2D(16, 1.0, np.full((16, 16), 0.3))
    cfg = FlowConfig(0.001, torus_cfl_limit(geo, 0.9), "numerical_torus")
    traj = evolve_ricci_flow(MetricSnapshot(geo, 0.0), cfg)
    assert np.max(np.abs(traj.snapshots[-1].geometry.phi - 0.3)) == 0.0


def test_cfl_guard():
    geo = ConformalTorus2D(32, 1.0, np.zeros((32, 32)))
    bad_dt = 2 * torus_cfl_limit(geo, 1.0)
    with pytest.raises(CFLError):
        evolve_ricci_flow(MetricSnapshot(geo, 0.0), FlowConfig(0.01, bad_dt, "numerical_torus"))


@pytest.fixture(scope="module")
def bumpy_flow(bumpy32):
    dt = torus_cfl_limit(bumpy32, 0.9) / 1.25
    return evolve_ricci_flow(
        MetricSnapshot(bumpy32, 0.0), FlowConfig(0.002, dt, "numerical_torus", store_every=4)
    )


def test_torus_flow_preserves_area(bumpy_flow):
    ones = np.ones((32, 32))
    areas = [integrate_nodal(ones, s) for s in bumpy_flow.snapshots]
    assert max(areas) - min(areas) < 10 * bumpy_flow.dt_store**2 * areas[0]


def test_torus_flow_dissipates_oscillation(bumpy_flow):
    osc = [float(np.max(s.geometry.phi) - np.min(s.geometry.phi)) for s in bumpy_flow.snapshots]
    assert all(b <= a + 1e-12 for a, b in zip(osc, osc[1:]))


def test_flow_residual_static_flat(flat_static32):
    assert ricci_flow_residual(flat_static32) == 0.0


def test_flow_residual_exact_sphere(sphere2_flow):
    assert ricci_flow_residual(sphere2_flow) <= 1e-10


def test_flow_residual_torus_second_order(bumpy32):
    residuals = []
    for level in range(3):
        n = 16 * 2**level
        geo0 = ConformalTorus2D(n, 1.0, np.zeros((n, n)))
        grid = geo0.grid
        phi = 0.05 * (np.cos(2 * np.pi * grid.x) + np.sin(2 * np.pi * grid.y))
        geo = ConformalTorus2D(n, 1.0, phi)
        dt = 2e-5 / 2**level
        traj = evolve_ricci_flow(MetricSnapshot(geo, 0.0), FlowConfig(0.001, dt, "numerical_torus"))
        residuals.append(ricci_flow_residual(traj))
    orders = [np.log2(residuals[i] / residuals[i + 1]) for i in range(2)]
    assert all(1.6 <= o <= 2.4 for o in orders), (residuals, orders)


def test_kappa_bound(sphere2_flow, flat_static32):
    kappa = sphere2_flow.kappa_bound()
    assert kappa == pytest.approx(1.0 / 0.6)  # (n-1)/r^2(T) with r^2 = 1 - 2*0.2
    assert flat_static32.kappa_bound() == 0.0


def test_interpolation_linear_in_r2(sphere2_flow):
    mid = sphere2_flow.snapshot_between(0, 0.5)
    r2a = sphere2_flow.snapshots[0].geometry.radius_sq
    r2b = sphere2_flow.snapshots[1].geometry.radius_sq
    assert mid.geometry.radius_sq == pytest.approx(0.5 * (r2a + r2b), abs=1e-15)


def test_saved_trajectory_reproduces_residual(tmp_path, bumpy_flow):
    save_trajectory(bumpy_flow, tmp_path / "t")
    back = load_trajectory(tmp_path / "t")
    assert ricci_flow_residual(back) == pytest.approx(ricci_flow_residual(bumpy_flow), rel=1e-12)


def test_trajectory_save_load(tmp_path, bumpy_flow, sphere2_flow):
    save_trajectory(bumpy_flow, tmp_path / "torus")
    back = load_trajectory(tmp_path / "torus")
    assert back.mode == bumpy_flow.mode
    assert np.allclose(back.times, bumpy_flow.times)
    assert np.array_equal(back.snapshots[-1].geometry.phi, bumpy_flow.snapshots[-1].geometry.phi)
    save_trajectory(sphere2_flow, tmp_path / "sphere")
    back = load_trajectory(tmp_path / "sphere")
    assert back.snapshots[-1].geometry.radius_sq == pytest.approx(
        sphere2_flow.snapshots[-1].geometry.radius_sq, abs=1e-15
    )
