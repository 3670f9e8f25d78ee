import numpy as np
import pytest

from ricciflowlab.flow import FlowConfig, evolve_ricci_flow
from ricciflowlab.geometry import (
    ConformalTorus2D,
    GridField,
    MetricSnapshot,
    RoundSphere,
    geom_key,
    integrate_nodal,
)
from ricciflowlab.heat import (
    ConfigurationError,
    approximate_heat_kernel,
    solve_conjugate_backward,
    solve_heat_forward,
)


def test_constants_solve_heat(sphere2_flow, flat_static32):
    sol = solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, np.array([2.5])))
    assert np.allclose(sol.values[:, 0], 2.5)
    u0 = np.full((32, 32), 1.5)
    sol = solve_heat_forward(flat_static32, GridField(flat_static32.key, u0), method="mol")
    assert np.max(np.abs(sol.values[-1] - 1.5)) < 1e-13


def test_sphere_mode_integrating_factor(sphere2):
    traj = evolve_ricci_flow(MetricSnapshot(sphere2, 0.0), FlowConfig(0.25, 1e-3, "exact_sphere"))
    sol = solve_heat_forward(traj, GridField(traj.key, np.array([0.0, 1.0])))
    # exp(-lam_1 int ds/r^2) = (r^2(t)/r^2(0))^{lam_1/2} = (1-2t) at t = 0.25
    assert sol.values[-1][1] == pytest.approx(0.5, abs=1e-12)


def test_flat_torus_fourier_decay_exact_and_mol(flat_static32):
    grid = flat_static32.snapshots[0].geometry.grid
    key = flat_static32.key
    mode = np.sin(2 * np.pi * grid.x)
    sol = solve_heat_forward(flat_static32, GridField(key, mode + 2.0))
    t_end = flat_static32.time_horizon
    exact = mode * np.exp(-((2 * np.pi) ** 2) * t_end) + 2.0
    assert np.max(np.abs(sol.values[-1] - exact)) < 1e-13
    sol_mol = solve_heat_forward(flat_static32, GridField(key, mode + 2.0), method="mol")
    # MOL uses the 5-point symbol: O(h^2) against the continuum solution
    assert np.max(np.abs(sol_mol.values[-1] - exact)) < 20 * grid.h**2


def test_mol_fourth_order_in_dt():
    # against the exact flow of the same semi-discrete operator (FFT diagonalized)
    n = 16
    geo = ConformalTorus2D(n, 1.0, np.zeros((n, n)))
    grid = geo.grid
    u0 = 2.0 + np.sin(2 * np.pi * grid.x) * np.cos(2 * np.pi * grid.y)
    t_end = 0.004
    kx = 2 * np.pi * np.fft.fftfreq(n, d=grid.h)
    sym = -(4 / grid.h**2) * (
        np.sin(kx[:, None] * grid.h / 2) ** 2 + np.sin(kx[None, :] * grid.h / 2) ** 2
    )
    semi_exact = np.fft.ifft2(np.fft.fft2(u0) * np.exp(sym * t_end)).real
    errs = []
    for dt in (2e-4, 1e-4):
        traj = evolve_ricci_flow(MetricSnapshot(geo, 0.0), FlowConfig(t_end, dt, "static"))
        sol = solve_heat_forward(traj, GridField(geom_key(geo), u0), method="mol", substeps=1)
        errs.append(np.max(np.abs(sol.values[-1] - semi_exact)))
    order = np.log2(errs[0] / errs[1])
    assert 3.2 <= order <= 4.8, (errs, order)


def test_mol_second_order_in_h():
    # global error against the continuum Fourier solution on the flat torus
    errs = []
    t_end = 0.002
    for n in (16, 32, 64):
        geo = ConformalTorus2D(n, 1.0, np.zeros((n, n)))
        grid = geo.grid
        u0 = 2.0 + np.sin(2 * np.pi * grid.x)
        traj = evolve_ricci_flow(MetricSnapshot(geo, 0.0), FlowConfig(t_end, 2e-5, "static"))
        sol = solve_heat_forward(traj, GridField(geom_key(geo), u0), method="mol")
        exact = 2.0 + np.sin(2 * np.pi * grid.x) * np.exp(-((2 * np.pi) ** 2) * t_end)
        errs.append(np.max(np.abs(sol.values[-1] - exact)))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(abs(o - 2.0) <= 0.4 for o in orders), (errs, orders)  # within 20%


def test_conjugate_constant_final_sphere(sphere2):
    traj = evolve_ricci_flow(MetricSnapshot(sphere2, 0.0), FlowConfig(0.25, 1e-3, "exact_sphere"))
    sol = solve_conjugate_backward(traj, GridField(traj.key, np.array([2.0])))
    exact = 2.0 * (1 - 2 * 0.25) / (1 - 2 * traj.times)
    assert np.max(np.abs(sol.values[:, 0] - exact)) < 1e-12


def test_conjugate_flat_static_mode_decay_backward(flat_static32):
    grid = flat_static32.snapshots[0].geometry.grid
    key = flat_static32.key
    lam = 2 * (2 * np.pi) ** 2
    mode = np.sin(2 * np.pi * (grid.x + grid.y))
    final = mode + 3.0
    sol = solve_conjugate_backward(flat_static32, GridField(key, final))
    t_end = flat_static32.time_horizon
    exact0 = mode * np.exp(-lam * t_end) + 3.0
    assert np.max(np.abs(sol.values[0] - exact0)) < 1e-13
    sol_mol = solve_conjugate_backward(flat_static32, GridField(key, final), method="mol")
    lam_fd = (4 / grid.h**2) * 2 * np.sin(2 * np.pi * grid.h / 2) ** 2
    semi_exact0 = mode * np.exp(-lam_fd * t_end) + 3.0
    # RK4 against the exact semi-discrete decay: time error only
    assert np.max(np.abs(sol_mol.values[0] - semi_exact0)) < 1e-6


def test_conjugate_conserves_total_integral(sphere2_flow):
    rng = np.random.default_rng(0)
    c = np.zeros(33)
    c[0] = 1.0
    c[1:4] = 0.1 * rng.normal(size=3)
    sol = solve_conjugate_backward(sphere2_flow, GridField(sphere2_flow.key, c))
    totals = [
        integrate_nodal(sol.nodal(i), sphere2_flow.snapshots[i])
        for i in range(sphere2_flow.n_stored)
    ]
    assert max(totals) - min(totals) < 1e-9 * abs(totals[0])


def test_maximum_principle(sphere2_flow, flat_static32):
    rng = np.random.default_rng(1)
    c = np.zeros(33)
    c[0] = 2.0
    c[1:4] = 0.2 * rng.normal(size=3)
    sol = solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, c))
    mins = [np.min(sol.nodal(i)) for i in range(sphere2_flow.n_stored)]
    maxs = [np.max(sol.nodal(i)) for i in range(sphere2_flow.n_stored)]
    rng_scale = maxs[0] - mins[0]
    assert all(b >= a - 1e-12 * rng_scale for a, b in zip(mins, mins[1:]))
    assert all(b <= a + 1e-12 * rng_scale for a, b in zip(maxs, maxs[1:]))
    grid = flat_static32.snapshots[0].geometry.grid
    u0 = 2.0 + np.sin(2 * np.pi * grid.x) * np.cos(4 * np.pi * grid.y)
    sol = solve_heat_forward(flat_static32, GridField(flat_static32.key, u0), method="mol")
    mins = [np.min(v) for v in sol.values]
    maxs = [np.max(v) for v in sol.values]
    assert all(b >= a - 1e-12 for a, b in zip(mins, mins[1:]))
    assert all(b <= a + 1e-12 for a, b in zip(maxs, maxs[1:]))


def test_positivity_flags_empty_for_positive_data(sphere2_flow):
    sol = solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, np.array([1.0, 0.2])))
    assert sol.positivity_flags == ()


# ---------------------------------------------------------------------------
# heat kernel


@pytest.fixture(scope="module")
def flat_kernel_setup():
    n = 64
    geo = ConformalTorus2D(n, 1.0, np.zeros((n, n)))
    traj = evolve_ricci_flow(
        MetricSnapshot(geo, 0.0), FlowConfig(0.01, 2e-5, "static", store_every=10)
    )
    return geo, traj, approximate_heat_kernel(traj)


def test_kernel_matches_periodized_gaussian(flat_kernel_setup):
    geo, traj, ker = flat_kernel_setup
    i_end = traj.n_stored - 1
    t = traj.times[i_end]
    grid = geo.grid
    ref = np.zeros((geo.grid_size,) * 2)
    for kx in range(-4, 5):
        for ky in range(-4, 5):
            ref += np.exp(-((grid.x - kx) ** 2 + (grid.y - ky) ** 2) / (4 * t)) / (4 * np.pi * t)
    got = ker.solution.nodal(i_end)
    assert abs(got[0, 0] - ref[0, 0]) / ref[0, 0] < 1e-4
    assert np.max(np.abs(got - ref)) / ref[0, 0] < 1e-4


def test_kernel_mass_conserved_static(flat_kernel_setup):
    _, traj, ker = flat_kernel_setup
    masses = [
        integrate_nodal(ker.solution.nodal(i), traj.snapshots[i])
        for i in ker.solution.stored_indices()
    ]
    assert all(abs(m - 1.0) < 1e-6 for m in masses)
    assert ker.sigma0**2 == pytest.approx(2 * ker.t_start)


def test_kernel_mass_decay_under_flow(sphere2):
    traj = evolve_ricci_flow(
        MetricSnapshot(RoundSphere(2, 1.0, 48), 0.0), FlowConfig(0.24, 1e-3, "exact_sphere")
    )
    ker = approximate_heat_kernel(traj)
    idx = ker.solution.stored_indices()
    masses = np.array([integrate_nodal(ker.solution.nodal(i), traj.snapshots[i]) for i in idx])
    times = traj.times[list(idx)]
    # d/dt mass = -int R G dmu with R = 2/r^2: mass ~ r^2(t)
    r2 = 1.0 - 2 * times
    pred = masses[0] * r2 / r2[0]
    assert np.max(np.abs(masses - pred)) < 10 * traj.dt_store**2


def test_kernel_resolution_guard(flat_kernel_setup):
    _, traj, _ = flat_kernel_setup
    with pytest.raises(ConfigurationError):
        approximate_heat_kernel(traj, t_start=1e-5)


def test_kernel_pole_snaps_to_grid(flat_kernel_setup):
    geo, traj, _ = flat_kernel_setup
    ker = approximate_heat_kernel(traj, pole=(0.2501, 0.4999))
    h = geo.grid.h
    assert ker.pole[0] == pytest.approx(round(0.2501 / h) * h)
    assert ker.pole[1] == pytest.approx(round(0.4999 / h) * h)


def test_solution_tags_and_window(sphere2_flow):
    sol = solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, np.array([1.0])))
    assert sol.equation == "heat"
    with pytest.raises(ValueError):
        solve_heat_forward(sphere2_flow, GridField(sphere2_flow.key, np.array([1.0])), t0=0.12345)
