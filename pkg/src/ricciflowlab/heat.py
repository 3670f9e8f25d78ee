"""Heat and backward conjugate heat equations along a flow trajectory.

Forward heat ``u_t = Lap_{g(t)} u``:

* sphere -- exact per-mode integrating factor; the mode integral
  ``int dt / r^2(t)`` is evaluated in closed form on the shrinking
  sphere and exactly on static spheres.
* torus -- method-of-lines RK4 on the 5-point conformal Laplacian,
  with the conformal factor co-integrated through the Runge-Kutta
  stages (resynchronized to the stored flow snapshot every stored
  step); on a *flat static* torus an exact Fourier path is used instead
  (the FD symbol deficit would otherwise swamp the sharp-equality
  checks that run on the flat kernel), and ``method="mol"`` forces the
  stencil path.

Backward conjugate heat ``u_t + Lap u = R u`` is integrated in reversed
time ``s = T - t`` (that direction is the well-posed one) with RK4; the
forward-in-time variant of the conjugate equation is rejected at the
API level.

Heat kernels are approximated by seeding a normalized Riemannian
Gaussian of variance ``2 t_start`` plus a tiny uniform floor (a
constant is itself a heat solution, so the floored field remains a
positive solution; the floor keeps ``log u`` well defined in the far
field where the true kernel underflows).  Reported quantities start at
``t_burn = 2 t_start``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flow import FlowTrajectory
from .geometry import (
    ConformalTorus2D,
    GridField,
    MetricSnapshot,
    RoundSphere,
    integrate_nodal,
)
from .tensors import ShapeMismatchError

__all__ = [
    "SolutionField",
    "KernelApprox",
    "ConfigurationError",
    "solve_heat_forward",
    "solve_conjugate_backward",
    "approximate_heat_kernel",
    "export_solution",
]

_POSITIVITY_TOL = 1e-12


class ConfigurationError(ValueError):
    """Solver configuration inconsistent with the trajectory/geometry."""


@dataclass(frozen=True)
class SolutionField:
    """Space-time scalar field sampled at the trajectory's stored steps.

    ``values[j]`` lives at stored index ``start_index + j``.  Torus
    entries are nodal (N, N) arrays, sphere entries mode-coefficient
    vectors.  ``positivity_flags`` lists stored indices where a
    positive-data solution undershoots ``-1e-12 * max|u|``.
    """

    trajectory: FlowTrajectory
    equation: str
    values: np.ndarray
    start_index: int = 0
    positivity_flags: tuple[int, ...] = ()

    def __post_init__(self):
        if self.equation not in ("heat", "conjugate_backward", "static_heat"):
            raise ValueError(f"unknown equation tag {self.equation!r}")
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("solution values must be finite")
        expected = self.trajectory.n_stored - self.start_index
        if v.shape[0] != expected:
            raise ShapeMismatchError("solution length does not cover the trajectory window")
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times[self.start_index :]

    @property
    def n_times(self) -> int:
        return self.values.shape[0]

    def stored_indices(self) -> range:
        return range(self.start_index, self.trajectory.n_stored)

    def snapshot(self, stored_index: int) -> MetricSnapshot:
        return self.trajectory.snapshots[stored_index]

    def raw(self, stored_index: int) -> np.ndarray:
        j = stored_index - self.start_index
        if j < 0:
            raise IndexError("stored index precedes the solution window")
        return self.values[j]

    def nodal(self, stored_index: int) -> np.ndarray:
        vals = self.raw(stored_index)
        snap = self.snapshot(stored_index)
        if isinstance(snap.geometry, RoundSphere):
            return snap.geometry.basis.nodal(vals)
        return vals

    def field(self, stored_index: int) -> GridField:
        return GridField(self.trajectory.key, self.raw(stored_index))


def _positivity_flags(values_nodal_iter, positive_data: bool) -> tuple[int, ...]:
    if not positive_data:
        return ()
    flags = []
    for idx, vals in values_nodal_iter:
        m = float(np.max(np.abs(vals)))
        if m > 0 and float(np.min(vals)) < -_POSITIVITY_TOL * m:
            flags.append(idx)
    return tuple(flags)


# ---------------------------------------------------------------------------
# sphere per-mode machinery


def _sphere_mode_integral(traj: FlowTrajectory, ia: int, ib: int) -> float:
    """int_{t_a}^{t_b} dt / r^2(t) in closed form along the trajectory."""
    a, b = traj.snapshots[ia].geometry, traj.snapshots[ib].geometry
    ta, tb = traj.times[ia], traj.times[ib]
    if traj.is_static():
        return (tb - ta) / a.radius_sq
    n = a.dim
    return math.log(a.radius_sq / b.radius_sq) / (2.0 * (n - 1))


def _solve_sphere_heat(traj: FlowTrajectory, coeffs0: np.ndarray, i0: int) -> np.ndarray:
    geo = traj.snapshots[0].geometry
    lam = geo.basis.lam[: coeffs0.shape[0]]
    out = np.empty((traj.n_stored - i0, coeffs0.shape[0]))
    out[0] = coeffs0
    for j in range(1, out.shape[0]):
        s = _sphere_mode_integral(traj, i0 + j - 1, i0 + j)
        out[j] = out[j - 1] * np.exp(-lam * s)
    return out


def _solve_sphere_conjugate(traj: FlowTrajectory, coeffs_final: np.ndarray, substeps: int) -> np.ndarray:
    """RK4 in reversed time on d u_l/ds = -(R(s) + lam_l / r^2(s)) u_l."""
    geo = traj.snapshots[0].geometry
    n = geo.dim
    lam = geo.basis.lam[: coeffs_final.shape[0]]
    times = traj.times
    t_end = times[-1]

    def r2_at(t: float) -> float:
        if traj.is_static():
            return geo.radius_sq
        return traj.snapshots[0].geometry.radius_sq - 2.0 * (n - 1) * t

    def rate(t: float) -> np.ndarray:
        r2 = r2_at(t)
        return -(n * (n - 1) / r2 + lam / r2)

    out = np.empty((traj.n_stored, coeffs_final.shape[0]))
    out[-1] = coeffs_final
    for j in range(traj.n_stored - 1, 0, -1):
        u = out[j]
        ta, tb = times[j], times[j - 1]
        ds = (ta - tb) / substeps
        s = 0.0
        for _ in range(substeps):
            t0 = ta - s
            k1 = rate(t0) * u
            k2 = rate(t0 - 0.5 * ds) * (u + 0.5 * ds * k1)
            k3 = rate(t0 - 0.5 * ds) * (u + 0.5 * ds * k2)
            k4 = rate(t0 - ds) * (u + ds * k3)
            u = u + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            s += ds
        out[j - 1] = u
    return out


# ---------------------------------------------------------------------------
# torus machinery


def _torus_is_flat_static(traj: FlowTrajectory) -> bool:
    geo = traj.snapshots[0].geometry
    return traj.is_static() and isinstance(geo, ConformalTorus2D) and geo.is_flat()


def _flat_symbol(geo: ConformalTorus2D) -> np.ndarray:
    grid = geo.grid
    n = geo.grid_size
    kx = 2 * np.pi * np.fft.fftfreq(n, d=grid.h)
    ky = 2 * np.pi * np.fft.rfftfreq(n, d=grid.h)
    k2 = kx[:, None] ** 2 + ky[None, :] ** 2
    return -np.exp(-2.0 * float(geo.phi[0, 0])) * k2


def _solve_flat_exact(traj: FlowTrajectory, u0: np.ndarray, i0: int, backward: bool) -> np.ndarray:
    """Exact Fourier evolution on a flat static torus (both directions)."""
    geo = traj.snapshots[0].geometry
    sym = _flat_symbol(geo)
    u0hat = np.fft.rfft2(u0)
    times = traj.times
    if not backward:
        steps = times[i0:] - times[i0]
        out = np.empty((steps.shape[0],) + u0.shape)
        for j, s in enumerate(steps):
            out[j] = np.fft.irfft2(u0hat * np.exp(sym * s), s=u0.shape)
        return out
    steps = times[-1] - times
    out = np.empty((traj.n_stored,) + u0.shape)
    for j, s in enumerate(steps):
        out[j] = np.fft.irfft2(u0hat * np.exp(sym * s), s=u0.shape)
    return out


def _torus_heat_substeps(traj: FlowTrajectory, cfl_safety: float) -> int:
    geo0 = traj.snapshots[0].geometry
    grid = geo0.grid
    min_e2p = min(float(np.exp(2.0 * np.min(s.geometry.phi))) for s in traj.snapshots)
    limit = cfl_safety * grid.h**2 * min_e2p / 4.0
    return max(1, math.ceil(traj.dt_store / limit - 1e-12))


def _solve_torus_mol(
    traj: FlowTrajectory,
    u0: np.ndarray,
    i0: int,
    backward: bool,
    with_reaction: bool,
    substeps: int | None,
    cfl_safety: float,
) -> np.ndarray:
    """MOL RK4 for u_t = Lap_g u (forward) or u_s = Lap_g u - R u (reversed).

    The conformal factor is co-integrated with u inside each RK4 step
    (the coupled system (phi, u) is autonomous), resynchronized to the
    stored snapshot at every stored interval.  Stage metrics from the
    flow's own Runge-Kutta cascade keep the semi-discrete frequency
    identities exact to time-integration accuracy; linear interpolation
    at stage times would inject an O(dt^2) metric defect whose constant
    is set by the stiffest conformal mode.
    """
    geo0 = traj.snapshots[0].geometry
    grid = geo0.grid
    nsub = substeps if substeps is not None else _torus_heat_substeps(traj, cfl_safety)
    dt_store = traj.dt_store
    static = traj.is_static()

    def deriv(phi, u, sign):
        inv = np.exp(-2.0 * phi)
        dphi = np.zeros_like(phi) if static else sign * inv * grid.lap_flat(phi)
        du = inv * grid.lap_flat(u)
        if with_reaction:
            du = du + 2.0 * inv * grid.lap_flat(phi) * u  # -R u with R = -2 e^{-2phi} lap phi
        return dphi, du

    def rk4_interval(phi, u, h, sign):
        for _ in range(nsub):
            k1p, k1u = deriv(phi, u, sign)
            k2p, k2u = deriv(phi + 0.5 * h * k1p, u + 0.5 * h * k1u, sign)
            k3p, k3u = deriv(phi + 0.5 * h * k2p, u + 0.5 * h * k2u, sign)
            k4p, k4u = deriv(phi + h * k3p, u + h * k3u, sign)
            phi = phi + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
            u = u + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        return u

    h = dt_store / nsub
    if backward:
        out = np.empty((traj.n_stored,) + u0.shape)
        out[-1] = u0
        for j in range(traj.n_stored - 1, 0, -1):
            phi = traj.snapshots[j].geometry.phi
            out[j - 1] = rk4_interval(phi, out[j], h, sign=-1.0)
        return out
    out = np.empty((traj.n_stored - i0,) + u0.shape)
    out[0] = u0
    for j in range(1, out.shape[0]):
        phi = traj.snapshots[i0 + j - 1].geometry.phi
        out[j] = rk4_interval(phi, out[j - 1], h, sign=+1.0)
    return out


# ---------------------------------------------------------------------------
# public solvers


def solve_heat_forward(
    traj: FlowTrajectory,
    initial: GridField,
    t0: float = 0.0,
    method: str = "auto",
    substeps: int | None = None,
    cfl_safety: float = 0.9,
) -> SolutionField:
    """Solve ``u_t = Lap_{g(t)} u`` from data at stored time t0.

    ``method`` is ``auto`` (exact mode/Fourier paths where available),
    ``mol`` (force the torus RK4 stencil path) or ``exact``.
    """
    if initial.key != traj.key:
        raise ShapeMismatchError("initial data on a different geometry")
    i0 = traj.index_of_time(t0)
    geo = traj.snapshots[0].geometry
    tag = "static_heat" if traj.is_static() else "heat"
    if isinstance(geo, RoundSphere):
        values = _solve_sphere_heat(traj, np.asarray(initial.values, dtype=float), i0)
        sol = SolutionField(traj, tag, values, i0)
        return sol
    flat_exact = _torus_is_flat_static(traj) and method in ("auto", "exact")
    if method == "exact" and not flat_exact:
        raise ConfigurationError("exact torus path requires a flat static trajectory")
    if flat_exact:
        values = _solve_flat_exact(traj, initial.values, i0, backward=False)
    else:
        values = _solve_torus_mol(
            traj, initial.values, i0, backward=False, with_reaction=False,
            substeps=substeps, cfl_safety=cfl_safety,
        )
    positive = bool(np.min(initial.values) > 0)
    flags = _positivity_flags(
        ((i0 + j, values[j]) for j in range(values.shape[0])), positive
    )
    return SolutionField(traj, tag, values, i0, flags)


def solve_conjugate_backward(
    traj: FlowTrajectory,
    final: GridField,
    method: str = "auto",
    substeps: int | None = None,
    cfl_safety: float = 0.9,
) -> SolutionField:
    """Solve ``u_t + Lap u = R u`` backward from data at t = T.

    Integration runs in reversed time ``s = T - t`` where the equation
    is a forward heat equation with reaction ``-R u``; there is no
    forward-in-time entry point for this equation.
    """
    if final.key != traj.key:
        raise ShapeMismatchError("final data on a different geometry")
    geo = traj.snapshots[0].geometry
    if isinstance(geo, RoundSphere):
        nsub = substeps if substeps is not None else 1
        values = _solve_sphere_conjugate(traj, np.asarray(final.values, dtype=float), nsub)
        return SolutionField(traj, "conjugate_backward", values, 0)
    if _torus_is_flat_static(traj) and method in ("auto", "exact"):
        values = _solve_flat_exact(traj, final.values, 0, backward=True)
    elif method == "exact":
        raise ConfigurationError("exact torus path requires a flat static trajectory")
    else:
        values = _solve_torus_mol(
            traj, final.values, 0, backward=True, with_reaction=True,
            substeps=substeps, cfl_safety=cfl_safety,
        )
    positive = bool(np.min(final.values) > 0)
    flags = _positivity_flags(((j, values[j]) for j in range(values.shape[0])), positive)
    return SolutionField(traj, "conjugate_backward", values, 0, flags)


# ---------------------------------------------------------------------------
# heat kernel approximation


@dataclass(frozen=True)
class KernelApprox:
    """Regularized heat kernel: Gaussian seeded at t_start, then evolved.

    The seed is normalized to unit mass at ``t_start`` and offset by a
    uniform floor of ``floor`` (relative to the seed peak) so that
    logarithmic derivatives stay defined in the far field.  Reported
    quantities must start at ``t_burn = 2 t_start``; ``seed_mass_raw``
    records the un-normalized Gaussian mass for diagnostics.
    """

    solution: SolutionField
    pole: tuple
    t_start: float
    sigma0: float
    floor: float
    seed_mass_raw: float

    @property
    def t_burn(self) -> float:
        return 2.0 * self.t_start

    @property
    def trajectory(self) -> FlowTrajectory:
        return self.solution.trajectory

    def burn_indices(self) -> list[int]:
        traj = self.trajectory
        return [
            i
            for i in self.solution.stored_indices()
            if traj.times[i] >= self.t_burn - 1e-12
        ]


def _min_t_start(traj: FlowTrajectory) -> float:
    geo = traj.snapshots[0].geometry
    if isinstance(geo, ConformalTorus2D):
        cell = geo.grid.h
    else:
        cell = np.pi * geo.radius / geo.mode_cutoff
    return (4.0 * cell) ** 2 / 2.0


def approximate_heat_kernel(
    traj: FlowTrajectory,
    pole=None,
    t_start: float | None = None,
    floor_rel: float | None = None,
    method: str = "auto",
) -> KernelApprox:
    """Seed a Gaussian of variance 2 t_start at the pole and evolve it.

    Default ``t_start`` is ``max(T/1000, resolution minimum)`` snapped
    up to a stored step, where the resolution minimum makes sigma0 span
    four grid cells.  An explicit ``t_start`` below the resolution
    minimum is a configuration error.

    ``floor_rel`` defaults to 0 on the torus (grid values of the
    evolved Gaussian stay safely positive there) and 1e-9 on the
    sphere, where far-field kernel values underflow beneath the mode
    truncation noise and the uniform offset keeps log u defined.
    """
    geo = traj.snapshots[0].geometry
    if floor_rel is None:
        floor_rel = 0.0 if isinstance(geo, ConformalTorus2D) else 1e-9
    t_min = _min_t_start(traj)
    if t_start is None:
        t_start = max(traj.time_horizon / 1000.0, t_min)
        if floor_rel == 0.0 and isinstance(geo, ConformalTorus2D):
            # keep min/max u above the 1e-12 log floor from t_burn = 2 t_start on:
            # far-field ratio is exp(-d_max^2 / (8 t_start))
            d2_max = 2.0 * (geo.period / 2.0) ** 2 * float(np.exp(2.0 * np.max(geo.phi)))
            t_start = max(t_start, d2_max / (8.0 * math.log(1e12)))
    elif t_start < t_min * (1 - 1e-12):
        raise ConfigurationError(
            f"t_start={t_start:.3e} under-resolves sigma0 (needs >= {t_min:.3e})"
        )
    # snap up to the first stored step at or after both the request and t_min
    i0 = int(np.searchsorted(traj.times, max(t_start, t_min) - 1e-15))
    if i0 >= traj.n_stored - 1:
        raise ConfigurationError("t_start too close to the horizon")
    t_start = float(traj.times[i0])  # t_min > 0 guarantees i0 >= 1
    snap = traj.snapshots[i0]
    n = traj.dim
    peak = (4.0 * np.pi * t_start) ** (-n / 2.0)
    if isinstance(geo, ConformalTorus2D):
        if pole is None:
            pole = (0.0, 0.0)
        grid = geo.grid
        # snap the pole to the grid so "value at the pole" is a node
        ix = int(round(pole[0] / grid.h)) % geo.grid_size
        iy = int(round(pole[1] / grid.h)) % geo.grid_size
        pole = (ix * grid.h, iy * grid.h)
        phi_pole = float(snap.geometry.phi[ix, iy])
        dx = np.abs(grid.x - pole[0])
        dy = np.abs(grid.y - pole[1])
        dx = np.minimum(dx, geo.period - dx)
        dy = np.minimum(dy, geo.period - dy)
        d2 = (dx**2 + dy**2) * np.exp(2.0 * phi_pole)
        seed = peak * np.exp(-d2 / (4.0 * t_start))
        mass = integrate_nodal(seed, snap)
        seed = seed / mass
        seed = seed + floor_rel * float(np.max(seed))
        initial = GridField(traj.key, seed)
    else:
        pole = (0.0,)
        basis = snap.geometry.basis
        r = snap.geometry.radius
        theta = np.arccos(np.clip(basis.x, -1.0, 1.0))
        seed_nodal = peak * np.exp(-((r * theta) ** 2) / (4.0 * t_start))
        mass = integrate_nodal(seed_nodal, snap)
        seed_nodal = seed_nodal / mass
        seed_nodal = seed_nodal + floor_rel * float(np.max(seed_nodal))
        coeffs = basis.coeffs(seed_nodal, basis.nmodes)
        # keep the stored representation at the declared cutoff
        coeffs = coeffs[: snap.geometry.mode_cutoff + 1]
        initial = GridField(traj.key, coeffs)
    sol = solve_heat_forward(traj, initial, t0=t_start, method=method)
    kernel = KernelApprox(
        solution=sol,
        pole=tuple(float(p) for p in pole),
        t_start=t_start,
        sigma0=float(np.sqrt(2.0 * t_start)),
        floor=floor_rel * peak / mass,
        seed_mass_raw=float(mass),
    )
    _check_kernel_mass(kernel)
    return kernel


def _check_kernel_mass(kernel: KernelApprox) -> None:
    sol = kernel.solution
    i0 = sol.start_index
    mass = integrate_nodal(sol.nodal(i0), sol.snapshot(i0))
    if abs(mass - 1.0) > 1e-3:
        raise ConfigurationError(f"kernel mass at t_start is {mass:.6f}, not within 1e-3 of 1")


def export_solution(sol: SolutionField, outdir, fmt: str = "csv") -> None:
    """Write per-step field files plus a manifest for a SolutionField."""
    import json
    from pathlib import Path

    from .serialize import write_gridfield, write_gridfield_binary

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    writer = write_gridfield if fmt == "csv" else write_gridfield_binary
    ext = "csv" if fmt == "csv" else "bin"
    for j in range(sol.n_times):
        writer(out / f"step_{sol.start_index + j:06d}.{ext}", sol.trajectory.key, sol.values[j])
    manifest = {
        "format": "ricciflowlab-solution-v1",
        "equation": sol.equation,
        "start_index": sol.start_index,
        "times": [float(t) for t in sol.times],
        "positivity_flags": list(sol.positivity_flags),
        "file_format": fmt,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
