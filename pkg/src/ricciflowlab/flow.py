"""Ricci-flow trajectories on the model geometries.

Round spheres evolve exactly (the flow reduces to the radius ODE
``d(r^2)/dt = -2 (n-1)``), the conformal torus is stepped explicitly
with classical RK4 on ``phi_t = exp(-2 phi) lap_flat(phi)`` under a
diffusion CFL guard, and ``static`` trajectories repeat the initial
snapshot for fixed-metric checks.

Snapshots are stored on a uniform grid of ``dt * store_every``;
interpolation between stored snapshots is linear in phi (torus) and in
r^2 (sphere, where it is exact).  Residual checks must sample stored
steps only; interpolated metrics are meant for quadrature and for
Runge-Kutta stage values of the PDE solvers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ConformalTorus2D,
    MetricSnapshot,
    RoundSphere,
    curvature_bundle,
)

__all__ = [
    "FlowConfig",
    "FlowTrajectory",
    "CFLError",
    "HorizonError",
    "torus_cfl_limit",
    "evolve_ricci_flow",
    "ricci_flow_residual",
    "save_trajectory",
    "load_trajectory",
]


class CFLError(ValueError):
    """Time step violates the diffusion CFL bound."""


class HorizonError(ValueError):
    """Requested horizon crosses the sphere extinction time."""


@dataclass(frozen=True)
class FlowConfig:
    """Horizon, step and mode of a flow run.

    ``dt`` is the integration step; snapshots are stored every
    ``store_every`` steps.  The CFL guard for ``numerical_torus`` is
    ``dt <= cfl_safety * h^2 * min(exp(2 phi)) / 4``.
    """

    time_horizon: float
    dt: float
    mode: str  # exact_sphere | numerical_torus | static
    cfl_safety: float = 0.9
    store_every: int = 1

    def __post_init__(self):
        if self.time_horizon <= 0 or self.dt <= 0:
            raise ValueError("time horizon and dt must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.mode not in ("exact_sphere", "numerical_torus", "static"):
            raise ValueError(f"unknown flow mode {self.mode!r}")
        if self.store_every < 1:
            raise ValueError("store_every must be >= 1")


def torus_cfl_limit(geometry: ConformalTorus2D, cfl_safety: float) -> float:
    h = geometry.grid.h
    return cfl_safety * h * h * float(np.exp(2.0 * np.min(geometry.phi))) / 4.0


@dataclass(frozen=True)
class FlowTrajectory:
    """Time-indexed metric snapshots over [0, T] at uniform stored step."""

    mode: str
    times: np.ndarray
    snapshots: tuple[MetricSnapshot, ...]
    dt: float                 # integration step used to produce the snapshots

    def __post_init__(self):
        if len(self.snapshots) != len(self.times):
            raise ValueError("times/snapshots length mismatch")
        t = np.asarray(self.times, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @property
    def key(self) -> tuple:
        return self.snapshots[0].key

    @property
    def dim(self) -> int:
        return self.snapshots[0].dim

    @property
    def time_horizon(self) -> float:
        return float(self.times[-1])

    @property
    def dt_store(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_stored(self) -> int:
        return len(self.times)

    def is_static(self) -> bool:
        return self.mode == "static"

    def index_of_time(self, t: float) -> int:
        i = int(round((t - self.times[0]) / self.dt_store))
        if not 0 <= i < self.n_stored or abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not a stored time")
        return i

    def snapshot_between(self, i: int, frac: float) -> MetricSnapshot:
        """Metric interpolated between stored steps i and i+1.

        Linear in phi on the torus and in r^2 on the sphere (exact for
        the round flow).  ``frac`` in [0, 1].
        """
        if frac == 0.0:
            return self.snapshots[i]
        a = self.snapshots[i]
        b = self.snapshots[min(i + 1, self.n_stored - 1)]
        t = (1 - frac) * a.time + frac * b.time
        if isinstance(a.geometry, RoundSphere):
            r2 = (1 - frac) * a.geometry.radius_sq + frac * b.geometry.radius_sq
            geo = RoundSphere(a.geometry.dim, r2, a.geometry.mode_cutoff)
            return MetricSnapshot(geo, t)
        phi = (1 - frac) * a.geometry.phi + frac * b.geometry.phi
        lap = None
        if a.geometry.phi_lap_flat is not None and b.geometry.phi_lap_flat is not None:
            lap = (1 - frac) * a.geometry.phi_lap_flat + frac * b.geometry.phi_lap_flat
        geo = ConformalTorus2D(a.geometry.grid_size, a.geometry.period, phi, lap)
        return MetricSnapshot(geo, t)

    def kappa_bound(self) -> float:
        """Ricci upper bound over the trajectory: (n-1)/r^2 at the final time.

        Only meaningful on sphere trajectories (the radius shrinks, so
        the bound is attained at T); on a flat torus the bound is 0.
        """
        geo = self.snapshots[-1].geometry
        if isinstance(geo, RoundSphere):
            return (geo.dim - 1) / geo.radius_sq
        if geo.is_flat():
            return 0.0
        raise ValueError("no certified Ricci upper bound on this geometry")


def _sphere_r2(r0_sq: float, dim: int, t: float) -> float:
    return r0_sq - 2.0 * (dim - 1) * t


def evolve_ricci_flow(initial: MetricSnapshot, config: FlowConfig) -> FlowTrajectory:
    """Run the Ricci flow from ``initial`` over [0, T] per ``config``.

    Raises HorizonError when a sphere horizon crosses extinction and
    CFLError when the torus step violates the diffusion bound.  The
    actual step divides T exactly (rounded down from config.dt) and the
    step count is a multiple of ``store_every``.
    """
    geo = initial.geometry
    t_end = config.time_horizon
    n_steps = max(1, math.ceil(t_end / config.dt - 1e-12))
    n_steps = config.store_every * math.ceil(n_steps / config.store_every)
    dt = t_end / n_steps
    n_stored = n_steps // config.store_every + 1
    times = np.arange(n_stored) * (dt * config.store_every)

    if config.mode == "static":
        snaps = tuple(MetricSnapshot(geo, float(t)) for t in times)
        return FlowTrajectory("static", times, snaps, dt)

    if config.mode == "exact_sphere":
        if not isinstance(geo, RoundSphere):
            raise ValueError("exact_sphere mode requires a RoundSphere geometry")
        extinction = geo.radius_sq / (2.0 * (geo.dim - 1))
        if t_end >= extinction:
            raise HorizonError(
                f"horizon T={t_end} crosses extinction at {extinction:.6g}"
            )
        snaps = []
        for t in times:
            r2 = _sphere_r2(geo.radius_sq, geo.dim, float(t))
            snaps.append(MetricSnapshot(RoundSphere(geo.dim, r2, geo.mode_cutoff), float(t)))
        return FlowTrajectory("exact_sphere", times, tuple(snaps), dt)

    if not isinstance(geo, ConformalTorus2D):
        raise ValueError("numerical_torus mode requires a ConformalTorus2D geometry")
    limit = torus_cfl_limit(geo, config.cfl_safety)
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"dt={dt:.3e} exceeds CFL bound {limit:.3e} (h^2 min(e^2phi) cfl/4)")
    grid = geo.grid

    def rhs(phi):
        return np.exp(-2.0 * phi) * grid.lap_flat(phi)

    phi = geo.phi.copy()
    snaps = [MetricSnapshot(ConformalTorus2D(geo.grid_size, geo.period, phi.copy()), 0.0)]
    for step in range(1, n_steps + 1):
        k1 = rhs(phi)
        k2 = rhs(phi + 0.5 * dt * k1)
        k3 = rhs(phi + 0.5 * dt * k2)
        k4 = rhs(phi + dt * k3)
        phi = phi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if dt > config.cfl_safety * grid.h**2 * float(np.exp(2.0 * np.min(phi))) / 4.0:
            raise CFLError(f"CFL bound crossed during evolution at step {step}")
        if step % config.store_every == 0:
            t = step * dt
            snaps.append(
                MetricSnapshot(ConformalTorus2D(geo.grid_size, geo.period, phi.copy()), float(t))
            )
    return FlowTrajectory("numerical_torus", times, tuple(snaps), dt)


def ricci_flow_residual(traj: FlowTrajectory) -> float:
    """Sup over interior stored times of |FD_t(g) + 2 Ric| / |g|.

    The time derivative is a centered difference of metric components
    in the fixed working frame; curvature comes from the snapshot
    bundle, so an exact sphere trajectory scores at rounding level and
    the torus flow scores O(dt^2 + h^2).
    """
    if traj.n_stored < 3:
        raise ValueError("need at least 3 snapshots")
    dt = traj.dt_store
    worst = 0.0
    for i in range(1, traj.n_stored - 1):
        a, b, c = traj.snapshots[i - 1], traj.snapshots[i], traj.snapshots[i + 1]
        bundle = curvature_bundle(b)
        dg = (c.metric_matrices() - a.metric_matrices()) / (2.0 * dt)
        res = dg + 2.0 * bundle.ricci.values
        scale = float(np.max(np.abs(b.metric_matrices())))
        worst = max(worst, float(np.max(np.abs(res))) / scale)
    return worst


# ---------------------------------------------------------------------------
# save / load


def save_trajectory(traj: FlowTrajectory, outdir) -> None:
    """Write a trajectory as manifest.json plus per-snapshot field files."""
    from pathlib import Path

    from .serialize import write_gridfield

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    key = traj.key
    manifest = {
        "format": "ricciflowlab-trajectory-v1",
        "mode": traj.mode,
        "dt": traj.dt,
        "time_horizon": traj.time_horizon,
        "times": [float(t) for t in traj.times],
        "geometry": {"kind": key[0]},
    }
    if key[0] == "torus":
        manifest["geometry"].update({"grid_size": key[1], "period": key[2]})
        for i, snap in enumerate(traj.snapshots):
            write_gridfield(out / f"snapshot_{i:06d}.csv", key, snap.geometry.phi)
    else:
        manifest["geometry"].update({"dim": key[1], "mode_cutoff": key[2]})
        manifest["radius_sq"] = [float(s.geometry.radius_sq) for s in traj.snapshots]
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_trajectory(outdir) -> FlowTrajectory:
    from pathlib import Path

    from .serialize import read_gridfield

    out = Path(outdir)
    manifest = json.loads((out / "manifest.json").read_text())
    if manifest.get("format") != "ricciflowlab-trajectory-v1":
        raise ValueError("unrecognized trajectory manifest")
    times = np.asarray(manifest["times"], dtype=float)
    gspec = manifest["geometry"]
    snaps = []
    if gspec["kind"] == "torus":
        for i, t in enumerate(times):
            _, phi = read_gridfield(out / f"snapshot_{i:06d}.csv")
            geo = ConformalTorus2D(gspec["grid_size"], gspec["period"], phi)
            snaps.append(MetricSnapshot(geo, float(t)))
    else:
        for r2, t in zip(manifest["radius_sq"], times):
            geo = RoundSphere(gspec["dim"], r2, gspec["mode_cutoff"])
            snaps.append(MetricSnapshot(geo, float(t)))
    return FlowTrajectory(manifest["mode"], times, tuple(snaps), float(manifest["dt"]))
