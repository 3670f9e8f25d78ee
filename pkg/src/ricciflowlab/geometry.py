"""Model geometries: conformal 2-torus and round spheres with zonal fields.

Two concrete families back every check in the package:

* ``ConformalTorus2D`` -- metric ``g = exp(2 phi) * flat`` on a uniform
  periodic N x N grid; all spatial operators are centered 2nd-order
  finite differences.
* ``RoundSphere`` -- round S^2 / S^3 with fields restricted to zonal
  (rotationally symmetric) functions expanded in Legendre (n=2) or
  Chebyshev-U / Gegenbauer (n=3) modes; spatial operators act per mode
  and are exact.

Sphere tensor fields are stored in components of the *unit-sphere
orthonormal frame*, which is independent of the evolving radius; the
metric in that frame is ``r^2 I``.  This makes "time derivative in fixed
coordinates" well defined for tensors on a shrinking sphere.  A zonal
function has Hessian frame components ``diag(f'', cot(theta) f')`` on
the unit sphere (divide by r^2 for trace/eigenvalue purposes), both of
which are polynomials in ``x = cos(theta)`` mode by mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .tensors import ShapeMismatchError

__all__ = [
    "ConformalTorus2D",
    "RoundSphere",
    "MetricSnapshot",
    "GridField",
    "SymTensorField",
    "CurvatureBundle",
    "TorusGrid",
    "SphereBasis",
    "geom_key",
    "curvature_bundle",
    "laplace_beltrami",
    "covariant_hessian",
    "integrate",
    "integrate_nodal",
    "distance_proxy",
    "diameter_interval",
    "random_torus_field",
    "random_zonal_coeffs",
]


# ---------------------------------------------------------------------------
# torus grid helper


class TorusGrid:
    """Finite-difference stencils for a uniform periodic grid on [0, P)^2.

    Axis 0 is x, axis 1 is y.  All stencils are centered and 2nd order;
    ``dplus``/``dminus`` are the one-sided differences used to build the
    summation-by-parts compatible gradient energy.
    """

    def __init__(self, n: int, period: float):
        if n < 16 or n % 2 != 0:
            raise ValueError("torus grid size must be even and >= 16")
        if period <= 0:
            raise ValueError("period must be positive")
        self.n = n
        self.period = float(period)
        self.h = self.period / n
        coord = np.arange(n) * self.h
        self.x, self.y = np.meshgrid(coord, coord, indexing="ij")

    def dx(self, f):
        return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2 * self.h)

    def dy(self, f):
        return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * self.h)

    def grad(self, f):
        return np.stack([self.dx(f), self.dy(f)])

    def dxx(self, f):
        return (np.roll(f, -1, axis=0) - 2 * f + np.roll(f, 1, axis=0)) / self.h**2

    def dyy(self, f):
        return (np.roll(f, -1, axis=1) - 2 * f + np.roll(f, 1, axis=1)) / self.h**2

    def dxy(self, f):
        return (
            np.roll(np.roll(f, -1, axis=0), -1, axis=1)
            + np.roll(np.roll(f, 1, axis=0), 1, axis=1)
            - np.roll(np.roll(f, -1, axis=0), 1, axis=1)
            - np.roll(np.roll(f, 1, axis=0), -1, axis=1)
        ) / (4 * self.h**2)

    def lap_flat(self, f):
        """5-point flat Laplacian, 2nd order."""
        return (
            np.roll(f, -1, axis=0)
            + np.roll(f, 1, axis=0)
            + np.roll(f, -1, axis=1)
            + np.roll(f, 1, axis=1)
            - 4 * f
        ) / self.h**2

    def dplus(self, f, axis):
        return (np.roll(f, -1, axis=axis) - f) / self.h

    def dminus(self, f, axis):
        return (f - np.roll(f, 1, axis=axis)) / self.h

    def grad_energy_compatible(self, f, g):
        """Discrete <grad f, grad g> (flat) compatible with lap_flat.

        Averaged forward/backward products; summing this field over the
        grid reproduces ``-sum(f * lap_flat(g))`` exactly, which keeps
        discrete integration by parts exact in the frequency integrals.
        """
        acc = np.zeros_like(f)
        for axis in (0, 1):
            acc += 0.5 * (
                self.dplus(f, axis) * self.dplus(g, axis)
                + self.dminus(f, axis) * self.dminus(g, axis)
            )
        return acc


@lru_cache(maxsize=None)
def _torus_grid(n: int, period: float) -> TorusGrid:
    return TorusGrid(n, period)


# ---------------------------------------------------------------------------
# sphere zonal basis helper


class SphereBasis:
    """Zonal mode tables on the unit n-sphere (n = 2 or 3).

    Modes are Legendre polynomials P_l(x) for n=2 and Chebyshev-U
    (Gegenbauer lambda=1) for n=3, with x = cos(theta).  Quadrature is
    Gauss-Legendre (n=2) respectively Gauss-Chebyshev second kind
    (n=3), with ``nnodes`` chosen large enough that products of three
    fields of mode degree <= L are integrated exactly.

    Tables (shape ``(nmodes, nnodes)``):

    * ``val``   -- B_l(x_k)
    * ``dtheta``-- d/dtheta B_l = -sin(theta) B_l'(x)
    * ``hrad``  -- d^2/dtheta^2 B_l, via the defining ODE
    * ``htan``  -- cot(theta) d/dtheta B_l = -x B_l'(x)

    ``hrad``/``htan`` are the unit-frame Hessian components of a zonal
    mode; their sum with multiplicity reproduces ``-lam_l B_l``.
    """

    def __init__(self, dim: int, cutoff: int):
        if dim not in (2, 3):
            raise ValueError("sphere dimension must be 2 or 3")
        if cutoff < 8:
            raise ValueError("mode cutoff must be >= 8")
        self.dim = dim
        self.cutoff = cutoff
        self.nnodes = 2 * (cutoff + 1)
        m = self.nnodes
        if dim == 2:
            x, w = np.polynomial.legendre.leggauss(m)
        else:
            k = np.arange(1, m + 1)
            x = np.cos(k * np.pi / (m + 1))
            w = np.pi / (m + 1) * np.sin(k * np.pi / (m + 1)) ** 2
            order = np.argsort(x)
            x, w = x[order], w[order]
        self.x = x
        self.w = w
        self.sin_theta = np.sqrt(1.0 - x**2)
        self.cot_theta = x / self.sin_theta
        self.nmodes = m  # full-rank internal mode count (>= cutoff + 1)
        val = np.empty((m, m))
        der = np.empty((m, m))
        val[0] = 1.0
        der[0] = 0.0
        if dim == 2:
            val[1] = x
            der[1] = 1.0
            for l in range(1, m - 1):
                val[l + 1] = ((2 * l + 1) * x * val[l] - l * val[l - 1]) / (l + 1)
                der[l + 1] = der[l - 1] + (2 * l + 1) * val[l]
            ell = np.arange(m)
            self.lam = ell * (ell + 1)
            self.norm = 2.0 / (2 * ell + 1)
        else:
            val[1] = 2 * x
            der[1] = 2.0
            for l in range(1, m - 1):
                val[l + 1] = 2 * x * val[l] - val[l - 1]
                der[l + 1] = 2 * val[l] + 2 * x * der[l] - der[l - 1]
            ell = np.arange(m)
            self.lam = ell * (ell + 2)
            self.norm = np.full(m, np.pi / 2.0)
        self.val = val
        self.dtheta = -self.sin_theta * der
        # f''(theta) per mode, using the Legendre/Gegenbauer ODE:
        #   n=2: x P' - l(l+1) P      n=3: 2x U' - l(l+2) U
        if dim == 2:
            self.hrad = x * der - self.lam[:, None] * val
        else:
            self.hrad = 2 * x * der - self.lam[:, None] * val
        self.htan = -x * der
        # projection matrix: coeffs = proj @ nodal (exact on the node-rank span)
        self.proj = (self.w[None, :] * val) / self.norm[:, None]

    # -- transforms ------------------------------------------------------

    def nodal(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        return coeffs @ self.val[: coeffs.shape[-1]]

    def coeffs(self, values: np.ndarray, nmodes: int | None = None) -> np.ndarray:
        nmodes = self.nmodes if nmodes is None else nmodes
        return np.asarray(values, dtype=float) @ self.proj[:nmodes].T

    def nodal_dtheta(self, values: np.ndarray) -> np.ndarray:
        """d/dtheta of nodal data via full-rank projection."""
        return self.coeffs(values) @ self.dtheta

    def nodal_hessian_parts(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unit-frame Hessian components (f'', cot(theta) f') of nodal data."""
        c = self.coeffs(values)
        return c @ self.hrad, c @ self.htan

    def quad_weight_total(self) -> float:
        return float(np.sum(self.w))


@lru_cache(maxsize=None)
def _sphere_basis(dim: int, cutoff: int) -> SphereBasis:
    return SphereBasis(dim, cutoff)


# ---------------------------------------------------------------------------
# geometries, snapshots, fields


@dataclass(frozen=True)
class ConformalTorus2D:
    """Flat 2-torus of side ``period`` with conformal factor exp(2 phi).

    ``phi_lap_flat`` optionally carries the analytic flat Laplacian of
    phi (from a differentiated formula), giving exact curvature for
    convergence baselines; otherwise curvature falls back to finite
    differences of the stored phi.
    """

    grid_size: int
    period: float
    phi: np.ndarray
    phi_lap_flat: np.ndarray | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.shape != (self.grid_size, self.grid_size):
            raise ShapeMismatchError("phi shape does not match grid size")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi must be finite")
        _torus_grid(self.grid_size, float(self.period))  # validates N, period
        object.__setattr__(self, "phi", phi)

    @property
    def grid(self) -> TorusGrid:
        return _torus_grid(self.grid_size, self.period)

    @property
    def dim(self) -> int:
        return 2

    def is_flat(self, tol: float = 1e-13) -> bool:
        return float(np.max(self.phi) - np.min(self.phi)) <= tol


@dataclass(frozen=True)
class RoundSphere:
    """Round n-sphere of squared radius ``radius_sq`` with zonal modes."""

    dim: int
    radius_sq: float
    mode_cutoff: int

    def __post_init__(self):
        if self.radius_sq <= 0:
            raise ValueError("radius_sq must be positive")
        _sphere_basis(self.dim, self.mode_cutoff)  # validates dim, cutoff

    @property
    def basis(self) -> SphereBasis:
        return _sphere_basis(self.dim, self.mode_cutoff)

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.radius_sq))

    def volume(self) -> float:
        r = self.radius
        return 4 * np.pi * r**2 if self.dim == 2 else 2 * np.pi**2 * r**3


Geometry = ConformalTorus2D | RoundSphere


def geom_key(geometry: Geometry) -> tuple:
    """Resolution identity of a geometry (radius / phi excluded)."""
    if isinstance(geometry, ConformalTorus2D):
        return ("torus", geometry.grid_size, float(geometry.period))
    return ("sphere", geometry.dim, geometry.mode_cutoff)


@dataclass(frozen=True)
class MetricSnapshot:
    """A metric on a model geometry at a fixed time."""

    geometry: Geometry
    time: float

    @property
    def dim(self) -> int:
        return self.geometry.dim

    @property
    def key(self) -> tuple:
        return geom_key(self.geometry)

    def conformal_scalar(self) -> np.ndarray | float:
        """Pointwise factor c with g = c * (identity in working frame)."""
        if isinstance(self.geometry, ConformalTorus2D):
            return np.exp(2.0 * self.geometry.phi)
        return self.geometry.radius_sq

    def metric_matrices(self) -> np.ndarray:
        d = self.dim
        if isinstance(self.geometry, ConformalTorus2D):
            c = np.exp(2.0 * self.geometry.phi)
            return c[..., None, None] * np.eye(d)
        basis = self.geometry.basis
        c = np.full(basis.nnodes, self.geometry.radius_sq)
        return c[:, None, None] * np.eye(d)

    def volume_weights(self) -> np.ndarray:
        """Quadrature weights such that integral(f) = sum(weights * f_nodal)."""
        if isinstance(self.geometry, ConformalTorus2D):
            g = self.geometry.grid
            return np.exp(2.0 * self.geometry.phi) * g.h**2
        basis = self.geometry.basis
        r = self.geometry.radius
        factor = 2 * np.pi * r**2 if self.dim == 2 else 4 * np.pi * r**3
        return factor * basis.w


@dataclass(frozen=True)
class GridField:
    """Scalar field: nodal values on the torus, zonal coefficients on the sphere."""

    key: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        kind = self.key[0]
        if kind == "torus":
            n = self.key[1]
            if v.shape != (n, n):
                raise ShapeMismatchError(f"torus field shape {v.shape}, expected {(n, n)}")
        elif kind == "sphere":
            cutoff = self.key[2]
            if v.ndim != 1 or v.shape[0] > 2 * (cutoff + 1):
                raise ShapeMismatchError("sphere coefficient vector too long for basis")
        else:
            raise ValueError(f"unknown geometry kind {kind!r}")
        object.__setattr__(self, "values", v)

    @staticmethod
    def for_snapshot(snapshot: MetricSnapshot, values: np.ndarray) -> "GridField":
        return GridField(snapshot.key, values)


def _require_same_key(field: GridField, snapshot: MetricSnapshot) -> None:
    if field.key != snapshot.key:
        raise ShapeMismatchError(f"field on {field.key} vs snapshot on {snapshot.key}")


def field_nodal(field: GridField, snapshot: MetricSnapshot) -> np.ndarray:
    """Nodal values of a field (transforms sphere coefficients)."""
    _require_same_key(field, snapshot)
    if isinstance(snapshot.geometry, ConformalTorus2D):
        return field.values
    return snapshot.geometry.basis.nodal(field.values)


@dataclass(frozen=True)
class SymTensorField:
    """Field of symmetric 2-tensors with the pointwise metric attached.

    ``values`` has shape ``grid_shape + (d, d)``: coordinate components
    on the torus, unit-frame components on the sphere (metric r^2 I).
    """

    key: tuple
    values: np.ndarray
    metric: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        """Ascending generalized eigenvalues w.r.t. the metric, per point."""
        from .tensors import generalized_eigenvalues_grid

        return generalized_eigenvalues_grid(self.values, self.metric)

    def trace(self) -> np.ndarray:
        ginv = np.linalg.inv(self.metric)
        return np.einsum("...ij,...ji->...", ginv, self.values)


@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature data of a snapshot.

    Components are in the same working frame as ``SymTensorField``:
    coordinates on the torus, unit frame on the sphere.  ``christoffel``
    (Gamma^k_{ij}, index order (k, i, j)) is only populated on the
    torus; sphere covariant operations use dedicated zonal formulas.
    """

    snapshot: MetricSnapshot
    riemann: np.ndarray          # grid_shape + (d, d, d, d), R_{ikjl}
    ricci: SymTensorField
    scalar: np.ndarray           # grid_shape
    nabla_ricci: np.ndarray      # grid_shape + (d, d, d), (k, i, j) -> nabla_k R_ij
    christoffel: np.ndarray | None

    @property
    def metric(self) -> np.ndarray:
        return self.ricci.metric


# ---------------------------------------------------------------------------
# operations


def curvature_bundle(snapshot: MetricSnapshot) -> CurvatureBundle:
    """Assemble Riemann/Ricci/scalar/grad-Ricci/Christoffel for a snapshot.

    Round sphere: closed forms, R_{ikjl} = r^{-2}(g_ij g_kl - g_il g_kj)
    expressed in unit-frame components, nabla Ric = 0.  Torus: finite
    differences with R = -2 exp(-2 phi) lap_flat(phi).
    """
    geo = snapshot.geometry
    d = snapshot.dim
    eye = np.eye(d)
    if isinstance(geo, RoundSphere):
        basis = geo.basis
        m = basis.nnodes
        r2 = geo.radius_sq
        gmat = r2 * np.broadcast_to(eye, (m, d, d)).copy()
        # unit-frame components: lower-index Riemann scales like r^2 here
        rm_unit = np.einsum("ij,kl->ikjl", eye, eye) - np.einsum("il,kj->ikjl", eye, eye)
        riemann = r2 * np.broadcast_to(rm_unit, (m, d, d, d, d)).copy()
        ricci = SymTensorField(snapshot.key, (d - 1) * np.broadcast_to(eye, (m, d, d)).copy(), gmat)
        scalar = np.full(m, d * (d - 1) / r2)
        nabla_ricci = np.zeros((m, d, d, d))
        return CurvatureBundle(snapshot, riemann, ricci, scalar, nabla_ricci, None)

    grid = geo.grid
    phi = geo.phi
    e2p = np.exp(2.0 * phi)
    gmat = e2p[..., None, None] * eye
    lap_phi = geo.phi_lap_flat if geo.phi_lap_flat is not None else grid.lap_flat(phi)
    scalar = -2.0 * np.exp(-2.0 * phi) * lap_phi
    ricci_mat = 0.5 * scalar[..., None, None] * gmat
    ricci = SymTensorField(snapshot.key, ricci_mat, gmat)
    half_r = 0.5 * scalar
    riemann = half_r[..., None, None, None, None] * (
        np.einsum("...ij,...kl->...ikjl", gmat, gmat)
        - np.einsum("...il,...kj->...ikjl", gmat, gmat)
    )
    christoffel = torus_christoffel(geo)
    nabla_ricci = torus_cov_grad_sym(geo, ricci_mat, christoffel)
    return CurvatureBundle(snapshot, riemann, ricci, scalar, nabla_ricci, christoffel)


def torus_christoffel(geo: ConformalTorus2D) -> np.ndarray:
    """Gamma^k_{ij} of a conformal metric: d_i phi, d_j phi combinations."""
    grid = geo.grid
    dphi = [grid.dx(geo.phi), grid.dy(geo.phi)]
    n = geo.grid_size
    gamma = np.zeros((n, n, 2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                term = 0.0
                if i == k:
                    term = term + dphi[j]
                if j == k:
                    term = term + dphi[i]
                if i == j:
                    term = term - dphi[k]
                gamma[..., k, i, j] = term
    return gamma


def torus_cov_grad_sym(
    geo: ConformalTorus2D, tensor: np.ndarray, christoffel: np.ndarray | None = None
) -> np.ndarray:
    """nabla_k T_ij for a symmetric 2-tensor field on the torus."""
    grid = geo.grid
    if christoffel is None:
        christoffel = torus_christoffel(geo)
    n = geo.grid_size
    out = np.zeros((n, n, 2, 2, 2))
    deriv = [grid.dx, grid.dy]
    for k in range(2):
        for i in range(2):
            for j in range(2):
                val = deriv[k](tensor[..., i, j])
                for l in range(2):
                    val = val - christoffel[..., l, k, i] * tensor[..., l, j]
                    val = val - christoffel[..., l, k, j] * tensor[..., i, l]
                out[..., k, i, j] = val
    return out


def laplace_beltrami(field: GridField, snapshot: MetricSnapshot) -> GridField:
    """Apply the Laplace-Beltrami operator of the snapshot metric.

    Torus: ``exp(-2 phi)`` times the flat 5-point Laplacian.  Sphere:
    multiply mode l by ``-l (l + n - 1) / r^2``.
    """
    _require_same_key(field, snapshot)
    geo = snapshot.geometry
    if isinstance(geo, ConformalTorus2D):
        vals = np.exp(-2.0 * geo.phi) * geo.grid.lap_flat(field.values)
        return GridField(field.key, vals)
    basis = geo.basis
    nm = field.values.shape[0]
    return GridField(field.key, -basis.lam[:nm] / geo.radius_sq * field.values)


def covariant_hessian(field: GridField, snapshot: MetricSnapshot) -> SymTensorField:
    """Covariant Hessian nabla_i nabla_j f as a SymTensorField.

    Torus: centered second differences minus the Christoffel term.
    Sphere: per-mode closed form ``diag(f'', cot(theta) f')`` in the
    unit frame.  The g-trace equals ``laplace_beltrami(field)`` up to
    rounding by construction.
    """
    _require_same_key(field, snapshot)
    geo = snapshot.geometry
    if isinstance(geo, ConformalTorus2D):
        grid = geo.grid
        f = field.values
        dfx, dfy = grid.dx(f), grid.dy(f)
        gamma = torus_christoffel(geo)
        n = geo.grid_size
        h = np.zeros((n, n, 2, 2))
        second = [[grid.dxx(f), grid.dxy(f)], [grid.dxy(f), grid.dyy(f)]]
        df = [dfx, dfy]
        for i in range(2):
            for j in range(2):
                val = second[i][j]
                for k in range(2):
                    val = val - gamma[..., k, i, j] * df[k]
                h[..., i, j] = val
        return SymTensorField(field.key, h, snapshot.metric_matrices())
    basis = geo.basis
    nm = field.values.shape[0]
    rad = field.values @ basis.hrad[:nm]
    tan = field.values @ basis.htan[:nm]
    return SymTensorField(field.key, zonal_diag_tensor(rad, tan, geo.dim), snapshot.metric_matrices())


def zonal_diag_tensor(rad: np.ndarray, tan: np.ndarray, dim: int) -> np.ndarray:
    """Assemble diag(rad, tan, ..., tan) unit-frame matrices per node."""
    m = rad.shape[0]
    out = np.zeros((m, dim, dim))
    out[:, 0, 0] = rad
    for a in range(1, dim):
        out[:, a, a] = tan
    return out


def zonal_tensor_parts(field: SymTensorField) -> tuple[np.ndarray, np.ndarray]:
    """(radial, tangential) diagonal parts of a zonal sphere tensor field."""
    return field.values[:, 0, 0], field.values[:, 1, 1]


def zonal_tensor_laplacian(
    rad: np.ndarray, tan: np.ndarray, basis: SphereBasis, dim: int
) -> tuple[np.ndarray, np.ndarray]:
    """Unit-sphere rough Laplacian of a zonal diagonal 2-tensor.

    For T = diag(A, B, .., B) in the unit frame with m = dim - 1
    tangential directions:

        (Delta T)_rad = A'' + m cot A' - 2 m cot^2 (A - B)
        (Delta T)_tan = B'' + m cot B' + 2 cot^2 (A - B)

    Derivatives in theta are evaluated spectrally via full-rank
    projection of the nodal data.
    """
    m = dim - 1
    ca = basis.coeffs(rad)
    cb = basis.coeffs(tan)
    a1, a2 = ca @ basis.dtheta, ca @ basis.hrad
    b1, b2 = cb @ basis.dtheta, cb @ basis.hrad
    cot = basis.cot_theta
    diff = rad - tan
    lap_rad = a2 + m * cot * a1 - 2.0 * m * cot**2 * diff
    lap_tan = b2 + m * cot * b1 + 2.0 * cot**2 * diff
    return lap_rad, lap_tan


def integrate(field: GridField, snapshot: MetricSnapshot) -> float:
    """Integral of the field against the Riemannian measure of the snapshot."""
    _require_same_key(field, snapshot)
    return integrate_nodal(field_nodal(field, snapshot), snapshot)


def integrate_nodal(values: np.ndarray, snapshot: MetricSnapshot) -> float:
    # numpy's pairwise summation over a fixed layout keeps reductions
    # bit-identical across repeated runs
    return float(np.sum(snapshot.volume_weights() * values))


def distance_proxy(x, y, snapshot: MetricSnapshot) -> tuple[float, float]:
    """Certified distance interval [d_lo, d_hi] between two points.

    Sphere points are polar angles on a common meridian (zonal
    convention), giving the exact great-circle distance r |dtheta|.
    Torus points are (x, y) pairs; the flat minimum over lattice images
    is scaled by exp(min phi) and exp(max phi).
    """
    geo = snapshot.geometry
    if isinstance(geo, RoundSphere):
        d = geo.radius * abs(float(x) - float(y))
        return d, d
    p = geo.period
    dx = abs(x[0] - y[0]) % p
    dy = abs(x[1] - y[1]) % p
    dx = min(dx, p - dx)
    dy = min(dy, p - dy)
    flat = float(np.hypot(dx, dy))
    lo = flat * float(np.exp(np.min(geo.phi)))
    hi = flat * float(np.exp(np.max(geo.phi)))
    return lo, hi


def diameter_interval(snapshot: MetricSnapshot) -> tuple[float, float]:
    """Certified interval for the diameter of the snapshot."""
    geo = snapshot.geometry
    if isinstance(geo, RoundSphere):
        d = np.pi * geo.radius
        return d, d
    flat = geo.period * np.sqrt(2.0) / 2.0
    return flat * float(np.exp(np.min(geo.phi))), flat * float(np.exp(np.max(geo.phi)))


# ---------------------------------------------------------------------------
# seeded smooth random data


def random_torus_field(
    n: int, period: float, rng: np.random.Generator, amplitude: float = 1.0, max_mode: int = 3
) -> np.ndarray:
    """Smooth random trigonometric polynomial with 1/(1+|k|^2) mode decay."""
    grid = _torus_grid(n, float(period))
    out = np.zeros((n, n))
    for kx in range(-max_mode, max_mode + 1):
        for ky in range(-max_mode, max_mode + 1):
            if kx == 0 and ky == 0:
                continue
            amp = amplitude / (1.0 + kx * kx + ky * ky)
            phase = rng.uniform(0, 2 * np.pi)
            coeff = rng.normal() * amp
            out += coeff * np.cos(2 * np.pi * (kx * grid.x + ky * grid.y) / period + phase)
    return out


def random_zonal_coeffs(
    basis: SphereBasis, rng: np.random.Generator, amplitude: float = 0.25, max_mode: int = 3
) -> np.ndarray:
    """Zonal perturbation coefficients with unit-sup normalization per mode.

    The nodal sup of the returned field is at most ``amplitude`` so that
    ``1 + field`` stays strictly positive for amplitude < 1.
    """
    c = np.zeros(basis.cutoff + 1)
    weights = np.array([rng.normal() / (l * l) for l in range(1, max_mode + 1)])
    for l in range(1, max_mode + 1):
        sup = float(np.max(np.abs(basis.val[l])))
        c[l] = weights[l - 1] / sup
    total = float(np.sum(np.abs(c[1 : max_mode + 1]) * [np.max(np.abs(basis.val[l])) for l in range(1, max_mode + 1)]))
    if total > 0:
        c *= amplitude / total
    return c
