"""Pointwise dense tensor algebra in dimensions 2 and 3.

Symmetric 2-tensors, 4-index curvature tensors with the algebraic
symmetries of a Riemann tensor, generalized eigenvalues with respect to
an SPD metric, and the Harnack quadratic form.

All eigenvalue solves are closed-form (quadratic formula in dim 2,
trigonometric method in dim 3), so the module has no dependency beyond
numpy array arithmetic.  The generalized problem ``Z w = lam g w`` is
reduced by congruence with the Cholesky factor of ``g``, which keeps
the problem symmetric.

Conventions: tensor entries are coordinate components with lower
indices; vectors passed to quadratic forms are contravariant, so no
index raising is needed inside the contractions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SymTensor",
    "CurvTensor",
    "EigenPair",
    "DegenerateMetricError",
    "ShapeMismatchError",
    "AsymmetryError",
    "sym_eigenvalues",
    "generalized_eigenvalues",
    "generalized_eigenvalues_grid",
    "harnack_quadratic",
]

_SYM_RTOL = 1e-8          # asymmetry above this (relative) is an error
_SPD_FLOOR = 1e-12        # smallest admissible metric eigenvalue
_RESID_RTOL = 1e-10       # eigenpair residual contract


class DegenerateMetricError(ValueError):
    """Metric is not positive definite to working tolerance."""


class ShapeMismatchError(ValueError):
    """Tensor arguments do not share a dimension."""


class AsymmetryError(ValueError):
    """Input matrix is asymmetric beyond repairable tolerance."""


def _symmetrize(entries: np.ndarray) -> np.ndarray:
    a = np.asarray(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in (2, 3):
        raise ShapeMismatchError(f"expected a 2x2 or 3x3 matrix, got shape {a.shape}")
    scale = max(float(np.max(np.abs(a))), 1e-300)
    skew = float(np.max(np.abs(a - a.T)))
    if skew > _SYM_RTOL * scale:
        raise AsymmetryError(f"relative asymmetry {skew / scale:.3e} exceeds {_SYM_RTOL:.0e}")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class SymTensor:
    """Symmetric 2-tensor at a point (lower indices).

    Entries are symmetrized on construction; an asymmetry above 1e-8
    relative raises instead of being silently repaired.
    """

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        entries = _symmetrize(self.entries)
        if entries.shape[0] != self.dim:
            raise ShapeMismatchError(f"dim={self.dim} but entries are {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @staticmethod
    def identity(dim: int) -> "SymTensor":
        return SymTensor(dim, np.eye(dim))

    def __add__(self, other: "SymTensor") -> "SymTensor":
        if self.dim != other.dim:
            raise ShapeMismatchError("dimension mismatch in SymTensor addition")
        return SymTensor(self.dim, self.entries + other.entries)

    def scaled(self, c: float) -> "SymTensor":
        return SymTensor(self.dim, c * self.entries)

    def quad(self, w: np.ndarray) -> float:
        """Quadratic form T(w, w) for a contravariant vector w."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise ShapeMismatchError(f"vector shape {w.shape} vs dim {self.dim}")
        return float(w @ self.entries @ w)


def _check_curv_symmetries(r: np.ndarray, bianchi_tol: float) -> None:
    scale = max(float(np.max(np.abs(r))), 1e-300)
    if np.max(np.abs(r + np.swapaxes(r, 0, 1))) > _SYM_RTOL * scale:
        raise AsymmetryError("curvature not antisymmetric in first index pair")
    if np.max(np.abs(r + np.swapaxes(r, 2, 3))) > _SYM_RTOL * scale:
        raise AsymmetryError("curvature not antisymmetric in second index pair")
    if np.max(np.abs(r - np.transpose(r, (2, 3, 0, 1)))) > _SYM_RTOL * scale:
        raise AsymmetryError("curvature not symmetric under pair exchange")
    # first Bianchi: R_{ikjl} + R_{ijlk} + R_{ilkj} = 0 over the last three slots
    bianchi = r + np.transpose(r, (0, 2, 3, 1)) + np.transpose(r, (0, 3, 1, 2))
    if np.max(np.abs(bianchi)) > bianchi_tol * scale:
        raise AsymmetryError("first Bianchi identity violated beyond tolerance")


@dataclass(frozen=True)
class CurvTensor:
    """Riemann-type 4-tensor R_{ikjl} with full algebraic symmetries.

    Index convention: the antisymmetric pairs are (i,k) and (j,l), and
    R_{ikjl} = R_{jlik}.  ``bianchi_tol`` loosens the first-Bianchi
    check for tensors assembled from discretized data.
    """

    dim: int
    entries: np.ndarray
    bianchi_tol: float = 1e-10

    def __post_init__(self):
        r = np.asarray(self.entries, dtype=float)
        if r.shape != (self.dim,) * 4:
            raise ShapeMismatchError(f"curvature entries shape {r.shape} for dim {self.dim}")
        _check_curv_symmetries(r, self.bianchi_tol)
        r = r.copy()
        r.setflags(write=False)
        object.__setattr__(self, "entries", r)

    @staticmethod
    def constant_curvature(g: SymTensor, sec: float, bianchi_tol: float = 1e-10) -> "CurvTensor":
        """R_{ikjl} = sec * (g_ij g_kl - g_il g_kj)."""
        gm = g.entries
        r = sec * (np.einsum("ij,kl->ikjl", gm, gm) - np.einsum("il,kj->ikjl", gm, gm))
        return CurvTensor(g.dim, r, bianchi_tol)


@dataclass(frozen=True)
class EigenPair:
    """Ascending generalized eigenvalues of Z with respect to a metric g."""

    values: np.ndarray
    wrt: SymTensor

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(np.diff(v) < 0):
            raise ValueError("eigenvalues must be ascending")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def min(self) -> float:
        return float(self.values[0])

    @property
    def max(self) -> float:
        return float(self.values[-1])


def sym_eigenvalues(a: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of symmetric 2x2/3x3 matrices, closed form.

    Accepts a stack of matrices with shape (..., d, d); the leading axes
    are preserved.  Dim 2 uses the quadratic formula, dim 3 the
    trigonometric (Cardano) method.
    """
    a = np.asarray(a, dtype=float)
    d = a.shape[-1]
    if d == 2:
        m = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
        disc = np.sqrt((0.5 * (a[..., 0, 0] - a[..., 1, 1])) ** 2 + a[..., 0, 1] ** 2)
        return np.stack([m - disc, m + disc], axis=-1)
    if d == 3:
        q = (a[..., 0, 0] + a[..., 1, 1] + a[..., 2, 2]) / 3.0
        off = a[..., 0, 1] ** 2 + a[..., 0, 2] ** 2 + a[..., 1, 2] ** 2
        dd = (a[..., 0, 0] - q) ** 2 + (a[..., 1, 1] - q) ** 2 + (a[..., 2, 2] - q) ** 2
        p2 = dd + 2.0 * off
        p = np.sqrt(np.maximum(p2, 0.0) / 6.0)
        eye = np.eye(3)
        safe_p = np.where(p > 0, p, 1.0)
        b = (a - q[..., None, None] * eye) / safe_p[..., None, None]
        detb = (
            b[..., 0, 0] * (b[..., 1, 1] * b[..., 2, 2] - b[..., 1, 2] * b[..., 2, 1])
            - b[..., 0, 1] * (b[..., 1, 0] * b[..., 2, 2] - b[..., 1, 2] * b[..., 2, 0])
            + b[..., 0, 2] * (b[..., 1, 0] * b[..., 2, 1] - b[..., 1, 1] * b[..., 2, 0])
        )
        r = np.clip(detb / 2.0, -1.0, 1.0)
        phi = np.arccos(r) / 3.0
        lam_hi = q + 2.0 * p * np.cos(phi)
        lam_lo = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
        lam_mid = 3.0 * q - lam_hi - lam_lo
        return np.stack([lam_lo, lam_mid, lam_hi], axis=-1)
    raise ShapeMismatchError(f"only dims 2 and 3 supported, got {d}")


def _cholesky_small(g: np.ndarray) -> np.ndarray:
    """Cholesky factor of SPD 2x2/3x3 stacks; raises DegenerateMetricError."""
    g = np.asarray(g, dtype=float)
    d = g.shape[-1]
    scale = np.maximum(np.max(np.abs(g), axis=(-2, -1)), 1e-300)
    out = np.zeros_like(g)
    p0 = g[..., 0, 0]
    if np.any(p0 <= _SPD_FLOOR * scale):
        raise DegenerateMetricError("metric pivot 0 not positive")
    out[..., 0, 0] = np.sqrt(p0)
    out[..., 1, 0] = g[..., 1, 0] / out[..., 0, 0]
    p1 = g[..., 1, 1] - out[..., 1, 0] ** 2
    if np.any(p1 <= _SPD_FLOOR * scale):
        raise DegenerateMetricError("metric pivot 1 not positive")
    out[..., 1, 1] = np.sqrt(p1)
    if d == 3:
        out[..., 2, 0] = g[..., 2, 0] / out[..., 0, 0]
        out[..., 2, 1] = (g[..., 2, 1] - out[..., 2, 0] * out[..., 1, 0]) / out[..., 1, 1]
        p2 = g[..., 2, 2] - out[..., 2, 0] ** 2 - out[..., 2, 1] ** 2
        if np.any(p2 <= _SPD_FLOOR * scale):
            raise DegenerateMetricError("metric pivot 2 not positive")
        out[..., 2, 2] = np.sqrt(p2)
    return out


def _solve_lower(lfac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Forward-substitute L x = rhs for stacks of lower-triangular L."""
    d = lfac.shape[-1]
    x = np.zeros_like(rhs)
    x[..., 0, :] = rhs[..., 0, :] / lfac[..., 0, 0, None]
    x[..., 1, :] = (rhs[..., 1, :] - lfac[..., 1, 0, None] * x[..., 0, :]) / lfac[..., 1, 1, None]
    if d == 3:
        x[..., 2, :] = (
            rhs[..., 2, :]
            - lfac[..., 2, 0, None] * x[..., 0, :]
            - lfac[..., 2, 1, None] * x[..., 1, :]
        ) / lfac[..., 2, 2, None]
    return x


def generalized_eigenvalues_grid(z: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of Z w = lam g w over stacks (..., d, d).

    Congruence with the Cholesky factor of g: W = L^{-1} Z L^{-T} is
    symmetric and shares the generalized spectrum.
    """
    z = np.asarray(z, dtype=float)
    g = np.asarray(g, dtype=float)
    if z.shape != g.shape:
        raise ShapeMismatchError(f"Z shape {z.shape} vs g shape {g.shape}")
    lfac = _cholesky_small(g)
    y = _solve_lower(lfac, z)
    w = _solve_lower(lfac, np.swapaxes(y, -2, -1))
    w = 0.5 * (w + np.swapaxes(w, -2, -1))
    return sym_eigenvalues(w)


def generalized_eigenvalues(z: SymTensor, g: SymTensor) -> EigenPair:
    """All eigenvalues of Z relative to SPD g, ascending.

    Raises DegenerateMetricError when g has an eigenvalue below the SPD
    floor.  The returned pair satisfies ``|Z w - lam g w| <= 1e-10 |Z|``
    for the implicit eigenvectors; this is asserted via the residual of
    the characteristic values on the congruence-transformed matrix.
    """
    if z.dim != g.dim:
        raise ShapeMismatchError("Z and g dimensions differ")
    if sym_eigenvalues(g.entries)[0] <= _SPD_FLOOR:
        raise DegenerateMetricError("metric eigenvalue at or below 1e-12")
    vals = generalized_eigenvalues_grid(z.entries, g.entries)
    _check_eigen_residual(z.entries, g.entries, vals)
    return EigenPair(vals, g)


def _check_eigen_residual(z: np.ndarray, g: np.ndarray, vals: np.ndarray) -> None:
    # det(Z - lam g) should vanish for each eigenvalue; scale by |Z - lam g| entries
    zscale = max(float(np.max(np.abs(z))), float(np.max(np.abs(vals))) * float(np.max(np.abs(g))), 1e-300)
    for lam in np.atleast_1d(vals):
        m = z - lam * g
        resid = abs(float(np.linalg.det(m)))
        if resid > 1e-8 * zscale ** m.shape[0]:
            raise ArithmeticError(f"eigenvalue residual {resid:.3e} beyond contract")


def harnack_quadratic(
    m: SymTensor,
    p: np.ndarray,
    rm: CurvTensor,
    v: np.ndarray,
    w: np.ndarray,
    g: SymTensor,
) -> float:
    """Evaluate M(w,w) + 2 P(v,w,w) + Rm(v,w,v,w).

    ``p`` is the 3-index tensor P_{kij} (lower indices), ``v`` and ``w``
    contravariant vectors, so the contraction is
    ``M_ij w^i w^j + 2 P_kij v^k w^i w^j + R_ikjl v^i w^k v^j w^l``.
    ``g`` is carried for the dimension contract and normalization
    conventions of the caller; no raising is needed here.
    """
    d = m.dim
    if rm.dim != d or g.dim != d:
        raise ShapeMismatchError("tensor dimensions differ")
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if p.shape != (d, d, d) or v.shape != (d,) or w.shape != (d,):
        raise ShapeMismatchError("P/v/w shapes inconsistent with dimension")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
        raise ValueError("v, w must be finite")
    term_m = m.quad(w)
    term_p = 2.0 * float(np.einsum("kij,k,i,j->", p, v, w, w))
    term_r = float(np.einsum("ikjl,i,k,j,l->", rm.entries, v, w, v, w))
    return term_m + term_p + term_r
