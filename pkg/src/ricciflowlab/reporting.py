"""Report types shared by the check modules, plus JSON/CSV emission.

Every verdict-bearing report records the hypothesis certificate chain
it relied on: which curvature hypotheses the geometry family satisfies
analytically.  A report without the required certificate can still be
computed but its verdict is "inconclusive" rather than "holds" --
quantities are always reported, theorems are only *asserted* on
certified inputs.

Verdict tolerance policy: ``max(1e-8, c_tol * (eps_space + eps_time) *
scale)`` with ``c_tol = 10`` by default; both epsilons and the scale
are recorded in the report.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .flow import FlowTrajectory
from .geometry import ConformalTorus2D, RoundSphere

__all__ = [
    "SCHEMA_VERSION",
    "Certificate",
    "HypothesisError",
    "certificate_for",
    "EigenReport",
    "MonotonicityReport",
    "CheckReport",
    "tolerance",
    "discretization_eps",
    "to_jsonable",
    "write_report_json",
]

SCHEMA_VERSION = "1"

VERDICT_HOLDS = "holds"
VERDICT_VIOLATED = "violated"
VERDICT_INCONCLUSIVE = "inconclusive"
VERDICT_INFO = "info"


class HypothesisError(ValueError):
    """Requested check needs hypotheses the geometry does not certify."""


@dataclass(frozen=True)
class Certificate:
    """Curvature hypotheses a geometry family satisfies analytically.

    ``kappa`` is the certified Ricci upper bound constant (0.0 encodes
    the flat kappa -> 0 limit); None means no certified upper bound.
    """

    family: str
    sec_nonneg: bool
    complex_sec_nonneg: bool
    ric_nonneg: bool
    kappa: float | None
    ancient: bool
    static: bool

    def as_dict(self) -> dict:
        return asdict(self)


def certificate_for(traj: FlowTrajectory) -> Certificate:
    """Self-declared hypothesis certificate of a trajectory's geometry family."""
    geo = traj.snapshots[0].geometry
    static = traj.is_static()
    if isinstance(geo, RoundSphere):
        kappa = (geo.dim - 1) / traj.snapshots[-1].geometry.radius_sq
        return Certificate(
            family=f"round_sphere_S{geo.dim}",
            sec_nonneg=True,
            complex_sec_nonneg=True,
            ric_nonneg=True,
            kappa=float(kappa),
            ancient=True,  # the shrinking round sphere extends to an ancient flow
            static=static,
        )
    assert isinstance(geo, ConformalTorus2D)
    if geo.is_flat():
        return Certificate(
            family="flat_torus",
            sec_nonneg=True,
            complex_sec_nonneg=True,
            ric_nonneg=True,
            kappa=0.0,
            ancient=True,
            static=static,
        )
    return Certificate(
        family="bumpy_torus",
        sec_nonneg=False,
        complex_sec_nonneg=False,
        ric_nonneg=False,
        kappa=None,
        ancient=False,
        static=static,
    )


def discretization_eps(traj: FlowTrajectory, tail: float | None = None) -> tuple[float, float]:
    """(eps_space, eps_time) for tolerance scaling.

    Torus space error is h^2; sphere space error is the supplied
    spectral-tail estimate (floored at 1e-14).  Time error is the
    stored-step square.
    """
    geo = traj.snapshots[0].geometry
    eps_time = traj.dt_store**2
    if isinstance(geo, ConformalTorus2D):
        eps_space = geo.grid.h**2
    else:
        eps_space = max(tail if tail is not None else 1e-14, 1e-14)
    return eps_space, eps_time


def spectral_tail(values: np.ndarray) -> float:
    """Relative magnitude of the top two retained modes of coefficient data."""
    v = np.atleast_2d(np.abs(np.asarray(values, dtype=float)))
    peak = float(np.max(v))
    if peak == 0.0:
        return 1e-14
    return max(float(np.max(v[:, -2:])) / peak, 1e-14)


def tolerance(scale: float, eps_space: float, eps_time: float, c_tol: float = 10.0) -> float:
    return max(1e-8, c_tol * (eps_space + eps_time) * scale)


@dataclass(frozen=True)
class EigenReport:
    """Signed-definiteness report for an eigenvalue field over space-time."""

    quantity: str
    verdict: str
    extremal_value: float
    argmin: dict
    per_time: tuple[dict, ...]
    tolerance_used: float
    certificate: Certificate | None
    window: dict
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "verdict": self.verdict,
            "extremal_value": self.extremal_value,
            "argmin": self.argmin,
            "per_time": list(self.per_time),
            "tolerance_used": self.tolerance_used,
            "certificate": self.certificate.as_dict() if self.certificate else None,
            "window": self.window,
            "details": self.details,
        }


@dataclass(frozen=True)
class MonotonicityReport:
    """Forward-difference monotonicity of a corrected time series."""

    quantity: str
    direction: str  # nondecreasing | nonincreasing
    verdict: str
    times: tuple[float, ...]
    corrected: tuple[float, ...]
    forward_differences: tuple[float, ...]
    min_signed_difference: float
    tolerance_used: float
    parameters: dict
    certificate: Certificate | None
    window: dict
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "direction": self.direction,
            "verdict": self.verdict,
            "times": list(self.times),
            "corrected": list(self.corrected),
            "forward_differences": list(self.forward_differences),
            "min_signed_difference": self.min_signed_difference,
            "tolerance_used": self.tolerance_used,
            "parameters": self.parameters,
            "certificate": self.certificate.as_dict() if self.certificate else None,
            "window": self.window,
            "details": self.details,
        }


@dataclass(frozen=True)
class CheckReport:
    """Generic named check result (fit-only reports use verdict='info')."""

    name: str
    verdict: str
    data: dict
    certificate: Certificate | None = None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "data": self.data,
            "certificate": self.certificate.as_dict() if self.certificate else None,
        }


def to_jsonable(obj):
    """Recursively convert reports/arrays to JSON-compatible structures."""
    if hasattr(obj, "as_dict"):
        return to_jsonable(obj.as_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, float) and (np.isnan(obj) or np.isinf(obj)):
        return repr(obj)
    return obj


def write_report_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n")
