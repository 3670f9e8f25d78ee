"""Correction functions for the matrix estimates and frequency weights.

All functions are evaluated with analytic derivatives so that their
defining ODEs / differential inequalities can be checked to rounding:

* ``correction_c``: c(t) = kappa / (1 - exp(-2 kappa t)), the sharp
  Hessian correction for heat solutions when sec >= 0 and Ric <= kappa g;
  solves c' = -2 c^2 + 2 kappa c and is squeezed strictly between
  1/(2t) and 1/(2t) + kappa.  kappa = 0 returns the limit 1/(2t).
* ``beta_general``: beta(t, n, K) = 4 sqrt(n K t) + C2 (K+1) t
  + C1 sqrt(K) diam, the correction exponent for general compact flows
  with |sec| <= K (C1, C2 are unspecified numerical constants, kept as
  configuration and only ever fitted, never asserted).
* ``gamma_static``: the diameter-explicit correction of the improved
  static Hamilton estimate with |sec| <= K, |grad Ric| <= L.
* ``eta_correction``: upper corrections for the conjugate-equation
  matrix estimate; the ``explicit`` variant
  kappa/(1-exp(-2 kappa (T-t))) + sqrt(kappa/(2t)) satisfies the
  differential inequality eta' <= 2 eta^2 - 2 kappa eta - kappa/t, and
  the ``ancient`` variant kappa/(1-exp(-2 kappa (T-t))) solves
  eta' = 2 eta^2 - 2 kappa eta with equality.
* ``c_one``/``c_two``/``power_p``/``z_zero``: the window suprema
  entering the general-flow frequency correction t^p (F + Z0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "correction_c",
    "correction_c_ode_residual",
    "beta_general",
    "gamma_static",
    "eta_correction",
    "eta_inequality_margin",
    "eta_ode_residual",
    "c_one",
    "c_two",
    "power_p",
    "z_zero",
    "CorrectionProfile",
    "DEFAULT_CONSTANTS",
]

# C1..C3 and c_n are unspecified numerical/dimensional constants of the
# source estimates; v0 is the initial-metric non-collapsing constant,
# which enters only through those constants.  All are configuration:
# evaluated and fitted, never asserted.
DEFAULT_CONSTANTS = {"C1": 1.0, "C2": 1.0, "C3": 1.0, "c_n": 1.0, "v0": 1.0}


def correction_c(kappa: float, t) -> np.ndarray | float:
    """c(t) = kappa / (1 - exp(-2 kappa t)); limit 1/(2t) at kappa = 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("correction_c requires t > 0")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa == 0.0:
        out = 1.0 / (2.0 * t)
    else:
        out = kappa / -np.expm1(-2.0 * kappa * t)
    return float(out) if out.ndim == 0 else out


def correction_c_ode_residual(kappa: float, t) -> np.ndarray | float:
    """|c' + 2 c^2 - 2 kappa c| with the analytic derivative, scale-normalized."""
    t = np.asarray(t, dtype=float)
    c = correction_c(kappa, t)
    if kappa == 0.0:
        cprime = -1.0 / (2.0 * t**2)
    else:
        em = np.exp(-2.0 * kappa * t)
        cprime = -2.0 * kappa**2 * em / (-np.expm1(-2.0 * kappa * t)) ** 2
    resid = np.abs(cprime + 2.0 * c**2 - 2.0 * kappa * c)
    scale = np.abs(cprime) + 2.0 * c**2 + 2.0 * kappa * c
    out = resid / scale
    return float(out) if out.ndim == 0 else out


def beta_general(t, n: int, big_k: float, diam: float, constants=None) -> np.ndarray | float:
    """beta(t, n, K) = 4 sqrt(nKt) + C2 (K+1) t + C1 sqrt(K) diam."""
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    t = np.asarray(t, dtype=float)
    out = (
        4.0 * np.sqrt(n * big_k * t)
        + cst["C2"] * (big_k + 1.0) * t
        + cst["C1"] * math.sqrt(big_k) * diam
    )
    return float(out) if out.ndim == 0 else out


def gamma_static(t, n: int, big_k: float, big_l: float, diam: float, constants=None):
    """Diameter-explicit correction of the improved static matrix estimate.

    gamma = sqrt(nKt (2 + (n-1)Kt))
          + sqrt(C3 (K + L^{2/3}) t (1 + Kt) (1 + K + Kt))
          + (2K (2 + (n-1)Kt) + 1.5 L^{2/3} (1 + (n-1)Kt)) diam

    The full estimate reads
    hess log u + (1/(2t) + (2n-1)K + (sqrt3/2) L^{2/3} + gamma/(2t)) g >= 0.
    """
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    t = np.asarray(t, dtype=float)
    l23 = big_l ** (2.0 / 3.0)
    kt = big_k * t
    term1 = np.sqrt(n * big_k * t * (2.0 + (n - 1) * kt))
    term2 = np.sqrt(cst["C3"] * (big_k + l23) * t * (1.0 + kt) * (1.0 + big_k + kt))
    term3 = (2.0 * big_k * (2.0 + (n - 1) * kt) + 1.5 * l23 * (1.0 + (n - 1) * kt)) * diam
    out = term1 + term2 + term3
    return float(out) if out.ndim == 0 else out


def static_hamilton_required(t, n: int, big_k: float, big_l: float, diam: float, constants=None):
    """The coefficient of g in the improved static estimate (see gamma_static)."""
    t = np.asarray(t, dtype=float)
    gam = gamma_static(t, n, big_k, big_l, diam, constants)
    out = 1.0 / (2.0 * t) + (2 * n - 1) * big_k + (math.sqrt(3.0) / 2.0) * big_l ** (2.0 / 3.0) + gam / (2.0 * t)
    return float(out) if out.ndim == 0 else out


def eta_correction(kappa: float, t, horizon: float, variant: str):
    """eta(t) for the conjugate matrix estimate on (0, T).

    ``explicit``: kappa/(1 - e^{-2 kappa (T-t)}) + sqrt(kappa / (2t)).
    ``ancient``:  kappa/(1 - e^{-2 kappa (T-t)}).
    kappa = 0 returns the flat limit 1/(2 (T-t)) for both variants.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t >= horizon):
        raise ValueError("eta requires 0 < t < T")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if kappa == 0.0:
        tail = 1.0 / (2.0 * (horizon - t))
    else:
        tail = kappa / -np.expm1(-2.0 * kappa * (horizon - t))
    if variant == "ancient":
        out = tail
    elif variant == "explicit":
        out = tail + np.sqrt(kappa / (2.0 * t))
    else:
        raise ValueError(f"unknown eta variant {variant!r}")
    return float(out) if out.ndim == 0 else out


def _eta_prime(kappa: float, t, horizon: float, variant: str):
    t = np.asarray(t, dtype=float)
    if kappa == 0.0:
        tail = 1.0 / (2.0 * (horizon - t))
        dtail = 2.0 * tail**2
    else:
        tail = kappa / -np.expm1(-2.0 * kappa * (horizon - t))
        # d/dt [kappa/(1-e^{-2k(T-t)})] = +2 tail^2 - 2 kappa tail
        dtail = 2.0 * tail**2 - 2.0 * kappa * tail
    if variant == "ancient" or kappa == 0.0:
        return dtail
    s = np.sqrt(kappa / (2.0 * t))
    return dtail - s / (2.0 * t)


def eta_inequality_margin(kappa: float, t, horizon: float, variant: str):
    """Margin of eta' <= 2 eta^2 - 2 kappa eta - kappa/t (>= 0 when satisfied).

    For the ancient variant the inequality dropped the kappa/t term and
    holds with equality; there the margin is the (signed) ODE slack of
    eta' <= 2 eta^2 - 2 kappa eta.
    """
    eta = eta_correction(kappa, t, horizon, variant)
    etap = _eta_prime(kappa, t, horizon, variant)
    if variant == "ancient":
        return 2.0 * eta**2 - 2.0 * kappa * eta - etap
    return 2.0 * eta**2 - 2.0 * kappa * eta - kappa / np.asarray(t, dtype=float) - etap


def eta_ode_residual(kappa: float, t, horizon: float):
    """|eta' - 2 eta^2 + 2 kappa eta| / scale for the ancient variant (solves with equality)."""
    eta = eta_correction(kappa, t, horizon, "ancient")
    etap = _eta_prime(kappa, t, horizon, "ancient")
    resid = np.abs(etap - 2.0 * eta**2 + 2.0 * kappa * eta)
    scale = np.abs(etap) + 2.0 * eta**2 + 2.0 * kappa * eta
    out = resid / scale
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# general-flow frequency correction pieces


def c_one(t, n: int, big_k: float, diam: float, constants=None):
    """c1(t) = 1/(2t) + beta(t, n, K)/t."""
    t = np.asarray(t, dtype=float)
    out = 1.0 / (2.0 * t) + beta_general(t, n, big_k, diam, constants) / t
    return float(out) if out.ndim == 0 else out


def c_two(t, n: int, big_k: float, diam: float, constants=None):
    """c2(t) = c_n K [2 (c1 + c_n K) + 2 (c_n / t + K)]."""
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    cn = cst["c_n"]
    t = np.asarray(t, dtype=float)
    c1v = c_one(t, n, big_k, diam, constants)
    out = cn * big_k * (2.0 * (c1v + cn * big_k) + 2.0 * (cn / t + big_k))
    return float(out) if out.ndim == 0 else out


def power_p(window: np.ndarray, n: int, big_k: float, diam: float, constants=None) -> float:
    """p = sup over the window of t * 2 (c1(t) + c_n K)."""
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    t = np.asarray(window, dtype=float)
    vals = t * 2.0 * (c_one(t, n, big_k, diam, constants) + cst["c_n"] * big_k)
    return float(np.max(vals))


def z_zero(window: np.ndarray, n: int, big_k: float, diam: float, constants=None) -> float:
    """Z0 = sup over the window of t * c2(t)."""
    t = np.asarray(window, dtype=float)
    return float(np.max(t * c_two(t, n, big_k, diam, constants)))


@dataclass(frozen=True)
class CorrectionProfile:
    """A named correction curve evaluated on a time window."""

    kind: str
    kappa: float
    big_k: float = 0.0
    big_l: float = 0.0
    diam: float = 0.0
    horizon: float = 0.0
    constants: dict = field(default_factory=dict)

    def values(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "c_kappa":
            return np.asarray(correction_c(self.kappa, t))
        if self.kind == "beta_general":
            return np.asarray(beta_general(t, 2, self.big_k, self.diam, self.constants))
        if self.kind == "gamma_static":
            return np.asarray(gamma_static(t, 2, self.big_k, self.big_l, self.diam, self.constants))
        if self.kind in ("eta_explicit", "eta_ancient"):
            variant = self.kind.removeprefix("eta_")
            return np.asarray(eta_correction(self.kappa, t, self.horizon, variant))
        raise ValueError(f"unknown correction kind {self.kind!r}")
