import numpy as np
import pytest

from ricciflowlab.corrections import (
    beta_general,
    c_one,
    c_two,
    correction_c,
    correction_c_ode_residual,
    eta_correction,
    eta_inequality_margin,
    eta_ode_residual,
    gamma_static,
    power_p,
    static_hamilton_required,
    z_zero,
)


def test_c_arithmetic_spots():
    # kappa=1, t = ln2/2: e^{-2t} = 1/2, c = 2
    assert correction_c(1.0, np.log(2) / 2) == pytest.approx(2.0, abs=1e-14)
    # kappa -> 0 limit at t = 0.5 is 1/(2t) = 1
    assert correction_c(0.0, 0.5) == pytest.approx(1.0, abs=1e-15)
    # kappa=1, t=1: 1/(1-e^{-2})
    assert correction_c(1.0, 1.0) == pytest.approx(1.0 / (1 - np.exp(-2)), rel=1e-14)
    assert correction_c(1.0, 1.0) == pytest.approx(1.156518, abs=1e-6)


def test_c_ode_residual_grid():
    kappas = np.logspace(-3, 1, 20)
    ts = np.linspace(0.05, 10.0, 20)
    for k in kappas:
        assert np.max(correction_c_ode_residual(float(k), ts)) <= 1e-10


def test_c_sandwich_strict_grid():
    kappas = np.logspace(-3, 1, 20)
    ts = np.linspace(0.05, 10.0, 20)
    for k in kappas:
        c = correction_c(float(k), ts)
        assert np.all(c > 1 / (2 * ts))
        assert np.all(c < 1 / (2 * ts) + k)


def test_c_uniform_small_kappa_limit():
    ts = np.linspace(0.01, 5.0, 50)
    for k in (1e-6, 1e-4, 1e-2):
        c = correction_c(k, ts)
        assert np.max(np.abs(c - 1 / (2 * ts))) <= k


def test_c_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        correction_c(1.0, 0.0)
    with pytest.raises(ValueError):
        correction_c(1.0, -0.1)


def test_eta_explicit_spot_value():
    # kappa=1, T=1, t=0.5: 1/(1-e^{-1}) + 1
    val = eta_correction(1.0, 0.5, 1.0, "explicit")
    assert val == pytest.approx(1.0 / (1 - np.exp(-1)) + 1.0, rel=1e-14)
    assert val == pytest.approx(2.581977, abs=1e-6)


def test_eta_ancient_spot_value():
    # same arithmetic as c: t = T - ln2/2 gives 2
    assert eta_correction(1.0, 1.0 - np.log(2) / 2, 1.0, "ancient") == pytest.approx(2.0, abs=1e-13)


def test_eta_explicit_inequality_margin():
    ts = np.linspace(0.01, 0.99, 60)
    for k in (0.3, 1.0, 3.0):
        margin = eta_inequality_margin(k, ts, 1.0, "explicit")
        assert np.min(margin) >= -1e-10


def test_eta_ancient_ode_equality():
    ts = np.linspace(0.01, 0.99, 60)
    for k in (0.3, 1.0, 3.0):
        assert np.max(eta_ode_residual(k, ts, 1.0)) <= 1e-10


def test_eta_blowup_at_horizon():
    for delta in (1e-2, 1e-3, 1e-4, 1e-5):
        assert eta_correction(1.0, 1.0 - delta, 1.0, "ancient") > 1.0 / (4 * delta)


def test_eta_domain_errors():
    with pytest.raises(ValueError):
        eta_correction(1.0, 1.5, 1.0, "explicit")
    with pytest.raises(ValueError):
        eta_correction(1.0, 0.0, 1.0, "ancient")


def test_beta_formula_value():
    # beta = 4 sqrt(nKt) + C2 (K+1) t + C1 sqrt(K) diam
    val = beta_general(0.25, 2, 4.0, 3.0, {"C1": 2.0, "C2": 0.5})
    expect = 4 * np.sqrt(2 * 4 * 0.25) + 0.5 * 5 * 0.25 + 2.0 * 2.0 * 3.0
    assert val == pytest.approx(expect, rel=1e-14)


def test_gamma_static_drops_l_terms():
    no_l = gamma_static(0.1, 2, 1.0, 0.0, 1.0, {"C3": 1.0})
    with_l = gamma_static(0.1, 2, 1.0, 1.0, 1.0, {"C3": 1.0})
    assert with_l > no_l
    req = static_hamilton_required(0.1, 2, 0.0, 0.0, 1.0)
    assert req == pytest.approx(1 / 0.2, rel=1e-14)  # K = L = 0 leaves only 1/(2t)


def test_p_and_z0_are_window_suprema():
    window = np.linspace(0.01, 0.3, 40)
    n, big_k, diam = 2, 1.5, 2.0
    p = power_p(window, n, big_k, diam)
    direct = np.max(window * 2 * (c_one(window, n, big_k, diam) + 1.0 * big_k))
    assert p == pytest.approx(direct, rel=1e-14)
    z0 = z_zero(window, n, big_k, diam)
    direct = np.max(window * c_two(window, n, big_k, diam))
    assert z0 == pytest.approx(direct, rel=1e-14)
