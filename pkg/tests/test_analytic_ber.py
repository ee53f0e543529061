import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from csk_lab.analytic_ber import (
    BerPoint,
    MgfConvergenceError,
    PadePoleError,
    QuadratureError,
    ber_mgf,
    ber_quadrature,
    conditional_ber,
    mgf_direct,
    mgf_eval,
    mgf_series,
    mgf_series_from_fit,
    mrc_rayleigh_bpsk_ber,
    pade_approximant,
    q_function,
    rayleigh_bpsk_ber,
)
from csk_lab.energy_stats import GeneralizedGammaParams


def test_q_function():
    assert q_function(0.0) == 0.5
    assert q_function(40.0) == 0.0
    oracle, _ = integrate.quad(lambda t: math.exp(-t * t / 2) / math.sqrt(2 * math.pi), 1, np.inf)
    assert q_function(1.0) == pytest.approx(oracle, rel=1e-12)
    assert q_function(1.0) == pytest.approx(0.158655, abs=1e-6)


def test_conditional_ber():
    assert conditional_ber(0.0, 1.0) == 0.5
    assert conditional_ber(0.5, 1.0) == pytest.approx(0.158655, abs=1e-6)
    assert conditional_ber(10.0, 1.0) == pytest.approx(3.87e-6, rel=2e-3)
    with pytest.raises(ValueError):
        conditional_ber(-1.0, 1.0)


def test_mrc_closed_form_reduces_to_single_branch():
    assert mrc_rayleigh_bpsk_ber(3.0, 1) == pytest.approx(rayleigh_bpsk_ber(3.0))
    assert mrc_rayleigh_bpsk_ber(3.0, 4) < mrc_rayleigh_bpsk_ber(3.0, 2)


# With v = 1/2 in the amplitude form, alpha is exponential: the Rayleigh SNR case.
@pytest.mark.parametrize("gamma_bar", [0.5, 1.0, 4.77, 31.6, 100.0])
def test_quadrature_rayleigh_case(gamma_bar):
    p = GeneralizedGammaParams(v=0.5, m=1, Omega=gamma_bar)
    pt = ber_quadrature(p, 1.0)
    assert pt.ber == pytest.approx(rayleigh_bpsk_ber(gamma_bar), abs=1e-6)
    assert pt.method == "quadrature"


def test_quadrature_limits():
    p = GeneralizedGammaParams(v=0.8, m=3, Omega=5)
    assert ber_quadrature(p, 1e12).ber == pytest.approx(0.5, abs=1e-5)
    # A density squeezed around alpha0 approaches the conditional BER there.
    alpha0 = 2.0
    narrow = GeneralizedGammaParams(v=0.5, m=1e5, Omega=alpha0)
    assert ber_quadrature(narrow, 1.0).ber == pytest.approx(conditional_ber(alpha0, 1.0), rel=1e-3)
    with pytest.raises(ValueError):
        ber_quadrature(p, 0.0)


def test_quadrature_against_monte_carlo(rng):
    p = GeneralizedGammaParams(v=0.3, m=13, Omega=10)
    N0 = p.mean / 5.0
    ber = conditional_ber(p.ppf(rng.random(2_000_000)), N0)
    tol = 4 * np.std(ber) / math.sqrt(ber.size)
    assert abs(ber_quadrature(p, N0).ber - np.mean(ber)) < tol


def test_ber_point_validation():
    with pytest.raises(ValueError):
        BerPoint(0.0, 0.7, "quadrature")
    with pytest.raises(ValueError):
        BerPoint(0.0, 0.1, "guess")


def test_series_coefficients_match_moments():
    s = mgf_series(m=2.5, v=0.7, gamma_bar=3.0, n_terms=8)
    # E[gamma^n] / n! computed independently from the Gamma law of gamma**v.
    scale = 3.0 * math.exp(math.lgamma(2.5) - math.lgamma(2.5 + 1 / 0.7))
    for n, c in enumerate(s.coefficients):
        mom = scale ** n * math.exp(math.lgamma(2.5 + n / 0.7) - math.lgamma(2.5))
        assert float(c) == pytest.approx(mom / math.factorial(n), rel=1e-12)
    assert [float(c) for c in s.laplace_coefficients[:3]] == pytest.approx(
        [float(s.coefficients[0]), -float(s.coefficients[1]), float(s.coefficients[2])])


def test_series_from_fit_doubles_shape():
    p = GeneralizedGammaParams(v=0.3, m=13, Omega=10)
    s = mgf_series_from_fit(p, 2.0)
    assert s.v == pytest.approx(0.6) and s.gamma_bar == pytest.approx(p.mean / 2.0)


def test_pade_of_geometric_series_reduces():
    c = [mpmath.mpf(2) ** n for n in range(10)]
    approx = pade_approximant(c, 4, 5)
    assert approx.order == (0, 1) and approx.reduced
    assert float(approx(-1.0)) == pytest.approx(1 / 3)


def test_pade_matches_scipy_on_exponential():
    from scipy.interpolate import pade

    c = [1 / math.factorial(n) for n in range(9)]
    p, q = pade(c, 4)
    approx = pade_approximant(c, 4, 4)
    for x in (-2.0, -0.5, 0.7):
        assert float(approx(x)) == pytest.approx(p(x) / q(x), rel=1e-9)


def test_mgf_eval_sign_convention_and_poles():
    s = mgf_series(1.0, 1.0, 2.0, n_terms=10)
    assert mgf_eval(0.0, s, (4, 5)) == 1.0
    assert mgf_eval(-1.0, s, (4, 5)) == pytest.approx(1 / 3, abs=1e-14)
    half = mgf_series(1.0, 1.0, 0.5, n_terms=10)
    assert mgf_eval(-1.0, half, (4, 5)) == pytest.approx(2 / 3, abs=1e-14)
    assert mgf_direct(-1.0, 1.0, 1.0, 0.5) == pytest.approx(2 / 3, abs=1e-10)
    # pole of 1/(1 - 2 eps) at eps = 1/2
    with pytest.raises(PadePoleError):
        mgf_eval(1.0, s, (4, 5))


@settings(max_examples=10, deadline=None)
@given(m=st.floats(0.8, 20), v=st.floats(0.4, 2.0), eps=st.floats(-3.0, 0.0))
def test_pade_mgf_matches_direct(m, v, eps):
    s = mgf_series(m, v, 1.0)
    assert mgf_eval(eps, s) == pytest.approx(mgf_direct(eps, m, v, 1.0), abs=1e-6)


@pytest.mark.parametrize("gamma_bar", [1e-6, 1.0, 4.77, 100.0])
def test_mgf_route_rayleigh_case(gamma_bar):
    pt = ber_mgf(mgf_series(1.0, 1.0, gamma_bar))
    assert pt.ber == pytest.approx(rayleigh_bpsk_ber(gamma_bar), abs=1e-4)
    assert pt.diagnostics["pade_order"] == [0, 1]


def test_gauss_legendre_angular_integral_against_adaptive(rng):
    from csk_lab import analytic_ber as ab

    for _ in range(10):
        m, v, g = rng.uniform(0.8, 15), rng.uniform(0.5, 1.5), 10 ** rng.uniform(0, 1.5)
        s = mgf_series(m, v, g)
        approx = ab._approximant(s, ab.DEFAULT_PADE)
        gl = ab._ber_from_approx(approx, g)
        adaptive, _ = integrate.quad(
            lambda t: float(approx(-g / math.sin(t) ** 2)) / math.pi, 1e-9, math.pi / 2,
            epsabs=1e-12, limit=200)
        assert gl == pytest.approx(adaptive, abs=1e-8)


@pytest.mark.parametrize("v, m, omega", [(0.29, 13.6, 10.4), (0.45, 4.0, 30.0), (0.8, 2.0, 6.0)])
def test_two_routes_agree(v, m, omega):
    p = GeneralizedGammaParams(v, m, omega)
    for db in range(0, 21, 5):
        N0 = p.mean / 10 ** (db / 10)
        q = ber_quadrature(p, N0, db).ber
        try:
            g = ber_mgf(mgf_series_from_fit(p, N0), eb_n0_db=db).ber
        except MgfConvergenceError:
            continue
        assert abs(q - g) < 1e-3


def test_quadrature_error_carries_estimate():
    err = QuadratureError("x", error_estimate=3.0)
    assert err.error_estimate == 3.0
