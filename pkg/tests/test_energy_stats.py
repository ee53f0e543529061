import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from csk_lab.chaos_maps import MapKind
from csk_lab.df_relay_network import ChannelSet, NetworkConfig
from csk_lab.energy_stats import (
    DegenerateSampleError,
    FitError,
    GeneralizedGammaParams,
    collect_alpha,
    compare_candidates,
    fit_ggamma,
    fit_nakagami,
    fit_rayleigh,
    fit_rician,
    ggamma_cdf,
    ggamma_moment,
    ggamma_pdf,
    histogram,
    ks_statistic,
    sample_ggamma,
)


def test_pdf_examples():
    p = GeneralizedGammaParams(v=1, m=1, Omega=1)
    assert ggamma_pdf(1.0, p) == pytest.approx(2 * math.exp(-1))
    assert ggamma_pdf(-0.5, p) == 0.0


@pytest.mark.parametrize("v, m, omega", [(1, 2, 3), (0.3, 12, 10), (2.5, 0.7, 0.5)])
def test_pdf_integrates_to_one_and_matches_cdf(v, m, omega):
    p = GeneralizedGammaParams(v, m, omega)
    total, _ = integrate.quad(lambda a: ggamma_pdf(a, p), 0, np.inf, epsabs=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)
    for q in (0.1, 0.5, 0.9):
        a = float(p.ppf(q))
        area, _ = integrate.quad(lambda t: ggamma_pdf(t, p), 0, a, epsabs=1e-12, limit=200)
        assert area == pytest.approx(float(ggamma_cdf(a, p)), abs=1e-8)
        assert float(ggamma_cdf(a, p)) == pytest.approx(q, abs=1e-10)


def test_moment_examples():
    p = GeneralizedGammaParams(1, 1, 1)
    assert ggamma_moment(2, p) == pytest.approx(1.0)
    assert ggamma_moment(1, p) == pytest.approx(math.sqrt(math.pi) / 2)
    oracle, _ = integrate.quad(lambda a: a * ggamma_pdf(a, p), 0, np.inf)
    assert ggamma_moment(1, p) == pytest.approx(oracle, rel=1e-8)
    with pytest.raises(ValueError):
        ggamma_moment(0, p)


def test_fit_round_trip(rng):
    truth = GeneralizedGammaParams(1, 1, 2)
    fit = fit_ggamma(sample_ggamma(truth, 1_000_000, rng))
    assert fit.v == pytest.approx(1, abs=0.05)
    assert fit.m == pytest.approx(1, abs=0.05)
    assert fit.Omega == pytest.approx(2, rel=0.02)


@settings(max_examples=15, deadline=None)
@given(v=st.floats(0.3, 3), m=st.floats(0.5, 10), seed=st.integers(0, 2**32))
def test_fit_recovers_moments(v, m, seed):
    truth = GeneralizedGammaParams(v, m, 1.0)
    x = sample_ggamma(truth, 20_000, np.random.default_rng(seed))
    fit = fit_ggamma(x)
    for k in (1, 2, 3):
        assert fit.moment(k) == pytest.approx(np.mean(x ** k), rel=1e-6)


def test_fit_preconditions():
    with pytest.raises(DegenerateSampleError):
        fit_ggamma(np.full(2000, 3.0))
    with pytest.raises(FitError):
        fit_ggamma(np.ones(10))


def test_ks_examples(rng):
    p = GeneralizedGammaParams(0.8, 2, 1.5)
    x = sample_ggamma(p, 100_000, rng)
    assert ks_statistic(x, p) < 0.01
    assert ks_statistic(x, p) == pytest.approx(stats.kstest(x, p.cdf).statistic, abs=1e-12)
    assert ks_statistic([float(p.ppf(0.5))], p) == pytest.approx(0.5)
    assert ks_statistic(x * 1.1, p) > ks_statistic(x, p)


def test_candidate_fits_on_their_own_laws(rng):
    ray = stats.rayleigh.rvs(scale=2.0, size=200_000, random_state=rng)
    assert fit_rayleigh(ray).params["Omega"] == pytest.approx(8.0, rel=0.01)
    nak = stats.nakagami.rvs(3.0, scale=1.5, size=200_000, random_state=rng)
    assert fit_nakagami(nak).params["m"] == pytest.approx(3.0, rel=0.03)
    ric = stats.rice.rvs(2.0, scale=1.0, size=200_000, random_state=rng)
    fit = fit_rician(ric)
    # K = nu^2 / (2 sigma^2) = 2
    assert fit.params["K"] == pytest.approx(2.0, rel=0.05)
    assert ks_statistic(ric, fit) < 0.01


def test_collect_alpha_reductions(rng):
    cfg = NetworkConfig(n_relays=0, beta=10)
    a = collect_alpha(cfg, 100_000, rng, channels=ChannelSet.fixed(1.0))
    assert np.mean(a.values) == pytest.approx(10.0, rel=0.02)
    cfg5 = NetworkConfig(n_relays=5, beta=10)
    assert np.mean(collect_alpha(cfg5, 1_000_000, rng).values) == pytest.approx(60.0, rel=0.02)
    with pytest.raises(ValueError):
        collect_alpha(cfg, 0, rng)


def test_comparison_and_histogram(rng):
    cfg = NetworkConfig(n_relays=5, beta=10, map=MapKind.cpf())
    a = collect_alpha(cfg, 100_000, rng)
    cmp = compare_candidates(a)
    assert set(cmp) == {"ggamma", "rayleigh", "rician", "nakagami"}
    assert cmp["ggamma"][1] < min(cmp[k][1] for k in ("rayleigh", "rician", "nakagami"))
    edges, dens = histogram(a)
    assert np.sum(dens * np.diff(edges)) == pytest.approx(1.0)
