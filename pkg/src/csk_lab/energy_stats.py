"""Statistics of the received bit energy alpha.

Samples of alpha are fitted by the generalized gamma law

    p(a) = 2v / ((Omega/m)**m Gamma(m)) * a**(2mv - 1) * exp(-m a**(2v) / Omega)

using the first three moments, and compared against moment-matched
Rayleigh, Rician and Nakagami densities with the Kolmogorov-Smirnov distance.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special, stats

from .chaos_maps import generate_sequences, random_seed_state
from .csk_modem import bit_energies
from .df_relay_network import ChannelSet, NetworkConfig, alpha_values, draw_channel_set

__all__ = [
    "FitError",
    "DegenerateSampleError",
    "FitConvergenceError",
    "GeneralizedGammaParams",
    "AlphaSample",
    "CandidateFit",
    "collect_alpha",
    "ggamma_pdf",
    "ggamma_cdf",
    "ggamma_moment",
    "sample_ggamma",
    "fit_ggamma",
    "fit_rayleigh",
    "fit_nakagami",
    "fit_rician",
    "compare_candidates",
    "ks_statistic",
    "histogram",
    "fit_report",
    "write_fit_report",
    "write_histogram_csv",
]

MIN_FIT_SAMPLES = 1000
_GRID = np.geomspace(0.1, 20.0, 40)


class FitError(ValueError):
    """The sample cannot be fitted."""


class DegenerateSampleError(FitError):
    pass


class FitConvergenceError(FitError):
    pass


@dataclass(frozen=True)
class GeneralizedGammaParams:
    v: float
    m: float
    Omega: float
    fit_ks: float = math.nan
    n_samples: int = 0

    def __post_init__(self):
        for name in ("v", "m", "Omega"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"generalized gamma {name} must be positive, got {value!r}")

    def pdf(self, a):
        return ggamma_pdf(a, self)

    def cdf(self, a):
        return ggamma_cdf(a, self)

    def moment(self, k: float) -> float:
        return ggamma_moment(k, self)

    @property
    def mean(self) -> float:
        return ggamma_moment(1, self)

    def ppf(self, q):
        t = special.gammaincinv(self.m, q)
        return (self.Omega * t / self.m) ** (0.5 / self.v)


@dataclass(frozen=True)
class AlphaSample:
    values: np.ndarray
    config_fingerprint: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("alpha samples must be finite and nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


def _values(samples) -> np.ndarray:
    if isinstance(samples, AlphaSample):
        return samples.values
    return np.asarray(samples, dtype=np.float64).ravel()


def collect_alpha(cfg: NetworkConfig, n_bits: int, rng: np.random.Generator,
                  channels: Optional[ChannelSet] = None,
                  bits_per_orbit: int = 10_000) -> AlphaSample:
    """Draw ``n_bits`` realizations of alpha.

    Bit energies come from consecutive blocks of chaotic orbits, each orbit
    covering ``bits_per_orbit`` bits and started from its own random seed.
    Fading is drawn independently per bit unless ``channels`` is given.
    """
    if n_bits < 1:
        raise ValueError(f"n_bits must be positive, got {n_bits!r}")
    n_orbits = -(-n_bits // bits_per_orbit)
    seeds = [random_seed_state(cfg.map, rng) for _ in range(n_orbits)]
    chips = generate_sequences(cfg.map, seeds, bits_per_orbit * cfg.beta)
    E_b = bit_energies(chips.ravel(), cfg.beta)[:n_bits]
    if channels is None:
        channels = draw_channel_set(cfg, n_bits, rng)
    elif len(channels) == 1:
        channels = ChannelSet(
            np.repeat(channels.h_sd, n_bits),
            np.repeat(channels.h_sr, n_bits, axis=0),
            np.repeat(channels.h_rd, n_bits, axis=0),
        )
    return AlphaSample(alpha_values(channels, cfg.P_s, cfg.P_j, E_b), cfg.fingerprint())


def ggamma_pdf(a, p: GeneralizedGammaParams):
    a = np.asarray(a, dtype=np.float64)
    v, m, omega = p.v, p.m, p.Omega
    log_norm = math.log(2 * v) - m * math.log(omega / m) - special.gammaln(m)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        pos = np.where(a > 0, a, 1.0)
        logpdf = log_norm + (2 * m * v - 1) * np.log(pos) - m * pos ** (2 * v) / omega
        out = np.where(a > 0, np.exp(logpdf), 0.0)
    at_zero = a == 0
    if np.any(at_zero):
        exponent = 2 * m * v - 1
        value = 0.0 if exponent > 0 else (math.exp(log_norm) if exponent == 0 else math.inf)
        out = np.where(at_zero, value, out)
    return out[()] if out.ndim == 0 else out


def ggamma_cdf(a, p: GeneralizedGammaParams):
    a = np.asarray(a, dtype=np.float64)
    with np.errstate(over="ignore"):
        t = p.m * np.maximum(a, 0.0) ** (2 * p.v) / p.Omega
    out = special.gammainc(p.m, t)
    return out[()] if out.ndim == 0 else out


def ggamma_moment(k: float, p: GeneralizedGammaParams) -> float:
    """E[alpha**k] = (Omega/m)**(k/2v) Gamma(m + k/2v) / Gamma(m)."""
    if not k > 0:
        raise ValueError(f"moment order must be positive, got {k!r}")
    s = k / (2 * p.v)
    return math.exp(s * math.log(p.Omega / p.m) + special.gammaln(p.m + s) - special.gammaln(p.m))


def sample_ggamma(p: GeneralizedGammaParams, size, rng: np.random.Generator) -> np.ndarray:
    t = rng.gamma(p.m, p.Omega / p.m, size)
    return t ** (0.5 / p.v)


# -- generalized gamma fit ---------------------------------------------------

def _log_ratios(m, s):
    """log(mu2/mu1^2), log(mu3/mu1^3) for shape m and s = 1/(2v)."""
    g = special.gammaln
    lm, l1 = g(m), g(m + s)
    return g(m + 2 * s) + lm - 2 * l1, g(m + 3 * s) + 2 * lm - 3 * l1


def _jacobian(m, s):
    # d/dlog(m) and d/dlog(v); ds/dlog(v) = -s
    psi = special.digamma
    p0, p1, p2, p3 = psi(m), psi(m + s), psi(m + 2 * s), psi(m + 3 * s)
    return np.array([
        [m * (p2 + p0 - 2 * p1), -s * (2 * p2 - 2 * p1)],
        [m * (p3 + 2 * p0 - 3 * p1), -s * (3 * p3 - 3 * p1)],
    ])


def _solve_shape(r2: float, r3: float, tol: float = 1e-12, max_iter: int = 200):
    target = np.array([r2, r3])

    def residual(theta):
        m, v = np.exp(theta)
        return np.array(_log_ratios(m, 0.5 / v)) - target

    mm, vv = np.meshgrid(_GRID, _GRID, indexing="ij")
    g2, g3 = _log_ratios(mm, 0.5 / vv)
    cost = (g2 - r2) ** 2 + (g3 - r3) ** 2
    starts = np.argsort(cost, axis=None, kind="stable")[:5]

    last = None
    for flat in starts:
        i, j = np.unravel_index(flat, cost.shape)
        theta = np.log([_GRID[i], _GRID[j]])
        F = residual(theta)
        for _ in range(max_iter):
            if np.max(np.abs(F)) < tol:
                m, v = np.exp(theta)
                return float(m), float(v)
            m, v = np.exp(theta)
            try:
                step = -np.linalg.solve(_jacobian(m, 0.5 / v), F)
            except np.linalg.LinAlgError:
                break
            norm = np.max(np.abs(step))
            if norm > 1.0:
                step /= norm
            lam, F_norm = 1.0, np.linalg.norm(F)
            while lam > 1e-6:
                trial = theta + lam * step
                F_trial = residual(trial)
                if np.all(np.isfinite(F_trial)) and np.linalg.norm(F_trial) < F_norm:
                    break
                lam *= 0.5
            else:
                break
            theta, F = trial, F_trial
        last = np.exp(theta)
    raise FitConvergenceError(
        f"moment equations did not converge (log-ratios {r2:.6g}, {r3:.6g}; "
        f"last iterate m, v = {last})"
    )


def fit_ggamma(samples) -> GeneralizedGammaParams:
    """Match the first three moments of the generalized gamma law.

    The two scale-free moment ratios fix (m, v) through a damped Newton
    iteration started from the best point of a 40x40 log grid on
    [0.1, 20]^2; Omega then follows from the mean.
    """
    a = _values(samples)
    if a.size < MIN_FIT_SAMPLES:
        raise FitError(f"need at least {MIN_FIT_SAMPLES} samples, got {a.size}")
    mu1 = float(np.mean(a))
    if not mu1 > 0 or np.all(a == a[0]):
        raise DegenerateSampleError("samples have zero variance")
    x = a / mu1
    x2 = x * x
    r2 = math.log(float(np.mean(x2)))
    r3 = math.log(float(np.mean(x2 * x)))
    if not r2 > 0:
        raise DegenerateSampleError("samples have zero variance")
    m, v = _solve_shape(r2, r3)
    s = 0.5 / v
    omega = m * math.exp((math.log(mu1) + special.gammaln(m) - special.gammaln(m + s)) / s)
    params = GeneralizedGammaParams(v=v, m=m, Omega=omega, n_samples=int(a.size))
    return GeneralizedGammaParams(v, m, omega, ks_statistic(a, params), int(a.size))


# -- candidate families ------------------------------------------------------

@dataclass(frozen=True)
class CandidateFit:
    family: str
    params: dict
    cdf: Callable = field(repr=False)
    pdf: Callable = field(repr=False)


def fit_rayleigh(samples) -> CandidateFit:
    a = _values(samples)
    omega = float(np.mean(a * a))
    return CandidateFit(
        "rayleigh",
        {"Omega": omega},
        cdf=lambda x: -np.expm1(-np.square(np.maximum(x, 0.0)) / omega),
        pdf=lambda x: np.where(np.asarray(x) >= 0, 2 * np.asarray(x) / omega
                               * np.exp(-np.square(x) / omega), 0.0),
    )


def fit_nakagami(samples) -> CandidateFit:
    a = _values(samples)
    a2 = a * a
    omega = float(np.mean(a2))
    m = omega ** 2 / float(np.var(a2))
    p = GeneralizedGammaParams(v=1.0, m=m, Omega=omega)
    return CandidateFit("nakagami", {"m": m, "Omega": omega},
                        cdf=lambda x: ggamma_cdf(x, p), pdf=lambda x: ggamma_pdf(x, p))


def _rician_ratio(K: float) -> float:
    """E[R]^2 / E[R^2] for Rician factor K (pi/4 at K = 0, tends to 1)."""
    y = K / 2
    lag = (1 + K) * special.i0e(y) + K * special.i1e(y)
    return math.pi / (4 * (K + 1)) * lag * lag


def fit_rician(samples) -> CandidateFit:
    """Rician law with the sample mean and mean square, K found by root finding."""
    a = _values(samples)
    omega = float(np.mean(a * a))
    target = float(np.mean(a)) ** 2 / omega
    K_max = 1e6
    if target <= math.pi / 4:
        K = 0.0
    elif target >= _rician_ratio(K_max):
        K = K_max
    else:
        K = optimize.brentq(lambda k: _rician_ratio(k) - target, 0.0, K_max, xtol=1e-12)
    sigma = math.sqrt(omega / (2 * (K + 1)))
    nu = math.sqrt(2 * K) * sigma
    dist = stats.rice(nu / sigma, scale=sigma)
    return CandidateFit("rician", {"K": K, "Omega": omega, "nu": nu, "sigma": sigma},
                        cdf=dist.cdf, pdf=dist.pdf)


def ks_statistic(samples, model) -> float:
    """Sup distance between the empirical CDF of ``samples`` and ``model.cdf``."""
    a = np.sort(_values(samples))
    n = a.size
    if n == 0:
        raise ValueError("cannot compute a KS statistic of an empty sample")
    F = np.asarray(model.cdf(a), dtype=np.float64)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def compare_candidates(samples, ggamma: Optional[GeneralizedGammaParams] = None) -> dict:
    """KS statistic of every candidate family, keyed by family name."""
    a = _values(samples)
    gg = ggamma if ggamma is not None else fit_ggamma(a)
    out = {"ggamma": (gg, ks_statistic(a, gg) if math.isnan(gg.fit_ks) else gg.fit_ks)}
    for fit in (fit_rayleigh(a), fit_rician(a), fit_nakagami(a)):
        out[fit.family] = (fit, ks_statistic(a, fit))
    return out


# -- reports -----------------------------------------------------------------

def histogram(samples) -> tuple[np.ndarray, np.ndarray]:
    """Density histogram with Freedman-Diaconis bin width: (edges, density)."""
    density, edges = np.histogram(_values(samples), bins="fd", density=True)
    return edges, density


def fit_report(samples, cfg: NetworkConfig, comparison: Optional[dict] = None) -> dict:
    a = _values(samples)
    comparison = comparison or compare_candidates(a)
    gg = comparison["ggamma"][0]
    return {
        "map": cfg.map.name,
        "beta": cfg.beta,
        "n_relays": cfg.n_relays,
        "n_samples": int(a.size),
        "v": gg.v,
        "m": gg.m,
        "omega": gg.Omega,
        "ks_ggamma": comparison["ggamma"][1],
        "ks_rayleigh": comparison["rayleigh"][1],
        "ks_rician": comparison["rician"][1],
        "ks_nakagami": comparison["nakagami"][1],
    }


def write_fit_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")


def write_histogram_csv(samples, path) -> None:
    edges, density = histogram(samples)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "density"])
        for lo, hi, d in zip(edges[:-1], edges[1:], density):
            w.writerow([format(lo, ".17g"), format(hi, ".17g"), format(d, ".17g")])
