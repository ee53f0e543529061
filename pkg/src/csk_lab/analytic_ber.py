"""Analytic BER of the combined link.

Two routes average the conditional error probability Q(sqrt(2 alpha/N0))
over the fitted generalized gamma law of alpha:

* ``ber_quadrature`` integrates directly against the fitted density;
* ``ber_mgf`` uses the power series of the SNR moment generating function,
  summed through a Pade approximant, inside the BPSK angular integral.

The MGF is taken as M(eps) = E[exp(eps * gamma)], so the average BER is
(1/pi) * integral over (0, pi/2) of M(-1/sin^2 theta). If alpha follows the
generalized gamma law with shape v, the SNR gamma = alpha/N0 satisfies
gamma**(2v) ~ Gamma(m); the series below is written for gamma**v ~ Gamma(m),
so a fitted shape v enters it as 2v (see ``mgf_series_from_fit``).
"""

from __future__ import annotations

import functools
import logging
import contextlib
import math
import threading
import warnings
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np
from scipy import integrate, special

from .energy_stats import GeneralizedGammaParams

__all__ = [
    "AnalyticError",
    "QuadratureError",
    "PadeError",
    "PadePoleError",
    "MgfConvergenceError",
    "BerPoint",
    "MgfSeries",
    "PadeApproximant",
    "q_function",
    "conditional_ber",
    "ber_quadrature",
    "mgf_series",
    "mgf_series_from_fit",
    "pade_approximant",
    "mgf_eval",
    "mgf_direct",
    "ber_mgf",
    "rayleigh_bpsk_ber",
    "mrc_rayleigh_bpsk_ber",
]

log = logging.getLogger(__name__)

DEFAULT_TERMS = 40
DEFAULT_PADE = (19, 20)
QUAD_TOL = 1e-8
GL_NODES = 64
MGF_CROSSCHECK_TOL = 1e-4
# absolute slack for Pade tail values of an MGF that is nearly zero there
MGF_RANGE_TOL = 1e-5
_DPS = 80
_RANK_TOL = mpmath.mpf(10) ** (-(_DPS // 2 + 10))
# mpmath keeps its working precision in one process-wide context.
_MP_LOCK = threading.RLock()


@contextlib.contextmanager
def _mp():
    with _MP_LOCK, mpmath.workdps(_DPS):
        yield


class AnalyticError(ArithmeticError):
    """An analytic BER route failed to produce a trustworthy number."""


class QuadratureError(AnalyticError):
    def __init__(self, message, error_estimate=math.nan):
        super().__init__(message)
        self.error_estimate = error_estimate


class PadeError(AnalyticError):
    pass


class PadePoleError(PadeError):
    def __init__(self, message, pole):
        super().__init__(message)
        self.pole = pole


class MgfConvergenceError(AnalyticError):
    pass


@dataclass(frozen=True)
class BerPoint:
    eb_n0_db: float
    ber: float
    method: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in ("quadrature", "mgf_pade", "simulated"):
            raise ValueError(f"unknown BER method {self.method!r}")
        if not 0.0 <= self.ber <= 0.5:
            raise ValueError(f"BER {self.ber!r} outside [0, 0.5]")


def q_function(x):
    """Gaussian tail probability Q(x) = P(Z > x)."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=np.float64) / math.sqrt(2.0))
    return out[()] if np.ndim(out) == 0 else out


def conditional_ber(alpha, N0: float):
    if not N0 > 0:
        raise ValueError(f"N0 must be positive, got {N0!r}")
    alpha = np.asarray(alpha, dtype=np.float64)
    if np.any(alpha < 0):
        raise ValueError("alpha must be nonnegative")
    return q_function(np.sqrt(2.0 * alpha / N0))


def rayleigh_bpsk_ber(gamma_bar):
    """Average BPSK BER over an exponentially distributed SNR with mean gamma_bar."""
    g = np.asarray(gamma_bar, dtype=np.float64)
    out = 0.5 * (1.0 - np.sqrt(g / (1.0 + g)))
    return out[()] if out.ndim == 0 else out


def mrc_rayleigh_bpsk_ber(gamma_branch: float, branches: int) -> float:
    """BPSK BER with MRC over ``branches`` i.i.d. Rayleigh branches."""
    mu = math.sqrt(gamma_branch / (1.0 + gamma_branch))
    lo, hi = (1.0 - mu) / 2.0, (1.0 + mu) / 2.0
    return lo ** branches * sum(
        math.comb(branches - 1 + k, k) * hi ** k for k in range(branches)
    )


# -- direct quadrature -------------------------------------------------------

def ber_quadrature(p: GeneralizedGammaParams, N0: float,
                   eb_n0_db: float = math.nan) -> BerPoint:
    """Average of Q(sqrt(2 alpha/N0)) over the fitted density.

    The half line is mapped onto [0, pi/2) with alpha = mu * tan(u), mu the
    mean of alpha, and split at a few quantiles so adaptive refinement sees
    even very concentrated densities.
    """
    if not N0 > 0:
        raise ValueError(f"N0 must be positive, got {N0!r}")
    mu = p.mean

    def integrand(u):
        t = math.tan(u)
        a = mu * t
        dens = float(p.pdf(a))
        if dens == 0.0:
            return 0.0
        return float(q_function(math.sqrt(2.0 * a / N0))) * dens * mu * (1.0 + t * t)

    cuts = [math.atan(float(p.ppf(q)) / mu) for q in (1e-9, 1e-3, 0.5, 0.999, 1 - 1e-9)]
    bounds = [0.0] + sorted(set(cuts)) + [math.pi / 2]
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi <= lo:
                continue
            val, e = integrate.quad(integrand, lo, hi, epsabs=QUAD_TOL / 10, epsrel=1e-10,
                                    limit=400)
            total += val
            err += e
    if not (np.isfinite(total) and err < QUAD_TOL):
        raise QuadratureError(
            f"quadrature error estimate {err:.3g} exceeds {QUAD_TOL:g}", error_estimate=err
        )
    if not -QUAD_TOL <= total <= 0.5 + QUAD_TOL:
        raise QuadratureError(f"quadrature returned {total!r}", error_estimate=err)
    ber = min(max(total, 0.0), 0.5)
    return BerPoint(eb_n0_db, ber, "quadrature", {"error_estimate": err})


# -- MGF series and Pade -----------------------------------------------------

@dataclass(frozen=True)
class MgfSeries:
    """Taylor series of M(eps) = E[exp(eps * gamma)] where gamma**v ~ Gamma(m).

    ``unit_coefficients[n]`` is E[(gamma/gamma_bar)**n] / n!, independent of
    the mean SNR; the coefficient of eps**n is gamma_bar**n times that.
    """

    m: float
    v: float
    gamma_bar: float
    n_terms: int
    unit_coefficients: tuple = field(repr=False)

    @property
    def coefficients(self) -> tuple:
        with _mp():
            g = mpmath.mpf(self.gamma_bar)
            return tuple(d * g ** n for n, d in enumerate(self.unit_coefficients))

    @property
    def laplace_coefficients(self) -> tuple:
        """Coefficients of E[exp(-s * gamma)] in powers of s."""
        with _mp():
            return tuple((-1) ** n * c for n, c in enumerate(self.coefficients))


@functools.lru_cache(maxsize=256)
def _unit_coefficients(m: float, v: float, n_terms: int) -> tuple:
    with _mp():
        m_, inv_v = mpmath.mpf(m), 1 / mpmath.mpf(v)
        lg_m, lg_1 = mpmath.loggamma(m_), mpmath.loggamma(m_ + inv_v)
        return tuple(
            mpmath.exp(mpmath.loggamma(m_ + n * inv_v) + (n - 1) * lg_m - n * lg_1
                       - mpmath.loggamma(n + 1))
            for n in range(n_terms)
        )


def mgf_series(m: float, v: float, gamma_bar: float, n_terms: int = DEFAULT_TERMS) -> MgfSeries:
    if not (m > 0 and v > 0):
        raise ValueError(f"shape parameters must be positive, got m={m!r}, v={v!r}")
    if not gamma_bar > 0:
        raise ValueError(f"mean SNR must be positive, got {gamma_bar!r}")
    if n_terms < 1:
        raise ValueError("n_terms must be positive")
    return MgfSeries(float(m), float(v), float(gamma_bar), int(n_terms),
                     _unit_coefficients(float(m), float(v), int(n_terms)))


def mgf_series_from_fit(p: GeneralizedGammaParams, N0: float,
                        n_terms: int = DEFAULT_TERMS) -> MgfSeries:
    """Series for gamma = alpha/N0 when alpha follows the fitted law ``p``."""
    return mgf_series(p.m, 2.0 * p.v, p.mean / N0, n_terms)


@dataclass(frozen=True)
class PadeApproximant:
    """[L/M] rational approximant p(x)/q(x) with q(0) = 1."""

    p: tuple
    q: tuple
    requested: tuple

    @property
    def order(self) -> tuple:
        return len(self.p) - 1, len(self.q) - 1

    @property
    def reduced(self) -> bool:
        return self.order != self.requested

    def __call__(self, x):
        with _mp():
            x = mpmath.mpf(x)
            return mpmath.polyval(self.p[::-1], x) / mpmath.polyval(self.q[::-1], x)

    def poles(self) -> np.ndarray:
        return _roots(self.q)

    def zeros(self) -> np.ndarray:
        return _roots(self.p)


def _roots(coeffs) -> np.ndarray:
    c = np.array([float(z) for z in coeffs])
    nz = np.nonzero(c)[0]
    if nz.size == 0 or nz[-1] == 0:
        return np.empty(0, dtype=np.complex128)
    return np.roots(c[: nz[-1] + 1][::-1]).astype(np.complex128)


def pade_approximant(coeffs, L: int, M: int) -> PadeApproximant:
    """Pade approximant of a power series, lowering the order on rank loss.

    When the denominator system is numerically singular the order is reduced
    along the same diagonal to the numerical rank and solved again.
    """
    if L < 0 or M < 1:
        raise ValueError(f"need L >= 0 and M >= 1, got [{L}/{M}]")
    if L + M + 1 > len(coeffs):
        raise ValueError(f"[{L}/{M}] needs {L + M + 1} coefficients, have {len(coeffs)}")
    requested = (L, M)
    with _mp():
        c = [mpmath.mpf(z) for z in coeffs]

        def coef(k):
            return c[k] if k >= 0 else mpmath.mpf(0)

        while M > 0:
            A = mpmath.matrix(M, M)
            for i in range(M):
                for j in range(M):
                    A[i, j] = coef(L + i - j)
            sv = mpmath.svd_r(A, compute_uv=False)
            smax = max(abs(s) for s in sv)
            rank = sum(1 for s in sv if abs(s) > _RANK_TOL * smax) if smax > 0 else 0
            if rank == M:
                rhs = mpmath.matrix([-coef(L + i + 1) for i in range(M)])
                b = mpmath.lu_solve(A, rhs)
                q = [mpmath.mpf(1)] + [b[i] for i in range(M)]
                break
            log.info("Pade [%d/%d] system has rank %d; reducing order", L, M, rank)
            L, M = max(L - (M - rank), 0), rank
        else:
            q = [mpmath.mpf(1)]
        p = [mpmath.fsum(coef(i - j) * q[j] for j in range(min(i, len(q) - 1) + 1))
             for i in range(L + 1)]
    if requested != (L, len(q) - 1):
        log.info("Pade order reduced from [%d/%d] to [%d/%d]", *requested, L, len(q) - 1)
    return PadeApproximant(tuple(p), tuple(q), requested)


@functools.lru_cache(maxsize=256)
def _unit_pade(m: float, v: float, n_terms: int, L: int, M: int) -> PadeApproximant:
    return pade_approximant(_unit_coefficients(m, v, n_terms), L, M)


def _genuine_poles(approx: PadeApproximant, tol: float = 1e-8) -> np.ndarray:
    # Drop pole-zero pairs (Froissart doublets); they carry no residue.
    poles, zeros = approx.poles(), approx.zeros()
    if zeros.size == 0:
        return poles
    keep = [z for z in poles if np.min(np.abs(zeros - z)) > tol * (1.0 + abs(z))]
    return np.array(keep, dtype=np.complex128)


def _check_path(approx: PadeApproximant, x: float, tol: float = 1e-8) -> None:
    """Reject evaluation at or past a pole on the real segment from 0 to x."""
    lo, hi = min(0.0, x), max(0.0, x)
    for z in _genuine_poles(approx):
        near = abs(z - x) <= tol * max(1.0, abs(x))
        crossed = abs(z.imag) <= tol * max(1.0, abs(z)) and lo <= z.real <= hi
        if near or crossed:
            raise PadePoleError(f"Pade approximant has a pole at {z:.6g} (evaluating at {x:.6g})",
                                pole=z)


def _approximant(series: MgfSeries, pade_order) -> PadeApproximant:
    L, M = pade_order
    if L + M + 1 > series.n_terms:
        raise ValueError(f"[{L}/{M}] needs {L + M + 1} terms, series has {series.n_terms}")
    return _unit_pade(series.m, series.v, series.n_terms, int(L), int(M))


def mgf_eval(eps: float, series: MgfSeries, pade_order=DEFAULT_PADE) -> float:
    """Pade-summed MGF at ``eps``; the value at 0 is exactly 1.

    Works in the scaled variable x = gamma_bar * eps, where the coefficients
    do not depend on the mean SNR.
    """
    approx = _approximant(series, pade_order)
    x = series.gamma_bar * float(eps)
    _check_path(approx, x)
    return float(approx(x))


def mgf_direct(eps: float, m: float, v: float, gamma_bar: float) -> float:
    """E[exp(eps * gamma)] by adaptive quadrature over gamma**v ~ Gamma(m)."""
    if eps > 0:
        raise ValueError("direct MGF evaluation is only defined here for eps <= 0")
    scale = gamma_bar * math.exp(special.gammaln(m) - special.gammaln(m + 1.0 / v))
    lg = special.gammaln(m)

    def f(t):
        if t <= 0:
            return 0.0
        return math.exp(eps * scale * t ** (1.0 / v) + (m - 1) * math.log(t) - t - lg)

    val = 0.0
    for lo, hi in ((0.0, m), (m, math.inf)):
        part, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=400)
        val += part
    return val


@functools.lru_cache(maxsize=1)
def _gauss_legendre():
    t, w = np.polynomial.legendre.leggauss(GL_NODES)
    return (t + 1.0) * (math.pi / 4.0), w * (math.pi / 4.0)


def _ber_from_approx(approx: PadeApproximant, gamma_bar: float) -> float:
    theta, w = _gauss_legendre()
    x = -gamma_bar / np.sin(theta) ** 2
    for z in _genuine_poles(approx):
        if abs(z.imag) <= 1e-8 * max(1.0, abs(z)) and z.real <= 0.0:
            raise PadePoleError(f"Pade approximant has a pole at {z:.6g} on the negative axis",
                                pole=z)
    vals = np.array([float(approx(xi)) for xi in x])
    if np.any(vals < -MGF_RANGE_TOL) or np.any(vals > 1.0 + MGF_RANGE_TOL):
        raise MgfConvergenceError("Pade MGF left [0, 1] on the negative axis")
    return float(np.dot(w, vals) / math.pi)


def ber_mgf(series: MgfSeries, pade_order=DEFAULT_PADE,
            eb_n0_db: float = math.nan) -> BerPoint:
    """Average BER from the Pade-summed MGF series.

    The result is cross-checked against lower diagonal orders; disagreement
    beyond 1e-4, a pole on the negative axis or a value outside [0, 0.5]
    raises instead of returning a number.
    """
    approx = _approximant(series, pade_order)
    ber = _ber_from_approx(approx, series.gamma_bar)
    if not 0.0 <= ber <= 0.5:
        raise MgfConvergenceError(f"MGF route produced BER {ber!r} outside [0, 0.5]")

    L, M = pade_order
    check = None
    for k in (1, 2, 3):
        if L - k < 0 or M - k < 1:
            break
        try:
            other = _ber_from_approx(_approximant(series, (L - k, M - k)), series.gamma_bar)
        except AnalyticError:
            continue
        check = (L - k, M - k, abs(other - ber))
        break
    if check is None:
        raise MgfConvergenceError("no lower Pade order available to confirm convergence")
    if check[2] > MGF_CROSSCHECK_TOL:
        raise MgfConvergenceError(
            f"Pade orders [{L}/{M}] and [{check[0]}/{check[1]}] disagree by {check[2]:.3g}"
        )
    return BerPoint(eb_n0_db, ber, "mgf_pade", {
        "terms": series.n_terms,
        "pade_order": list(approx.order),
        "requested_order": [L, M],
        "crosscheck_gap": check[2],
    })
