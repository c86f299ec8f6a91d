"""
Exact ergodic rate of a Rician MIMO link with residual hardware impairments.

The rate is written as an infinite series over the unordered eigenvalue
density of the non-central Wishart matrix W.  Every quantity whose size
scales like ``exp(phi)`` (the matrix Omega, its cofactors, the series
coefficients) is carried as a logarithm and only recombined once the
exponents have cancelled.
"""

from __future__ import annotations

import math

import numpy as np

from . import specfun
from .channel import LosSpectrum, RateCoefficients, SystemConfig, check_distinct, rate_coefficients
from .errors import (ConfigError, DegenerateSpectrum, NoCeiling, NonConvergence,
                     SeriesOverflow, UnsupportedRegime)
from .matrix_core import cofactor_matrix
from .results import RateResult, SeriesDiagnostics

LN2 = math.log(2.0)

MAX_EXACT_P = 8
MAX_EXACT_K = 20.0
DEFAULT_TOL = 1e-6
MAX_SERIES_TERMS = 10000


# ---------------------------------------------------------------------------
# Omega, G and the cofactor weights
# ---------------------------------------------------------------------------
def _log_omega(spectrum: LosSpectrum) -> np.ndarray:
    p, q = spectrum.p, spectrum.q
    out = np.empty((q, q))
    for n, phi in enumerate(spectrum.phi):
        for m in range(1, q + 1):
            L = p - q + m
            lh, _ = specfun.log_hypergeometric((L,), (p - q + 1,), float(phi))
            out[n, m - 1] = math.lgamma(L) + lh
    return out


def omega_matrix(spectrum: LosSpectrum) -> np.ndarray:
    """``Omega[n, m] = Gamma(p-q+m) 1F1(p-q+m; p-q+1; phi_n)`` (0-based indices)."""
    logs = _log_omega(spectrum)
    if np.any(logs > 709.78):
        raise SeriesOverflow("Omega entries exceed double range; use the scaled weights")
    return np.exp(logs)


def ln_g_constant(spectrum: LosSpectrum) -> float:
    """``ln G = -sum(phi) - q ln((p-q)!) - sum_{i<j} ln(phi_j - phi_i)``."""
    phi = spectrum.phi
    p, q = spectrum.p, spectrum.q
    gaps = [phi[j] - phi[i] for i in range(q) for j in range(i + 1, q)]
    if any(g <= 0 for g in gaps):
        raise DegenerateSpectrum("phi must be strictly ascending")
    return -math.fsum(phi) - q * math.lgamma(p - q + 1) - math.fsum(math.log(g) for g in gaps)


def _log_weights(spectrum: LosSpectrum) -> tuple[np.ndarray, np.ndarray]:
    # G * D[n, m] as (log magnitude, sign).  Omega is equilibrated by its row
    # and column maxima before the cofactors are taken; the scale factors are
    # restored in the log domain.
    logs = _log_omega(spectrum)
    r = logs.max(axis=1)
    logs = logs - r[:, None]
    c = logs.max(axis=0)
    scaled = np.exp(logs - c[None, :])
    cof = cofactor_matrix(scaled)
    base = ln_g_constant(spectrum) + r.sum() + c.sum()
    with np.errstate(divide="ignore"):
        logw = base - r[:, None] - c[None, :] + np.log(np.abs(cof))
    return logw, np.sign(cof)


def gd_weights(spectrum: LosSpectrum) -> np.ndarray:
    """Signed products ``G * D[n, m]`` in linear scale."""
    logw, sign = _log_weights(spectrum)
    return sign * np.exp(logw)


# ---------------------------------------------------------------------------
# Series pieces
# ---------------------------------------------------------------------------
def _log_coeffs(spectrum: LosSpectrum, T: int) -> np.ndarray:
    # ln[Gamma(L+k) phi_n^k / (k! (p-q+1)_k)] for L = p-q+m, k = 0..T-1
    p, q = spectrum.p, spectrum.q
    k = np.arange(1, T)
    out = np.empty((q, q, T))
    for n, phi in enumerate(spectrum.phi):
        for m in range(1, q + 1):
            L = p - q + m
            steps = np.log(L + k - 1) + math.log(phi) - np.log(k) - np.log(p - q + k)
            out[n, m - 1, 0] = math.lgamma(L)
            out[n, m - 1, 1:] = math.lgamma(L) + np.cumsum(steps)
    return out


def _scaled_e(x: float, jmax: int) -> np.ndarray:
    if math.isinf(x):
        return np.zeros(jmax)
    return specfun.expint_en_scaled_range(jmax, x)


def _ediff(K: float, a: float, b: float, jmax: int) -> np.ndarray:
    # e^{xa}E_j(xa) - e^{xb}E_j(xb), j = 1..jmax; the b side vanishes when b = 0
    xa = (K + 1.0) / a if a > 0 else math.inf
    xb = (K + 1.0) / b if b > 0 else math.inf
    return _scaled_e(xa, jmax) - _scaled_e(xb, jmax)


def _log_bound(spectrum: LosSpectrum, n: int, m: int, T0: int, ediff1: float) -> float:
    p, q = spectrum.p, spectrum.q
    phi = float(spectrum.phi[n - 1])
    L = p - q + m
    if ediff1 <= 0:
        return -math.inf
    lpre = (math.lgamma(L + T0 + 1) + T0 * math.log(phi) - math.lgamma(T0 + 1)
            - specfun.ln_pochhammer(p - q + 1, T0))
    l2f2, _ = specfun.log_hypergeometric((L + T0 + 1, 1), (T0 + 1, p - q + T0 + 1), phi)
    return lpre + l2f2 + math.log(ediff1)


def _pair(config: SystemConfig, coeffs: RateCoefficients, high_snr: bool) -> tuple[float, float]:
    if high_snr:
        return coeffs.a_inf, coeffs.b_inf
    return coeffs.a, coeffs.b


def truncation_bound(config: SystemConfig, spectrum: LosSpectrum, n: int, m: int, T0: int,
                     coeffs: RateCoefficients | None = None, high_snr: bool = False) -> float:
    """Closed-form bound on the (n, m) series tail starting at term ``T0``.

    The bound replaces every exponential-integral difference of the tail by
    its first-order value and sums the rest as a 2F2 series.  With
    ``high_snr=True`` the limiting coefficients (a', b') are used.  The b
    term is dropped when b = 0.
    """
    if T0 < 1:
        raise ConfigError(f"T0 must be >= 1, got {T0}")
    if not (1 <= n <= spectrum.q and 1 <= m <= spectrum.q):
        raise ConfigError(f"index ({n}, {m}) out of range")
    coeffs = coeffs or rate_coefficients(config)
    a, b = _pair(config, coeffs, high_snr)
    ediff1 = float(_ediff(config.K, a, b, 1)[0])
    lb = _log_bound(spectrum, n, m, T0, ediff1)
    if lb > 709.78:
        raise SeriesOverflow(f"truncation bound overflows (ln = {lb:.6g})")
    return math.exp(lb)


def _bound_matrix(spectrum: LosSpectrum, T0: int, ediff1: float) -> np.ndarray:
    q = spectrum.q
    return np.array([[math.exp(min(_log_bound(spectrum, n, m, T0, ediff1), 709.0))
                      for m in range(1, q + 1)] for n in range(1, q + 1)])


def _prefilter(spectrum: LosSpectrum, T0: int, ediff1: float) -> float:
    # Lower bound of max_{n,m} bound: the 2F2 factor is >= 1 and the
    # largest prefactor sits at m = q.
    p, q = spectrum.p, spectrum.q
    phi = float(spectrum.phi[-1])
    return (math.lgamma(p + T0 + 1) + T0 * math.log(phi) - math.lgamma(T0 + 1)
            - specfun.ln_pochhammer(p - q + 1, T0) + math.log(ediff1))


def _required_terms(spectrum, K, a, b, tol, max_terms=MAX_SERIES_TERMS) -> int:
    ediff1 = float(_ediff(K, a, b, 1)[0])
    if ediff1 <= 0:
        return 1
    ltol = math.log(tol)
    for T0 in range(1, max_terms + 1):
        if _prefilter(spectrum, T0, ediff1) > ltol:
            continue
        worst = max(_log_bound(spectrum, n, m, T0, ediff1)
                    for n in range(1, spectrum.q + 1) for m in range(1, spectrum.q + 1))
        if worst <= ltol:
            return T0
    raise NonConvergence(f"truncation bound stays above {tol} for {max_terms} terms")


def _check_engine(config: SystemConfig, spectrum: LosSpectrum) -> None:
    if config.K <= 0:
        raise UnsupportedRegime("exact engine needs K > 0; use Monte Carlo for Rayleigh fading")
    if config.K > MAX_EXACT_K or config.p > MAX_EXACT_P:
        raise UnsupportedRegime(
            f"exact engine supports p <= {MAX_EXACT_P}, K <= {MAX_EXACT_K:g}; "
            "use the asymptotics module for larger arrays")
    if (spectrum.p, spectrum.q) != (config.p, config.q):
        raise ConfigError("spectrum dimensions do not match the configuration")
    check_distinct(spectrum.phi)


def required_terms(config: SystemConfig, spectrum: LosSpectrum, tol: float = DEFAULT_TOL,
                   high_snr: bool = False) -> int:
    """Smallest ``T0`` with every per-(n, m) truncation bound at most ``tol``."""
    if not tol > 0:
        raise ConfigError("tol must be positive")
    _check_engine(config, spectrum)
    a, b = _pair(config, rate_coefficients(config), high_snr)
    return _required_terms(spectrum, config.K, a, b, tol)


def series_terms(spectrum: LosSpectrum, K: float, a: float, b: float, T: int) -> np.ndarray:
    """Unweighted series terms, shape ``(q, q, T)``.

    Entry ``[n, m, k]`` is ``Gamma(L+k) phi_n^k / (k! (p-q+1)_k)`` times the
    sum of exponential-integral differences of orders ``1 .. L+k``, with
    ``L = p-q+m`` (1-based m).
    """
    lc = _log_coeffs(spectrum, T)
    cum = np.cumsum(_ediff(K, a, b, spectrum.p + T))
    q, p = spectrum.q, spectrum.p
    out = np.empty_like(lc)
    for m in range(1, q + 1):
        L = p - q + m
        out[:, m - 1, :] = np.exp(lc[:, m - 1, :]) * cum[L - 1:L - 1 + T][None, :]
    return out


def _evaluate(spectrum: LosSpectrum, K: float, a: float, b: float, T: int) -> float:
    logw, sign = _log_weights(spectrum)
    lc = _log_coeffs(spectrum, T)
    cum = np.cumsum(_ediff(K, a, b, spectrum.p + T))
    q, p = spectrum.q, spectrum.p
    parts = []
    for n in range(q):
        for m in range(1, q + 1):
            if sign[n, m - 1] == 0:
                continue
            L = p - q + m
            vals = np.exp(logw[n, m - 1] + lc[n, m - 1, :]) * cum[L - 1:L - 1 + T]
            parts.extend((sign[n, m - 1] * vals).tolist())
    return math.fsum(parts) / LN2


def _series_rate(config, spectrum, a, b, tol, method) -> RateResult:
    K = config.K
    ediff1 = float(_ediff(K, a, b, 1)[0])
    if ediff1 <= 0:
        return RateResult(0.0, method, 0.0, SeriesDiagnostics(1, 0.0, True))
    T = _required_terms(spectrum, K, a, b, tol)
    absw = np.abs(gd_weights(spectrum))
    # continue until the weighted tail bound on the rate itself is below tol
    while True:
        rate_bound = float(np.sum(absw * _bound_matrix(spectrum, T, ediff1))) / LN2
        if rate_bound <= tol:
            break
        T += 1
        if T > MAX_SERIES_TERMS:
            raise NonConvergence(f"rate tail bound stays above {tol}")
    rate = _evaluate(spectrum, K, a, b, T)
    return RateResult(max(rate, 0.0), method, rate_bound, SeriesDiagnostics(T, rate_bound, True))


def exact_rate(config: SystemConfig, spectrum: LosSpectrum, tol: float = DEFAULT_TOL) -> RateResult:
    """Exact ergodic rate (bits/s/Hz) from the non-central Wishart series.

    The series is cut at the first ``T0`` where both the per-(n, m) tail
    bound and the cofactor-weighted bound on the rate error drop below
    ``tol``; the latter is reported as the uncertainty.
    """
    if not tol > 0:
        raise ConfigError("tol must be positive")
    if config.rho == 0:
        return RateResult(0.0, "exact_series", 0.0, SeriesDiagnostics(1, 0.0, True))
    _check_engine(config, spectrum)
    c = rate_coefficients(config)
    return _series_rate(config, spectrum, c.a, c.b, tol, "exact_series")


def high_snr_rate(config: SystemConfig, spectrum: LosSpectrum, tol: float = DEFAULT_TOL) -> RateResult:
    """Finite high-SNR ceiling of the impaired link.

    With an ideal receiver (delta_r = 0) the limit is ``q log2(1 + 1/delta_t^2)``.
    """
    if config.delta_t == 0 and config.delta_r == 0:
        raise NoCeiling("ideal hardware: the rate grows without bound in SNR")
    if config.delta_r == 0:
        ceiling = config.q * math.log2(1.0 + 1.0 / config.delta_t ** 2)
        return RateResult(ceiling, "high_snr", 0.0)
    _check_engine(config, spectrum)
    c = rate_coefficients(config)
    return _series_rate(config, spectrum, c.a_inf, c.b_inf, tol, "high_snr")


def eigen_pdf(lam: float, spectrum: LosSpectrum, K: float) -> float:
    """Marginal density of an unordered eigenvalue of W at ``lam``."""
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    if not K > 0:
        raise UnsupportedRegime("the non-central density needs K > 0")
    check_distinct(spectrum.phi)
    p, q = spectrum.p, spectrum.q
    logw, sign = _log_weights(spectrum)
    y = (K + 1.0) * lam
    parts = []
    for n, phi in enumerate(spectrum.phi):
        l0f1, _ = specfun.log_hypergeometric((), (p - q + 1,), y * float(phi))
        for m in range(1, q + 1):
            if sign[n, m - 1] == 0:
                continue
            lt = logw[n, m - 1] - math.log(q * lam) - y + (p - q + m) * math.log(y) + l0f1
            parts.append(sign[n, m - 1] * math.exp(lt))
    return max(math.fsum(parts), 0.0)
