"""
Scalar special functions used by the analytic rate expressions.

Exponential integrals are evaluated in the scaled form ``e^x E_n(x)`` so
that arguments in the thousands never overflow.  Hypergeometric series are
summed with a linear mantissa plus a running log scale, which keeps the
positive-argument series finite even when the value itself is far outside
the double range.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, NonConvergence, SeriesOverflow

EULER_GAMMA = 0.5772156649015329

_FPMIN = 1e-300
_EN_EPS = 1e-16
_EN_MAXIT = 100000
_SERIES_SWITCH = 1.5

# Mantissa rescaling threshold, as an exact power of two.
_RESCALE_BITS = 830
_RESCALE_AT = 2.0 ** _RESCALE_BITS
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class AccuracyPolicy:
    """Series termination controls.

    Parameters
    ----------
    rel_tol : float
        A series stops once three consecutive terms are below
        ``rel_tol`` times the partial sum.
    max_terms : int
        Hard cap on the number of terms.
    """

    rel_tol: float = 1e-12
    max_terms: int = 10000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_POLICY = AccuracyPolicy()


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------
def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def ln_pochhammer(x: float, k: int) -> float:
    """ln of the rising factorial ``(x)_k = Gamma(x+k)/Gamma(x)``."""
    if not x > 0:
        raise DomainError(f"ln_pochhammer requires x > 0, got {x}")
    if k < 0:
        raise DomainError(f"ln_pochhammer requires k >= 0, got {k}")
    if k <= 32:
        # direct log-sum is exact to rounding for short products
        return math.fsum(math.log(x + i) for i in range(k))
    return math.lgamma(x + k) - math.lgamma(x)


# ---------------------------------------------------------------------------
# Exponential integrals
# ---------------------------------------------------------------------------
def _en_series(n: int, x: float) -> float:
    # Unscaled E_n(x) by its power series; valid for small x > 0.
    nm1 = n - 1
    ans = 1.0 / nm1 if nm1 else -math.log(x) - EULER_GAMMA
    fact = 1.0
    for i in range(1, _EN_MAXIT):
        fact *= -x / i
        if i != nm1:
            delta = -fact / (i - nm1)
        else:
            psi = -EULER_GAMMA + math.fsum(1.0 / ii for ii in range(1, nm1 + 1))
            delta = fact * (-math.log(x) + psi)
        ans += delta
        if abs(delta) < abs(ans) * _EN_EPS:
            return ans
    raise NonConvergence(f"E_{n}({x}) series did not converge")


def _en_cf_scaled(n: int, x: float) -> float:
    # Modified Lentz evaluation of the continued fraction for e^x E_n(x).
    b = x + n
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _EN_MAXIT):
        an = -i * (n - 1 + i)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EN_EPS:
            return h
    raise NonConvergence(f"E_{n}({x}) continued fraction did not converge")


def expint_en_scaled(n: int, x: float) -> float:
    """Return ``e^x * E_n(x)`` for integer ``n >= 1`` and ``x > 0``.

    Uses the power series below x = 1.5 and the continued fraction above,
    where the scaling is built into the fraction itself.
    """
    if n < 1 or int(n) != n:
        raise DomainError(f"E_n requires integer n >= 1, got {n}")
    if not x > 0:
        raise DomainError(f"scaled E_n requires x > 0, got {x}")
    n = int(n)
    if math.isinf(x):
        return 0.0
    if x < _SERIES_SWITCH:
        return math.exp(x) * _en_series(n, x)
    return _en_cf_scaled(n, x)


def expint_en(n: int, x: float) -> float:
    """Unscaled ``E_n(x)``; ``x = 0`` is allowed for ``n >= 2``."""
    if n < 1 or int(n) != n:
        raise DomainError(f"E_n requires integer n >= 1, got {n}")
    if x < 0:
        raise DomainError(f"E_n requires x >= 0, got {x}")
    n = int(n)
    if x == 0:
        if n == 1:
            raise DomainError("E_1(0) is infinite")
        return 1.0 / (n - 1)
    if x < _SERIES_SWITCH:
        return _en_series(n, x)
    # underflows quietly to 0 for very large x
    return math.exp(-x) * _en_cf_scaled(n, x)


def expint_en_scaled_range(nmax: int, x: float) -> np.ndarray:
    """Vector ``[e^x E_1(x), ..., e^x E_nmax(x)]``.

    One direct evaluation at ``j0 ~ x`` seeds the recurrence, which is then
    run upward (stable for j > x) and downward (stable for j < x).
    """
    if nmax < 1:
        raise DomainError(f"nmax must be >= 1, got {nmax}")
    if not x > 0:
        raise DomainError(f"scaled E_n requires x > 0, got {x}")
    out = np.empty(nmax)
    if math.isinf(x):
        out.fill(0.0)
        return out
    j0 = min(nmax, max(1, int(x)))
    out[j0 - 1] = expint_en_scaled(j0, x)
    for j in range(j0, nmax):
        out[j] = (1.0 - x * out[j - 1]) / j
    for j in range(j0 - 1, 0, -1):
        out[j - 1] = (1.0 - j * out[j]) / x
    return out


# ---------------------------------------------------------------------------
# Generalized hypergeometric series pFq
# ---------------------------------------------------------------------------
def _check_lower(lower: Sequence[float]) -> None:
    for b in lower:
        if b <= 0 and float(b).is_integer():
            raise DomainError(f"lower parameter {b} is a nonpositive integer")


def _series_positive(upper, lower, z, policy):
    # Returns (log_scale, mantissa); value = mantissa * exp(log_scale).
    term = 1.0
    total = 1.0
    comp = 0.0
    log_scale = 0.0
    small = 0
    for k in range(1, policy.max_terms + 1):
        ratio = z / k
        for a in upper:
            ratio *= a + k - 1
        for b in lower:
            ratio /= b + k - 1
        term *= ratio
        if term == 0.0:
            return log_scale, total
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) > _RESCALE_AT or abs(total) > _RESCALE_AT:
            term = math.ldexp(term, -_RESCALE_BITS)
            total = math.ldexp(total, -_RESCALE_BITS)
            comp = math.ldexp(comp, -_RESCALE_BITS)
            log_scale += _RESCALE_BITS * _LN2
        if abs(term) < policy.rel_tol * abs(total):
            small += 1
            if small >= 3:
                return log_scale, total
        else:
            small = 0
    raise NonConvergence(f"hypergeometric series exceeded {policy.max_terms} terms")


def _series_alternating(upper, lower, z, policy):
    # Negative argument: cancellation between terms, so sum with 50 digits.
    D = decimal.Decimal
    with decimal.localcontext() as ctx:
        ctx.prec = 50
        zd = D(z)
        ups = [D(a) for a in upper]
        lows = [D(b) for b in lower]
        tol = D(min(policy.rel_tol, 1e-17))
        term = D(1)
        total = D(1)
        small = 0
        for k in range(1, policy.max_terms + 1):
            num = zd
            for a in ups:
                num *= a + (k - 1)
            den = D(k)
            for b in lows:
                den *= b + (k - 1)
            term = term * num / den
            if term == 0:
                break
            total += term
            if abs(term) < tol * abs(total):
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
        else:
            raise NonConvergence(
                f"hypergeometric series exceeded {policy.max_terms} terms")
        if total == 0:
            return -math.inf, 0.0
        return float(abs(total).ln()), (1.0 if total > 0 else -1.0)


def log_hypergeometric(upper: Sequence[float], lower: Sequence[float], z: float,
                       policy: AccuracyPolicy = DEFAULT_POLICY) -> tuple[float, float]:
    """Return ``(ln|pFq|, sign)`` of the generalized hypergeometric series.

    Parameters
    ----------
    upper, lower : sequences of float
        Numerator and denominator parameters.  Lower parameters must not be
        nonpositive integers.  A nonpositive-integer upper parameter turns the
        series into a polynomial, which is summed exactly to its last term.
    z : float
        Argument.  ``z >= 0`` uses the scaled double-precision sum; negative
        arguments fall back to a 50-digit sum because the terms alternate.
    """
    _check_lower(lower)
    if z == 0:
        return 0.0, 1.0
    if z < 0:
        return _series_alternating(upper, lower, z, policy)
    log_scale, mant = _series_positive(upper, lower, z, policy)
    if mant == 0:
        return -math.inf, 0.0
    return log_scale + math.log(abs(mant)), math.copysign(1.0, mant)


def _to_linear(log_abs: float, sign: float, name: str) -> float:
    if log_abs > 709.78:
        raise SeriesOverflow(f"{name} overflows double precision (ln = {log_abs:.6g})")
    return sign * math.exp(log_abs)


def hyp0f1(b: float, z: float, policy: AccuracyPolicy = DEFAULT_POLICY) -> float:
    """Confluent limit function 0F1(;b;z)."""
    if not b > 0:
        raise DomainError(f"hyp0f1 requires b > 0, got {b}")
    return _to_linear(*log_hypergeometric((), (b,), z, policy), "0F1")


def hyp1f1(a: float, b: float, z: float, policy: AccuracyPolicy = DEFAULT_POLICY) -> float:
    """Kummer's confluent hypergeometric function 1F1(a;b;z)."""
    if not b > 0:
        raise DomainError(f"hyp1f1 requires b > 0, got {b}")
    return _to_linear(*log_hypergeometric((a,), (b,), z, policy), "1F1")


def hyp2f2(a1: float, a2: float, b1: float, b2: float, z: float,
           policy: AccuracyPolicy = DEFAULT_POLICY) -> float:
    """Generalized hypergeometric function 2F2(a1,a2;b1,b2;z)."""
    if not (b1 > 0 and b2 > 0):
        raise DomainError(f"hyp2f2 requires b1, b2 > 0, got {b1}, {b2}")
    return _to_linear(*log_hypergeometric((a1, a2), (b1, b2), z, policy), "2F2")
