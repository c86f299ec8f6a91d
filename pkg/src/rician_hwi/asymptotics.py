"""
Large-array rate limits and the deterministic equivalent.

The deterministic equivalent treats the channel as a fixed mean
``sqrt(K/(K+1)) Hbar`` plus i.i.d. scatter of variance ``1/(K+1)`` and
approximates ``E[ln det(I + c H H^H)]`` through two coupled scalars
``psi`` (receive side) and ``psi_bar`` (transmit side).  With
``A = sqrt(K/(K+1)) Hbar`` and ``s = 1/(K+1)``::

    delta     = s tr[(1/psi) I_Nr + (psi_bar/c) A A^H]^-1
    delta_bar = s tr[(1/psi_bar) I_Nt + (psi/c) A^H A]^-1
    psi = c / (1 + delta_bar),   psi_bar = c / (1 + delta)

and the log-det equivalent is, in nats,
``ln det((c/psi) I_Nr + psi_bar A A^H) + Nt ln(c/psi_bar) - delta delta_bar / (s c)``.

All traces and determinants are reduced to the smaller Gram matrix of
``A`` with ``det(I + XY) = det(I + YX)`` and the matching trace identity, so
the cost per iteration is a single Cholesky of size ``min(Nt, Nr)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .channel import SystemConfig, rate_coefficients
from .errors import ConfigError, DomainError, NonConvergence, NotPositiveDefinite, Unbounded
from .matrix_core import hermitian
from .results import RateResult

_LN2 = math.log(2.0)
MAX_ITERATIONS = 10_000


def rate_large_nt(config: SystemConfig) -> RateResult:
    """Rate limit when the transmit array grows with Nr fixed."""
    rho, dt2, dr2 = config.rho, config.delta_t ** 2, config.delta_r ** 2
    rate = config.Nr * math.log2(1.0 + rho / (rho * dt2 + rho * dr2 + 1.0))
    return RateResult(rate, "asym_nt")


def rate_large_nr(config: SystemConfig) -> RateResult:
    """Rate limit when the receive array grows with Nt fixed.

    Does not depend on the SNR or the receive distortion level.
    """
    if config.delta_t == 0:
        raise Unbounded("with an ideal transmitter the rate grows without bound in Nr")
    return RateResult(config.Nt * math.log2(1.0 + 1.0 / config.delta_t ** 2), "asym_nr")


@dataclass(frozen=True)
class FixedPointSolution:
    psi: float
    psi_bar: float
    iterations: int
    residual: float


class _LosGram:
    """Smaller Gram matrix of the scaled LoS component and its dimensions."""

    def __init__(self, Hbar, K: float):
        Hbar = np.asarray(Hbar, dtype=complex)
        if Hbar.ndim != 2 or Hbar.size == 0:
            raise ConfigError(f"Hbar must be a nonempty matrix, got shape {Hbar.shape}")
        if not K >= 0 or math.isinf(K):
            raise ConfigError(f"K must be finite and >= 0, got {K}")
        self.Nr, self.Nt = Hbar.shape
        self.scatter = 1.0 / (K + 1.0)
        A = math.sqrt(K / (K + 1.0)) * Hbar
        if self.Nt <= self.Nr:
            S = hermitian(A) @ A
        else:
            S = A @ hermitian(A)
        self.S = 0.5 * (S + hermitian(S))
        self.dim = self.S.shape[0]
        self._eye = np.eye(self.dim)

    def _factor(self, alpha: float, beta: float):
        try:
            return cho_factor(alpha * self._eye + beta * self.S, lower=True)
        except LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from None

    def trace_inv(self, alpha: float, beta: float, side: int) -> float:
        """``tr(alpha I_side + beta G_side)^-1`` with ``side`` = Nr or Nt."""
        inv = cho_solve(self._factor(alpha, beta), self._eye)
        return (side - self.dim) / alpha + float(np.real(np.trace(inv)))

    def ln_det(self, alpha: float, beta: float, side: int) -> float:
        """``ln det(alpha I_side + beta G_side)``."""
        c, _ = self._factor(alpha, beta)
        return (side - self.dim) * math.log(alpha) + 2.0 * float(np.sum(np.log(np.real(np.diagonal(c)))))

    def deltas(self, psi: float, psi_bar: float, coeff: float) -> tuple[float, float]:
        d = self.scatter * self.trace_inv(1.0 / psi, psi_bar / coeff, self.Nr)
        d_bar = self.scatter * self.trace_inv(1.0 / psi_bar, psi / coeff, self.Nt)
        return d, d_bar


def _defects(g: _LosGram, psi: float, psi_bar: float, coeff: float) -> tuple[float, float]:
    d, d_bar = g.deltas(psi, psi_bar, coeff)
    return psi - coeff / (1.0 + d_bar), psi_bar - coeff / (1.0 + d)


def _solve(g: _LosGram, coeff: float, tol: float) -> FixedPointSolution:
    if not coeff > 0 or math.isinf(coeff):
        raise ConfigError(f"coefficient must be positive and finite, got {coeff}")
    if not tol > 0:
        raise ConfigError(f"tol must be positive, got {tol}")
    psi = psi_bar = coeff
    prev = None
    damp = 1.0
    for it in range(1, MAX_ITERATIONS + 1):
        # alternating (Gauss-Seidel) substitution
        _, d_bar = g.deltas(psi, psi_bar, coeff)
        psi_new = psi + damp * (coeff / (1.0 + d_bar) - psi)
        d, _ = g.deltas(psi_new, psi_bar, coeff)
        psi_bar_new = psi_bar + damp * (coeff / (1.0 + d) - psi_bar)
        step = (psi_new - psi, psi_bar_new - psi_bar)
        psi, psi_bar = psi_new, psi_bar_new
        e1, e2 = _defects(g, psi, psi_bar, coeff)
        residual = max(abs(e1), abs(e2)) / coeff
        if residual <= tol:
            return FixedPointSolution(psi, psi_bar, it, residual)
        # damp once the iterates start to oscillate
        if prev is not None and (step[0] * prev[0] < 0 or step[1] * prev[1] < 0):
            damp = 0.5
        prev = step
    raise NonConvergence(f"fixed point did not converge in {MAX_ITERATIONS} iterations "
                         f"(residual {residual:.3e})")


def fixed_point(Hbar, K: float, coeff: float, tol: float = 1e-10) -> FixedPointSolution:
    """Solve the coupled equations for ``(psi, psi_bar)`` at rate coefficient ``coeff``.

    Starts from ``psi = psi_bar = coeff``.  ``residual`` is the larger of the
    two equation defects relative to ``coeff``.
    """
    return _solve(_LosGram(Hbar, K), coeff, tol)


def _equivalent_nats(g: _LosGram, coeff: float, fp: FixedPointSolution) -> float:
    psi, psi_bar = fp.psi, fp.psi_bar
    d, d_bar = g.deltas(psi, psi_bar, coeff)
    return (g.ln_det(coeff / psi, psi_bar, g.Nr)
            + g.Nt * math.log(coeff / psi_bar)
            - d * d_bar / (g.scatter * coeff))


def deterministic_equivalent_J(Hbar, K: float, coeff: float, fp: FixedPointSolution) -> float:
    """Large-system approximation of ``E[log2 det(I + coeff H H^H)]`` in bits."""
    if not coeff > 0:
        raise ConfigError(f"coefficient must be positive, got {coeff}")
    return _equivalent_nats(_LosGram(Hbar, K), coeff, fp) / _LN2


def _log_det_equivalent(g: _LosGram, coeff: float, tol: float) -> float:
    if coeff == 0:
        return 0.0
    return _equivalent_nats(g, coeff, _solve(g, coeff, tol)) / _LN2


def rate_large_both(config: SystemConfig, Hbar, tol: float = 1e-10) -> RateResult:
    """Deterministic-equivalent rate when both arrays are large.

    Difference of the log-det equivalents at the coefficients ``a`` and
    ``b``; the second one vanishes for an ideal transmitter.
    """
    Hbar = np.asarray(Hbar)
    if Hbar.shape != (config.Nr, config.Nt):
        raise ConfigError(f"Hbar has shape {Hbar.shape}, expected ({config.Nr}, {config.Nt})")
    if config.rho == 0:
        return RateResult(0.0, "asym_de")
    c = rate_coefficients(config)
    g = _LosGram(Hbar, config.K)
    rate = _log_det_equivalent(g, c.a, tol) - _log_det_equivalent(g, c.b, tol)
    return RateResult(max(rate, 0.0), "asym_de")


def rate_loss(ideal: RateResult, nonideal: RateResult) -> float:
    """Relative rate loss ``(R_ideal - R_nonideal) / R_ideal``."""
    if not ideal.rate > 0:
        raise DomainError("rate loss needs a positive ideal-hardware rate")
    return (ideal.rate - nonideal.rate) / ideal.rate
