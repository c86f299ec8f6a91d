"""
Monte Carlo estimation of the ergodic rate.

Distortion noise is not sampled: conditioned on the channel it only enters
through the effective noise covariance, so each trial evaluates the
log-det rate of one Rician realization.  Trials are processed in fixed-size
chunks whose random draws are pinned to the trial index, so the estimate is
bit-identical for any number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import SystemConfig, rate_coefficients, sample_rician_batch
from .errors import ConfigError
from .matrix_core import gram, log2_det_hermitian_batch
from .results import RateResult
from .rng import RandomStream

# complex entries generated per chunk; fixes the partition independent of workers
_CHUNK_ENTRIES = 1 << 20


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    trials: int


def default_workers() -> int:
    env = os.environ.get("RATE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"RATE_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError("RATE_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _rates_from_gram(W: np.ndarray, a: float, b: float) -> np.ndarray:
    q = W.shape[-1]
    eye = np.eye(q)
    r = log2_det_hermitian_batch(a * W + eye)
    if b > 0:
        r = r - log2_det_hermitian_batch(b * W + eye)
    return r


def instantaneous_rate(H: np.ndarray, config: SystemConfig) -> float | np.ndarray:
    """Log-det rate of one realization (or a batch) of the channel.

    Evaluated as ``log2 det(I + a W) - log2 det(I + b W)``, which equals the
    canonical-model rate with the distortion-augmented noise covariance and
    needs no explicit matrix inverse.
    """
    H = np.asarray(H)
    if config.rho == 0:
        return 0.0 if H.ndim == 2 else np.zeros(H.shape[0])
    c = rate_coefficients(config)
    W = gram(H, config.Nt, config.Nr)
    r = _rates_from_gram(W, c.a, c.b)
    return float(r) if H.ndim == 2 else r


def _chunks(trials: int, Nt: int, Nr: int) -> list[tuple[int, int]]:
    size = max(1, _CHUNK_ENTRIES // (Nt * Nr))
    return [(s, min(size, trials - s)) for s in range(0, trials, size)]


def _run_chunks(fn, chunks, workers):
    if workers <= 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def sample_rates(config: SystemConfig, Hbar: np.ndarray, trials: int, stream: RandomStream,
                 workers: int | None = None) -> np.ndarray:
    """Per-trial instantaneous rates, ordered by trial index."""
    Hbar = np.asarray(Hbar)
    if Hbar.shape != (config.Nr, config.Nt):
        raise ConfigError(f"Hbar has shape {Hbar.shape}, expected ({config.Nr}, {config.Nt})")
    workers = workers or default_workers()
    if config.rho == 0:
        return np.zeros(trials)
    c = rate_coefficients(config)

    def one(chunk):
        start, n = chunk
        H = sample_rician_batch(Hbar, config.K, stream, start, n)
        return _rates_from_gram(gram(H, config.Nt, config.Nr), c.a, c.b)

    return np.concatenate(_run_chunks(one, _chunks(trials, config.Nt, config.Nr), workers))


def estimate(samples: np.ndarray) -> McEstimate:
    n = len(samples)
    if n < 2:
        raise ConfigError("at least two trials are needed for a standard error")
    return McEstimate(float(np.mean(samples)), float(np.std(samples, ddof=1) / math.sqrt(n)), n)


def mc_rate(config: SystemConfig, Hbar: np.ndarray, trials: int, stream: RandomStream,
            workers: int | None = None) -> RateResult:
    """Sample-mean ergodic rate with its standard error."""
    if trials < 100:
        raise ConfigError(f"mc_rate needs at least 100 trials, got {trials}")
    est = estimate(sample_rates(config, Hbar, trials, stream, workers))
    return RateResult(max(est.mean, 0.0), "mc", est.std_error)


def mc_eigen_samples(config: SystemConfig, Hbar: np.ndarray, trials: int, stream: RandomStream,
                     workers: int | None = None) -> np.ndarray:
    """Pooled unordered eigenvalues of W over ``trials`` realizations."""
    if trials < 1000:
        raise ConfigError(f"mc_eigen_samples needs at least 1000 trials, got {trials}")
    Hbar = np.asarray(Hbar)
    workers = workers or default_workers()

    def one(chunk):
        start, n = chunk
        H = sample_rician_batch(Hbar, config.K, stream, start, n)
        return np.linalg.eigvalsh(gram(H, config.Nt, config.Nr)).ravel()

    ev = np.concatenate(_run_chunks(one, _chunks(trials, config.Nt, config.Nr), workers))
    return np.clip(ev, 0.0, None)


def paired_loss(ideal: np.ndarray, impaired: np.ndarray) -> McEstimate:
    """Relative loss ``1 - mean(impaired)/mean(ideal)`` from matched trials.

    The standard error follows from the delta method, using the covariance
    between the paired samples.
    """
    ideal, impaired = np.asarray(ideal), np.asarray(impaired)
    n = len(ideal)
    if n < 2 or len(impaired) != n:
        raise ConfigError("paired loss needs two equally long sample sets of size >= 2")
    mi, mh = float(np.mean(ideal)), float(np.mean(impaired))
    if not mi > 0:
        raise ConfigError("ideal-hardware mean rate must be positive")
    ratio = mh / mi
    cov = np.cov(impaired, ideal, ddof=1)
    var = (cov[0, 0] - 2.0 * ratio * cov[0, 1] + ratio ** 2 * cov[1, 1]) / (mi ** 2 * n)
    return McEstimate(1.0 - ratio, math.sqrt(max(var, 0.0)), n)
