"""
Link parameters, the ULA line-of-sight matrix, Rician sampling, and the
constants of the impairment-aware signal model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateSpectrum
from .matrix_core import squared_singular_values
from .rng import RandomStream

ANGLE_PROFILES = ("uniform-angle", "uniform-sine", "common")
DEFAULT_PROFILE = "uniform-angle"

# Relative thresholds below which LoS eigenvalues count as zero or equal.
DEGENERACY_RTOL = 1e-8


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def linear_to_db(rho: float) -> float:
    return 10.0 * math.log10(rho) if rho > 0 else -math.inf


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of a single-user link.

    ``rho`` is the average SNR per receive antenna on a linear scale; the
    noise variance is fixed to one.
    """

    Nt: int
    Nr: int
    delta_t: float = 0.0
    delta_r: float = 0.0
    K: float = 1.0
    rho: float = 1.0
    N0: float = field(default=1.0, repr=False)

    def __post_init__(self):
        if int(self.Nt) != self.Nt or self.Nt < 1:
            raise ConfigError(f"Nt must be a positive integer, got {self.Nt}")
        if int(self.Nr) != self.Nr or self.Nr < 1:
            raise ConfigError(f"Nr must be a positive integer, got {self.Nr}")
        for name in ("delta_t", "delta_r"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1), got {v}")
        if not self.K >= 0:
            raise ConfigError(f"K must be >= 0, got {self.K}")
        if not self.rho >= 0 or math.isinf(self.rho):
            raise ConfigError(f"rho must be finite and >= 0, got {self.rho}")
        if self.N0 != 1.0:
            raise ConfigError("noise variance is normalized to N0 = 1")

    @classmethod
    def from_snr_db(cls, Nt, Nr, delta_t=0.0, delta_r=0.0, K=1.0, snr_db=0.0):
        return cls(Nt=Nt, Nr=Nr, delta_t=delta_t, delta_r=delta_r, K=K,
                   rho=db_to_linear(snr_db))

    @property
    def p(self) -> int:
        return max(self.Nt, self.Nr)

    @property
    def q(self) -> int:
        return min(self.Nt, self.Nr)

    @property
    def snr_db(self) -> float:
        return linear_to_db(self.rho)

    def replace(self, **changes) -> "SystemConfig":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass(frozen=True)
class UlaGeometry:
    """Receive-side arrival angles (radians) and element spacing in wavelengths."""

    arrival_angles: tuple
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        angles = tuple(float(t) for t in self.arrival_angles)
        object.__setattr__(self, "arrival_angles", angles)
        if not angles:
            raise ConfigError("at least one arrival angle is required")
        if any(not -math.pi / 2 < t < math.pi / 2 for t in angles):
            raise ConfigError("arrival angles must lie in (-pi/2, pi/2)")
        if not self.spacing_over_wavelength > 0:
            raise ConfigError("antenna spacing must be positive")

    @classmethod
    def preset(cls, Nr: int, profile: str = DEFAULT_PROFILE,
               spacing_over_wavelength: float = 0.5) -> "UlaGeometry":
        return cls(arrival_angles(Nr, profile), spacing_over_wavelength)

    @property
    def Nr(self) -> int:
        return len(self.arrival_angles)


def arrival_angles(Nr: int, profile: str = DEFAULT_PROFILE) -> tuple:
    """Arrival-angle presets.

    ``uniform-angle``
        theta_n evenly spread in angle, ``(pi/2)(-1 + (2n-1)/Nr)``.
    ``uniform-sine``
        evenly spread in sine, ``arcsin(-1 + (2n-1)/Nr)``.  With half-wave
        spacing and ``Nt = Nr`` the steering matrix is a scaled DFT, so its
        singular values coincide.
    ``common``
        every receive antenna sees the same angle 0; the LoS matrix is the
        all-ones rank-one matrix.
    """
    if Nr < 1:
        raise ConfigError(f"Nr must be >= 1, got {Nr}")
    grid = -1.0 + (2.0 * np.arange(1, Nr + 1) - 1.0) / Nr
    if profile == "uniform-angle":
        theta = 0.5 * math.pi * grid
    elif profile == "uniform-sine":
        theta = np.arcsin(grid)
    elif profile == "common":
        theta = np.zeros(Nr)
    else:
        raise ConfigError(f"unknown angle profile {profile!r}; choose from {ANGLE_PROFILES}")
    return tuple(float(t) for t in theta)


def perturb_angles(geometry: UlaGeometry, eps: float, stream: RandomStream | None = None) -> UlaGeometry:
    """Jitter each angle by a uniform offset in ``[-eps, eps]``."""
    if eps < 0:
        raise ConfigError("perturbation must be nonnegative")
    if eps == 0:
        return geometry
    stream = stream or RandomStream(seed=0x5EED, stream_id=0xA46E)
    u = stream.uniforms(0, 1, geometry.Nr)[0]
    lim = math.pi / 2 - 1e-9
    theta = np.clip(np.asarray(geometry.arrival_angles) + eps * (2.0 * u - 1.0), -lim, lim)
    return UlaGeometry(tuple(theta), geometry.spacing_over_wavelength)


def ula_los(Nt: int, geometry: UlaGeometry) -> np.ndarray:
    """Deterministic LoS matrix of shape ``(Nr, Nt)``.

    Row n (receive antenna), column m (transmit antenna) holds
    ``exp(-j (m-1) 2 pi (d/lambda) sin(theta_n))``.
    """
    if Nt < 1:
        raise ConfigError(f"Nt must be >= 1, got {Nt}")
    m = np.arange(Nt)
    sin_t = np.sin(np.asarray(geometry.arrival_angles))
    return np.exp(-2j * np.pi * geometry.spacing_over_wavelength * np.outer(sin_t, m))


def sample_rician_batch(Hbar: np.ndarray, K: float, stream: RandomStream,
                        start_trial: int, n_trials: int) -> np.ndarray:
    """Channel realizations for trials ``start_trial .. start_trial+n_trials-1``."""
    Nr, Nt = Hbar.shape
    Hw = stream.complex_normals(start_trial, n_trials, Nr * Nt).reshape(n_trials, Nr, Nt)
    los = math.sqrt(K / (K + 1.0))
    nlos = math.sqrt(1.0 / (K + 1.0))
    return los * Hbar + nlos * Hw


def sample_rician(Hbar: np.ndarray, K: float, rng: RandomStream, trial: int = 0) -> np.ndarray:
    """One Rician realization ``sqrt(K/(K+1)) Hbar + sqrt(1/(K+1)) Hw``."""
    if not K >= 0:
        raise ConfigError(f"K must be >= 0, got {K}")
    return sample_rician_batch(np.asarray(Hbar), K, rng, trial, 1)[0]


def distortion_sigma(config: SystemConfig) -> tuple[float, float]:
    """Per-antenna transmit and receive distortion variances under equal power."""
    sigma_t2 = config.delta_t ** 2 * config.rho / config.Nt
    sigma_r2 = config.delta_r ** 2 * config.rho
    return sigma_t2, sigma_r2


@dataclass(frozen=True)
class RateCoefficients:
    a: float
    b: float
    a_inf: float
    b_inf: float


def rate_coefficients(config: SystemConfig) -> RateCoefficients:
    """Finite-SNR coefficients (a, b) and their high-SNR limits (a', b').

    a' and b' are ``inf`` when the receiver is ideal.
    """
    dt2, dr2 = config.delta_t ** 2, config.delta_r ** 2
    denom = config.Nt * (1.0 + config.rho * dr2)
    a = config.rho * (1.0 + dt2) / denom
    b = config.rho * dt2 / denom
    if dr2 > 0:
        a_inf = (1.0 + dt2) / (config.Nt * dr2)
        b_inf = dt2 / (config.Nt * dr2)
    else:
        a_inf = b_inf = math.inf
    return RateCoefficients(a, b, a_inf, b_inf)


@dataclass(frozen=True)
class LosSpectrum:
    """Ascending squared singular values of ``sqrt(K) * Hbar``."""

    phi: np.ndarray
    p: int
    q: int

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        object.__setattr__(self, "phi", phi)
        if phi.shape != (self.q,):
            raise ConfigError(f"expected {self.q} values, got shape {phi.shape}")
        if np.any(phi < 0) or np.any(np.diff(phi) < 0):
            raise ConfigError("phi must be nonnegative and ascending")

    def require_distinct(self) -> None:
        """Raise DegenerateSpectrum unless phi is strictly positive and distinct."""
        check_distinct(self.phi)


def check_distinct(phi: np.ndarray) -> None:
    top = float(np.max(phi)) if len(phi) else 0.0
    if top <= 0 or np.any(phi <= DEGENERACY_RTOL * top):
        raise DegenerateSpectrum(
            f"LoS spectrum has zero eigenvalues (phi = {np.array2string(phi, precision=6)})")
    if len(phi) > 1 and np.min(np.diff(phi)) < DEGENERACY_RTOL * top:
        raise DegenerateSpectrum(
            f"LoS spectrum has repeated eigenvalues (phi = {np.array2string(phi, precision=6)})")


def los_spectrum(Hbar: np.ndarray, K: float) -> LosSpectrum:
    """Squared singular values of ``sqrt(K) Hbar`` for the exact engine."""
    Hbar = np.asarray(Hbar)
    Nr, Nt = Hbar.shape
    phi = K * squared_singular_values(Hbar)
    check_distinct(phi)
    return LosSpectrum(phi, max(Nt, Nr), min(Nt, Nr))
