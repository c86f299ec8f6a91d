"""Ergodic rate of Rician-fading MIMO links with transceiver hardware impairments."""

from .asymptotics import (FixedPointSolution, deterministic_equivalent_J, fixed_point,
                          rate_large_both, rate_large_nr, rate_large_nt, rate_loss)
from .channel import (LosSpectrum, RateCoefficients, SystemConfig, UlaGeometry, arrival_angles,
                      distortion_sigma, los_spectrum, perturb_angles, rate_coefficients,
                      sample_rician, ula_los)
from .errors import (ConfigError, DegenerateSpectrum, DomainError, NoCeiling, NonConvergence,
                     NotPositiveDefinite, RateError, SeriesOverflow, Unbounded, UnsupportedRegime)
from .exact_rate import (eigen_pdf, exact_rate, high_snr_rate, ln_g_constant, omega_matrix,
                         required_terms, truncation_bound)
from .monte_carlo import McEstimate, instantaneous_rate, mc_eigen_samples, mc_rate
from .results import RateResult, SeriesDiagnostics
from .rng import RandomStream

__version__ = "0.1.0"
