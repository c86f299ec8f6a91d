"""Exception hierarchy shared by all rate engines."""


class RateError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RateError, ValueError):
    """Invalid link parameters or arguments."""


class DomainError(RateError, ValueError):
    """Argument outside the domain of a special function."""


class NonConvergence(RateError, ArithmeticError):
    """A series or fixed-point iteration exhausted its iteration budget."""


class DegenerateSpectrum(RateError, ValueError):
    """LoS squared singular values are zero or not pairwise distinct."""


class NotPositiveDefinite(RateError, ArithmeticError):
    """Cholesky factorization hit a non-positive pivot."""


class SeriesOverflow(RateError, OverflowError):
    """A value exceeds the double-precision range."""


class NoCeiling(RateError, ValueError):
    """Ideal hardware has no finite high-SNR rate limit."""


class Unbounded(RateError, ValueError):
    """The requested large-antenna limit is infinite."""


class UnsupportedRegime(RateError, ValueError):
    """Parameters outside the validated range of the exact engine."""
