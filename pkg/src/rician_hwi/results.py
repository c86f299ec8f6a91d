"""Rate result containers shared by all engines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

METHODS = ("exact_series", "high_snr", "mc", "asym_nt", "asym_nr", "asym_de")


@dataclass(frozen=True)
class SeriesDiagnostics:
    """Truncation record of a series evaluation.

    ``bound_at_stop`` is an upper bound on the discarded tail, in bits/s/Hz.
    """

    terms_used: int
    bound_at_stop: float
    converged: bool


@dataclass(frozen=True)
class RateResult:
    rate: float
    method: str
    uncertainty: float = 0.0
    diagnostics: Optional[SeriesDiagnostics] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if self.uncertainty < 0:
            raise ValueError("uncertainty must be nonnegative")
