"""
Counter-based random streams.

A stream is a Philox key ``(seed, stream_id)``.  Trial ``i`` of a batch that
needs ``w`` uniforms per trial always reads the Philox output starting at
word ``i * w_pad`` (``w_pad`` rounded up to a full 4-word Philox block), so
the draws of a trial do not depend on how trials are split across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_WORDS_PER_BLOCK = 4


@dataclass(frozen=True)
class RandomStream:
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) <= _MASK64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def _generator(self, block: int) -> np.random.Generator:
        counter = [block & _MASK64, (block >> 64) & _MASK64, 0, 0]
        bitgen = np.random.Philox(key=[self.seed, self.stream_id], counter=counter)
        return np.random.Generator(bitgen)

    def uniforms(self, start_trial: int, n_trials: int, per_trial: int) -> np.ndarray:
        """Uniforms on [0, 1) of shape ``(n_trials, per_trial)``."""
        blocks = math.ceil(per_trial / _WORDS_PER_BLOCK)
        padded = blocks * _WORDS_PER_BLOCK
        gen = self._generator(start_trial * blocks)
        u = gen.random(n_trials * padded).reshape(n_trials, padded)
        return u[:, :per_trial]

    def complex_normals(self, start_trial: int, n_trials: int, per_trial: int) -> np.ndarray:
        """Circularly symmetric CN(0, 1) samples by Box-Muller.

        Each complex sample consumes two uniforms: ``-ln(1-u1)`` is the
        exponential squared modulus and ``2*pi*u2`` the phase.
        """
        u = self.uniforms(start_trial, n_trials, 2 * per_trial)
        radius = np.sqrt(-np.log1p(-u[:, 0::2]))
        phase = 2.0 * np.pi * u[:, 1::2]
        return radius * np.exp(1j * phase)
