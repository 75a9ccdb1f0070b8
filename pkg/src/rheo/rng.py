"""Deterministic random numbers.

SplitMix64 with the golden-ratio increment, fixed here rather than delegated
to numpy so that byte-identical streams are reproducible from the seed alone,
on any platform, against any library version. The first output for seed 0 is
0xE220A8397B1DCDAF, which pins the implementation.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Counter-based 64-bit generator.

    Parameters
    ----------
    seed : int
        Any Python integer; reduced mod 2^64.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        """Next raw 64-bit word."""
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_signed(self) -> float:
        """Double in [-1, 1)."""
        return 2.0 * self.uniform() - 1.0

    def mat3(self) -> np.ndarray:
        """3x3 matrix with entries in [-1, 1), drawn row-major."""
        return np.array([self.uniform_signed() for _ in range(9)]).reshape(3, 3)

    def sym_mat3(self) -> np.ndarray:
        """Symmetric matrix: symmetric part of a mat3() draw."""
        m = self.mat3()
        return 0.5 * (m + m.T)

    def psd_mat3(self) -> np.ndarray:
        """Positive semi-definite matrix a^T a from a mat3() draw."""
        m = self.mat3()
        return m.T @ m

    def traceless_mat3(self) -> np.ndarray:
        """Traceless matrix: mat3() draw projected by subtracting (tr/3) I.

        After the projection the last diagonal entry is rewritten as
        -(m00 + m11), an adjustment of a few ulps, so the trace is an exact
        floating-point zero rather than roundoff-small.
        """
        m = self.mat3()
        m -= (np.trace(m) / 3.0) * np.eye(3)
        m[2, 2] = -(m[0, 0] + m[1, 1])
        return m
