"""Portable seeded random number generation.

The generator is a fixed 64-bit splitmix-style stream so that instances can
be reproduced bit-for-bit from a seed, independently of any platform RNG.
State advance and output mixing use the constants

    GAMMA = 0x9E3779B97F4A7C15
    MIX1  = 0xBF58476D1CE4E5B9
    MIX2  = 0x94D049BB133111EB

with the output z := state; z ^= z >> 30; z *= MIX1; z ^= z >> 27; z *= MIX2;
z ^= z >> 31 (all mod 2^64).  Uniforms take the top 53 bits shifted into
(0, 1]; a standard complex Gaussian is sqrt(-ln u1) * exp(2*pi*i*u2).
Unitaries come from modified Gram-Schmidt on a square complex Gaussian with
the diagonal phase fixed to be real positive.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class Rng:
    """Splitmix-style 64-bit generator with numeric helpers."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & _MASK
        z = ((z ^ (z >> 27)) * MIX2) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def uniform(self) -> float:
        """Uniform in (0, 1]."""
        return ((self.next_u64() >> 11) + 1) * (2.0 ** -53)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (inclusive), by rejection-free modulo.

        The tiny modulo bias is irrelevant for instance generation and keeps
        the stream layout simple and portable.
        """
        if hi < lo:
            raise ValueError("empty range")
        span = hi - lo + 1
        return lo + self.next_u64() % span

    def complex_gauss(self) -> complex:
        """Standard complex Gaussian (E|z|^2 = 1)."""
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-math.log(u1))
        return complex(r * math.cos(2 * math.pi * u2), r * math.sin(2 * math.pi * u2))

    def gauss_matrix(self, m: int, n: int) -> np.ndarray:
        out = np.zeros((m, n), dtype=np.complex128)
        for r in range(m):
            for c in range(n):
                out[r, c] = self.complex_gauss()
        return out

    def gauss_vector(self, n: int) -> np.ndarray:
        return self.gauss_matrix(1, n).reshape(-1) if n else np.zeros(0, dtype=np.complex128)

    def unit_scalar(self) -> complex:
        phase = 2 * math.pi * self.uniform()
        return complex(math.cos(phase), math.sin(phase))

    def unitary(self, m: int) -> np.ndarray:
        """Haar-like unitary: Gram-Schmidt of a complex Gaussian.

        Normalizing each residual by its (real, positive) length is exactly
        the QR factorization with phase-fixed R diagonal, so the result is
        deterministic given the stream and approximately Haar distributed.
        """
        if m == 0:
            return np.zeros((0, 0), dtype=np.complex128)
        G = self.gauss_matrix(m, m)
        Q = np.zeros((m, m), dtype=np.complex128)
        for c in range(m):
            v = G[:, c].copy()
            for p in range(c):
                v -= np.vdot(Q[:, p], v) * Q[:, p]
            # second orthogonalization pass for numerical safety
            for p in range(c):
                v -= np.vdot(Q[:, p], v) * Q[:, p]
            Q[:, c] = v / np.linalg.norm(v)
        return Q
