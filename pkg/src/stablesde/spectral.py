"""Real cosine series in one space variable.

A series is ``const + sum_j amps[j] * cos(freqs[j] * x + phases[j])`` with
non-negative angular frequencies.  All drift and test-function families with
an exact Fourier representation are built on top of it, which lets the heat
semigroup act exactly (mode by mode).
"""
import hashlib

import numpy as np

from .exceptions import ResolutionError


class FourierSeries:
    """Finite real cosine series.

    Parameters
    ----------
    freqs, amps, phases : array_like
        Mode data, all of the same length.
    const : float
        Zero-frequency term.
    """

    def __init__(self, freqs, amps, phases=None, const=0.0):
        self.freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
        self.amps = np.atleast_1d(np.asarray(amps, dtype=float))
        if phases is None:
            phases = np.zeros_like(self.freqs)
        self.phases = np.atleast_1d(np.asarray(phases, dtype=float))
        if not (self.freqs.shape == self.amps.shape == self.phases.shape):
            raise ValueError("freqs, amps and phases must have the same length")
        if np.any(self.freqs < 0):
            raise ValueError("frequencies must be non-negative")
        self.const = float(const)

    def __repr__(self):
        return f"FourierSeries({len(self.freqs)} modes, const={self.const:g})"

    @property
    def bandwidth(self) -> float:
        return float(self.freqs.max()) if self.freqs.size else 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.const)
        # loop over modes: keeps memory at O(len(x)) for large path batches
        for k, a, p in zip(self.freqs, self.amps, self.phases):
            out += a * np.cos(k * x + p)
        return out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for k, a, p in zip(self.freqs, self.amps, self.phases):
            out -= a * k * np.sin(k * x + p)
        return out

    def scaled(self, factors, const_factor=1.0):
        """Multiply each mode amplitude by ``factors`` (a per-mode array)."""
        return FourierSeries(self.freqs, self.amps * np.asarray(factors, dtype=float),
                             self.phases, self.const * const_factor)

    def times(self, c):
        return FourierSeries(self.freqs, self.amps * c, self.phases, self.const * c)

    def semigroup(self, psi, u):
        """Apply the heat semigroup ``P_u`` given the exponent function ``psi``."""
        return self.scaled(np.exp(-u * psi(self.freqs)))

    def is_periodic_on(self, L, tol=1e-9):
        """True if every mode is periodic on [-L, L)."""
        q = self.freqs * L / np.pi
        return bool(np.all(np.abs(q - np.round(q)) < tol))

    def coefficients_on(self, grid_freqs):
        """Dense spectrum (FFT ordering) of the series on a lattice ``pi m / L``.

        Returns the complex array ``c`` such that the series equals
        ``sum c_m exp(i xi_m x)``.
        """
        xi = np.asarray(grid_freqs)
        N = xi.size
        dk = abs(xi[1] - xi[0]) if N > 1 else 1.0
        c = np.zeros(N, dtype=complex)
        idx = np.round(self.freqs / dk).astype(int)
        if np.any(idx >= N // 2):
            raise ResolutionError("series bandwidth reaches the grid Nyquist frequency")
        for m, a, p in zip(idx, self.amps, self.phases):
            if m == 0:
                c[0] += a * np.cos(p)
            else:
                c[m] += 0.5 * a * np.exp(1j * p)
                c[-m] += 0.5 * a * np.exp(-1j * p)
        c[0] += self.const
        return c

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.freqs, self.amps, self.phases):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(repr(self.const).encode())
        return h.hexdigest()[:16]


def weierstrass_series(beta, base=2.0, levels=8, seed=0, amplitude=1.0, phases=True):
    """Seeded Weierstrass-type series ``sum_{j<=J} base^{-beta j} cos(base^j x + phase_j)``."""
    j = np.arange(levels + 1)
    freqs = float(base) ** j
    amps = amplitude * freqs ** (-float(beta))
    if phases:
        ph = np.random.default_rng(seed).uniform(0.0, 2 * np.pi, size=j.size)
    else:
        ph = np.zeros(j.size)
    return FourierSeries(freqs, amps, ph)


def besov_series(beta, modes=16, seed=0, base_frequency=1.0, amplitude=1.0, decay=None):
    """Seeded random-sign series ``sum_{|k|<=K} sigma_k (1+|k|)^{-decay} e^{i k w x}``.

    The sign pattern is symmetric (sigma_{-k} = sigma_k) so the series is real;
    the default decay is ``beta + 1/2`` (d = 1).
    """
    decay = float(beta) + 0.5 if decay is None else float(decay)
    rng = np.random.default_rng(seed)
    sigma = rng.choice([-1.0, 1.0], size=modes + 1)
    k = np.arange(1, modes + 1)
    amps = 2.0 * amplitude * sigma[1:] * (1.0 + k) ** (-decay)
    return FourierSeries(base_frequency * k, amps, np.zeros(modes),
                         const=amplitude * sigma[0])
