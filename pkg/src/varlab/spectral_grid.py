"""Periodic sample grids, Fourier coefficients, norms and multipliers.

A :class:`GridSignal` holds ``M`` samples of a function on the periodic
box ``[origin, origin + L)``.  Its Fourier-series coefficients are taken in
absolute position, i.e.

    f(x) = sum_j c_j exp(2 pi i xi_j x),   xi_j = j / L,

so that a product of signals is the convolution of coefficient sequences and
a multiplier acts by ``c_j -> symbol(xi_j) c_j`` regardless of the origin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "GridSignal",
    "Interval",
    "BandError",
    "make_grid",
    "from_function",
    "from_coefficients",
    "lp_norm",
    "apply_multiplier",
    "project_window",
    "shift_modulate",
    "same_geometry",
]


class BandError(ValueError):
    """Raised when a frequency window does not fit inside the grid band."""


def _is_pow2(n) -> bool:
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class GridSignal:
    """Complex samples on ``[origin, origin + M*spacing)``.

    Parameters
    ----------
    samples : ndarray
        Complex array of length ``M`` (a power of two, at least 8).
    spacing : float
        Distance between consecutive sample positions.
    origin : float
        Left endpoint of the periodic box.
    """

    samples: np.ndarray
    spacing: float
    origin: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not _is_pow2(s.size) or s.size < 8:
            raise ValueError(f"sample count must be a power of two >= 8, got {s.size}")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError("spacing must be positive and finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", float(self.origin))

    @property
    def M(self) -> int:
        return self.samples.size

    @property
    def period(self) -> float:
        return self.M * self.spacing

    @property
    def nyquist(self) -> float:
        return 0.5 / self.spacing

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.M)

    @property
    def freq_index(self) -> np.ndarray:
        """Signed integer frequency indices ``j`` in FFT order."""
        return np.fft.fftfreq(self.M, 1.0 / self.M).astype(np.int64)

    @property
    def freqs(self) -> np.ndarray:
        return self.freq_index / self.period

    def coefficients(self) -> np.ndarray:
        """Fourier-series coefficients ``c_j`` in FFT order."""
        c = np.fft.fft(self.samples) / self.M
        if self.origin != 0.0:
            c = c * np.exp(-2j * np.pi * self.freqs * self.origin)
        return c

    def with_samples(self, samples) -> "GridSignal":
        return GridSignal(samples, self.spacing, self.origin)

    def __add__(self, other: "GridSignal") -> "GridSignal":
        same_geometry(self, other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "GridSignal") -> "GridSignal":
        same_geometry(self, other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, other):
        if isinstance(other, GridSignal):
            same_geometry(self, other)
            return self.with_samples(self.samples * other.samples)
        return self.with_samples(self.samples * other)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Interval:
    """Interval given by its center and (positive) width."""

    center: float
    width: float

    def __post_init__(self):
        if not (np.isfinite(self.width) and self.width > 0):
            raise ValueError("interval width must be positive")

    @classmethod
    def from_endpoints(cls, lo: float, hi: float) -> "Interval":
        return cls(0.5 * (lo + hi), hi - lo)

    @property
    def lo(self) -> float:
        return self.center - 0.5 * self.width

    @property
    def hi(self) -> float:
        return self.center + 0.5 * self.width


def same_geometry(f: GridSignal, g: GridSignal) -> None:
    """Raise ``ValueError`` unless both signals live on the same grid."""
    if f.M != g.M or f.spacing != g.spacing or f.origin != g.origin:
        raise ValueError("grid mismatch")


def make_grid(M: int, L: float, origin: float = 0.0) -> GridSignal:
    """Zero signal with ``M`` samples on a box of period ``L``."""
    if not _is_pow2(M):
        raise ValueError(f"M must be a power of two, got {M!r}")
    if not (np.isfinite(L) and L > 0):
        raise ValueError("period must be positive")
    return GridSignal(np.zeros(M, dtype=complex), L / M, origin)


def from_function(fn: Callable, M: int, L: float, origin: float = 0.0) -> GridSignal:
    """Sample ``fn`` on a fresh grid."""
    g = make_grid(M, L, origin)
    return g.with_samples(np.asarray(fn(g.x), dtype=complex))


def from_coefficients(coeffs: np.ndarray, template: GridSignal) -> GridSignal:
    """Synthesize a signal on ``template``'s grid from FFT-ordered coefficients."""
    c = np.asarray(coeffs, dtype=complex)
    if c.shape != (template.M,):
        raise ValueError("coefficient array does not match grid size")
    if template.origin != 0.0:
        c = c * np.exp(2j * np.pi * template.freqs * template.origin)
    return template.with_samples(np.fft.ifft(c) * template.M)


def lp_norm(f: GridSignal, p: float) -> float:
    """Riemann-sum ``L^p`` norm, ``(spacing * sum |f|^p)^(1/p)``."""
    if p == np.inf:
        return float(np.max(np.abs(f.samples)))
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.samples)
    scale = a.max()
    if scale == 0:
        return 0.0
    # rescale first to avoid overflow for large p
    return float(scale * (f.spacing * np.sum((a / scale) ** p)) ** (1.0 / p))


def apply_multiplier(f: GridSignal, symbol: Callable) -> GridSignal:
    """Multiply the spectrum of ``f`` by ``symbol(xi_j)``."""
    m = np.broadcast_to(np.asarray(symbol(f.freqs), dtype=complex), (f.M,))
    if not np.all(np.isfinite(m)):
        raise ValueError("symbol returned non-finite values")
    # origin phases cancel for a diagonal multiplier
    return f.with_samples(np.fft.ifft(np.fft.fft(f.samples) * m))


def check_band(f: GridSignal, lo: float, hi: float) -> None:
    """Raise :class:`BandError` if ``[lo, hi]`` leaves the grid band."""
    ny = f.nyquist
    if lo < -ny or hi >= ny:
        raise BandError(f"window [{lo:g}, {hi:g}] exceeds band (-{ny:g}, {ny:g})")


def project_window(f: GridSignal, I: Interval, w) -> GridSignal:
    """Filter ``f`` by the profile ``w`` rescaled to the interval ``I``.

    The symbol is ``w((xi - c_I) / |I|)``; its support is ``I`` shrunk by the
    profile's support half-width.
    """
    h = w.support * I.width
    check_band(f, I.center - h, I.center + h)
    return apply_multiplier(f, lambda xi: w((xi - I.center) / I.width))


def shift_modulate(f: GridSignal, shift: float, freq: float) -> GridSignal:
    """Return ``f(x - shift) * exp(2 pi i freq x)``.

    The translation is a spectral phase (exact for band-limited signals,
    circular on the period); the modulation is applied at the sample points.
    """
    out = f
    if shift != 0.0:
        out = apply_multiplier(f, lambda xi: np.exp(-2j * np.pi * xi * shift))
    if freq != 0.0:
        out = out.with_samples(out.samples * np.exp(2j * np.pi * freq * f.x))
    return out
