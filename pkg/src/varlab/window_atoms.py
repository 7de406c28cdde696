"""Smooth frequency windows, tent and Fejer kernels, exponential-sum norms.

Every profile is a real even function of the frequency variable with
compact support.  On construction each profile measures the constants that
downstream experiments rely on (lower bounds of its inverse transform,
decay sups, coefficient lists) and stores them in ``certified_constants``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .spectral_grid import GridSignal

__all__ = [
    "KINDS",
    "WindowProfile",
    "CertificationError",
    "build_profile",
    "bump",
    "smoothstep",
    "fejer",
    "fejer_bound_constant",
    "tent",
    "tent_weights",
    "exp_sum_norm",
    "wiener_norm",
]

KINDS = ("smooth_indicator", "plateau_phi", "positive_Phi", "nonneg_eta", "partition_bar1")
FORMAT_VERSION = 1

# half-width of the nominal interval for each kind
_NOMINAL = {"partition_bar1": 0.75}
# time-side coefficient list length for the nonnegative kernel
_N_COEFF = 128


class CertificationError(RuntimeError):
    """A constructed profile violates one of its pointwise bounds."""


def bump(t):
    """Canonical bump ``exp(1 - 1/(1 - t^2))`` on ``(-1, 1)``, zero outside."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


def smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, and S(u) + S(1-u) = 1."""
    u = np.asarray(u, dtype=float)
    a = np.zeros_like(u)
    b = np.zeros_like(u)
    m = u > 0
    a[m] = np.exp(-1.0 / u[m])
    m = u < 1
    b[m] = np.exp(-1.0 / (1.0 - u[m]))
    return a / (a + b)


def _gl_panels(lo, hi, panels, order=48):
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    u, w = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * u[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _small_bump(xi):
    # bump squeezed onto [-1/4, 1/4]
    return bump(4.0 * np.asarray(xi, dtype=float))


@lru_cache(maxsize=None)
def _small_bump_quad():
    return _gl_panels(-0.25, 0.25, 8, 48)


def _small_bump_inverse(x):
    """Inverse transform of the squeezed bump (real, even)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nodes, weights = _small_bump_quad()
    vals = _small_bump(nodes) * weights
    out = np.empty(x.shape)
    flat = x.ravel()
    res = out.ravel()
    for s in range(0, flat.size, 2048):
        blk = flat[s:s + 2048]
        res[s:s + 2048] = np.cos(2 * np.pi * np.outer(blk, nodes)) @ vals
    return res.reshape(x.shape)


@lru_cache(maxsize=None)
def _autoconv_table(n_tab: int):
    """Tabulate (b * b)(xi) for the squeezed bump on [0, 1/2]."""
    xi = np.linspace(0.0, 0.5, n_tab)
    u, w = leggauss(160)
    vals = np.empty(n_tab)
    for i, x in enumerate(xi):
        lo, hi = x - 0.25, 0.25
        if hi <= lo:
            vals[i] = 0.0
            continue
        s = 0.5 * (hi + lo) + 0.5 * (hi - lo) * u
        vals[i] = 0.5 * (hi - lo) * np.sum(w * _small_bump(s) * _small_bump(x - s))
    vals[-1] = 0.0
    return xi, vals


@dataclass(eq=False)
class WindowProfile:
    """A certified smooth frequency window.

    Call the profile on an array of frequencies to evaluate it.  Values
    vanish outside ``[-support, support]``.

    Attributes
    ----------
    kind : str
        One of :data:`KINDS`.
    resolution : int
        Number of stored frequency samples over the nominal interval.
    params : dict
        Recipe parameters (plateau half-width, amplitude ``A``).
    freq_samples : ndarray
        Profile values on ``linspace(-h, h, resolution)`` where ``h`` is
        the nominal half-width.
    certified_constants : dict
        Named bounds measured at construction.
    coefficients : ndarray or None
        For ``nonneg_eta``: ``c_n = eta(-n)`` for ``n = -128..128``.
    """

    kind: str
    resolution: int
    params: dict
    freq_samples: np.ndarray = field(repr=False)
    certified_constants: dict = field(default_factory=dict)
    coefficients: np.ndarray | None = field(default=None, repr=False)
    _spline: object = field(default=None, repr=False)

    @property
    def nominal(self) -> float:
        return _NOMINAL.get(self.kind, 0.5)

    @property
    def support(self) -> float:
        """Half-width of the closed support."""
        if self.kind == "smooth_indicator":
            return 0.25
        return self.nominal

    @property
    def freq_grid(self) -> np.ndarray:
        h = self.nominal
        return np.linspace(-h, h, self.resolution)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        k = self.kind
        if k == "smooth_indicator":
            return _small_bump(xi)
        if k == "plateau_phi":
            p = self.params["plateau"]
            return smoothstep((0.5 - np.abs(xi)) / (0.5 - p))
        if k == "partition_bar1":
            return smoothstep(2.0 * (0.75 - np.abs(xi)))
        a = np.abs(xi)
        out = np.zeros_like(a)
        m = a < 0.5
        out[m] = self.params["A"] * self._spline(a[m])
        return out

    def inverse_transform(self, x):
        """``w_check(x) = int w(xi) exp(2 pi i xi x) d xi`` (real since w is even)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "smooth_indicator":
            return _small_bump_inverse(x)
        if self.kind in ("positive_Phi", "nonneg_eta"):
            return self.params["A"] * _small_bump_inverse(x) ** 2
        nodes, weights = _gl_panels(-self.support, self.support, 24, 48)
        vals = self(nodes) * weights
        x1 = np.atleast_1d(x)
        out = np.concatenate([np.cos(2 * np.pi * np.outer(b, nodes)) @ vals
                              for b in np.array_split(x1.ravel(), max(1, x1.size // 2048))])
        return out.reshape(x.shape)

    def inverse_by_table(self, x):
        """Inverse transform from the tabulated samples (trapezoid rule)."""
        xi = self.freq_grid
        vals = self(xi)
        d = xi[1] - xi[0]
        x1 = np.atleast_1d(np.asarray(x, dtype=float))
        return (np.cos(2 * np.pi * np.outer(x1, xi)) @ vals) * d

    def coefficient_dict(self) -> dict:
        if self.coefficients is None:
            return {}
        n = np.arange(-_N_COEFF, _N_COEFF + 1)
        return dict(zip(n.tolist(), self.coefficients.tolist()))

    # serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "format": "varlab.window_profile",
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "resolution": self.resolution,
            "params": dict(self.params),
            "freq_interval": [-self.nominal, self.nominal],
            "freq_samples": self.freq_samples.tolist(),
            "certified_constants": dict(self.certified_constants),
        }
        if self.coefficients is not None:
            d["fourier_coefficients"] = self.coefficients.tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "WindowProfile":
        """Rebuild from JSON and check that the stored samples reproduce."""
        d = json.loads(text)
        if d.get("format") != "varlab.window_profile":
            raise ValueError("not a window profile document")
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported profile version {d.get('version')}")
        kw = {}
        if d["kind"] == "plateau_phi":
            kw["plateau"] = d["params"]["plateau"]
        prof = build_profile(d["kind"], d["resolution"], **kw)
        if not np.array_equal(prof.freq_samples, np.asarray(d["freq_samples"])):
            raise ValueError("stored samples do not match the rebuilt profile")
        return prof


def _decay_constants(prof: WindowProfile, x_max=32.0, n=4097) -> dict:
    x = np.linspace(0.0, x_max, n)
    v = np.abs(prof.inverse_transform(x))
    return {f"decay_C{N}": float(np.max((1 + x) ** N * v)) for N in range(9)}


def build_profile(kind: str, grid_resolution: int = 1024, *, plateau: float = 0.25) -> WindowProfile:
    """Construct and certify a window profile.

    Parameters
    ----------
    kind : str
        ``smooth_indicator`` (squeezed bump), ``plateau_phi`` (1 on
        ``[-plateau, plateau]``, 0 outside ``[-1/2, 1/2]``), ``positive_Phi``
        or ``nonneg_eta`` (scaled autoconvolution of the squeezed bump, whose
        inverse transform is a nonnegative square), ``partition_bar1``
        (partition of unity with support ``[-3/4, 3/4]``).
    grid_resolution : int
        Number of stored samples, at least 256.
    plateau : float
        Plateau half-width for ``plateau_phi``; must lie in ``(0, 1/2)``.

    Raises
    ------
    CertificationError
        If a measured bound fails.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown profile kind {kind!r}")
    if grid_resolution < 256:
        raise ValueError("grid_resolution must be at least 256")
    params: dict = {}
    spline = None
    if kind == "plateau_phi":
        if not 0 < plateau < 0.5:
            raise ValueError("plateau must lie in (0, 1/2)")
        params["plateau"] = float(plateau)
    if kind in ("positive_Phi", "nonneg_eta"):
        xi_t, v_t = _autoconv_table(max(8193, grid_resolution + 1))
        spline = CubicSpline(xi_t, v_t, bc_type=((1, 0.0), (1, 0.0)))
        b0 = _small_bump_inverse(np.linspace(-1, 1, 2001))
        if kind == "positive_Phi":
            # force A * min b_check^2 = 2 > 1 on [-1, 1]
            params["A"] = float(2.0 / np.min(b0 ** 2))
        else:
            params["A"] = float(1.0 / np.ravel(_small_bump_inverse(0.0))[0] ** 2)
    prof = WindowProfile(kind, int(grid_resolution), params, np.empty(0), {}, None, spline)
    prof.freq_samples = np.asarray(prof(prof.freq_grid), dtype=float)
    _certify(prof)
    return prof


def _certify(prof: WindowProfile) -> None:
    cc = prof.certified_constants
    xi = np.linspace(-1.0, 1.0, 8001)
    v = prof(xi)
    outside = np.abs(xi) > prof.nominal
    cc["outside_max"] = float(np.max(np.abs(v[outside]), initial=0.0))
    if cc["outside_max"] > 1e-12:
        raise CertificationError("profile leaks outside its nominal interval")
    k = prof.kind
    if k == "smooth_indicator":
        x = np.linspace(-2.0, 2.0, 4001)
        c_min = float(np.min(np.abs(prof.inverse_transform(x))))
        cc["c_min"] = c_min
        cc["value_at_zero"] = float(prof(0.0))
        if not c_min > 0:
            raise CertificationError("inverse transform vanishes on [-2, 2]")
    elif k == "plateau_phi":
        p = prof.params["plateau"]
        flat = np.abs(xi) <= p
        cc["plateau_error"] = float(np.max(np.abs(v[flat] - 1.0)))
        cc["value_min"] = float(v.min())
        cc["value_max"] = float(v.max())
        if cc["plateau_error"] > 0 or v.min() < 0 or v.max() > 1:
            raise CertificationError("plateau profile out of bounds")
        nodes, weights = _gl_panels(-0.5, 0.5, 24, 48)
        cc["l2_norm"] = float(np.sqrt(np.sum(weights * prof(nodes) ** 2)))
    elif k in ("positive_Phi", "nonneg_eta"):
        cc["A"] = prof.params["A"]
        x = np.linspace(-1.0, 1.0, 2001)
        t = prof.inverse_transform(x)
        tab = prof.inverse_by_table(x)
        cc["table_consistency"] = float(np.max(np.abs(t - tab)) / np.max(np.abs(t)))
        if cc["table_consistency"] > 1e-8:
            raise CertificationError("tabulated profile disagrees with its recipe")
        if k == "positive_Phi":
            cc["min_on_unit"] = float(t.min())
            if not t.min() > 1:
                raise CertificationError("inverse transform not > 1 on [-1, 1]")
        else:
            cc["c_eta"] = float(t.min())
            n = np.arange(-_N_COEFF, _N_COEFF + 1)
            c = prof.inverse_transform(-n.astype(float))
            prof.coefficients = c
            cc["c_0"] = float(c[_N_COEFF])
            cc["c_1"] = float(c[_N_COEFF + 1])
            cc["coeff_sum"] = float(np.sum(c))
            cc["coeff_tail"] = float(c[-1] / c[_N_COEFF])
            # Poisson: the coefficient sum equals the profile at 0
            cc["poisson_defect"] = float(abs(np.sum(c) - prof(0.0)))
            xs = np.linspace(-64, 64, 12801)
            cc["eta_grid_min"] = float(prof.inverse_transform(xs).min())
            if not (cc["c_eta"] > 0 and cc["c_1"] > 0 and np.all(c >= 0) and cc["eta_grid_min"] >= 0):
                raise CertificationError("nonnegative kernel bounds fail")
            if cc["poisson_defect"] > 1e-9:
                raise CertificationError("coefficient list does not reproduce the profile")
    elif k == "partition_bar1":
        xs = np.linspace(-0.5, 0.5, 4097)
        tot = sum(prof(xs - n) for n in range(-2, 3))
        cc["partition_error"] = float(np.max(np.abs(tot - 1)))
        inner = np.abs(xi) <= 0.25
        cc["inner_error"] = float(np.max(np.abs(v[inner] - 1)))
        if cc["partition_error"] > 1e-12 or cc["inner_error"] > 0 or v.min() < 0 or v.max() > 1:
            raise CertificationError("partition of unity fails")
    cc.update(_decay_constants(prof))


# Fejer kernel and tents -----------------------------------------------------

def fejer(k: int, t):
    """Fejer kernel ``sum_{-2^(k-1) <= g < 2^(k-1)} (1 - 2|g| 2^-k) e(g t)``.

    Equals the classical kernel of order ``n = 2^(k-1)``,
    ``(1/n) (sin(pi n t) / sin(pi t))^2``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = 2 ** (k - 1)
    t = np.asarray(t, dtype=float)
    r = t - np.round(t)
    s = np.sin(np.pi * r)
    safe = np.where(r == 0, 1.0, s)
    out = np.where(r == 0, float(n), (np.sin(np.pi * n * r) / safe) ** 2 / n)
    return out if out.ndim else float(out)


def fejer_bound_constant(k_values=range(1, 13), samples: int = 20001) -> float:
    """Measured ``C`` with ``F(t) <= C 2^k / (1 + (2^k |t|)^2)`` for ``|t| <= 1/2``."""
    t = np.linspace(-0.5, 0.5, samples)
    c = 0.0
    for k in k_values:
        n2 = 2.0 ** k
        c = max(c, float(np.max(fejer(k, t) * (1 + (n2 * t) ** 2) / n2)))
    return c


def tent(x):
    """Periodic tent ``T`` and its half-period shift; ``T + T_shifted = 1``."""
    x = np.asarray(x, dtype=float)
    d = np.abs(x - np.round(x))
    T = 1.0 - 2.0 * d
    Ts = 1.0 - T
    if T.ndim == 0:
        return float(T), float(Ts)
    return T, Ts


def tent_weights(Q):
    """Tent weights ``(a, b)`` of a frequency square, evaluated at ``c_P1 - |P|/2``."""
    return tent(Q.P1.center - 0.5 * Q.P1.width)


# Norms ----------------------------------------------------------------------

def exp_sum_norm(progression, p_prime: float, rtol: float = 1e-6) -> float:
    """``L^p'`` norm on the unit torus of an exponential sum over a progression.

    Parameters
    ----------
    progression : tuple
        ``(start, step, length)``; the frequencies are ``start + step*k``.
    p_prime : float
        Exponent in ``(1, 2]``.
    """
    start, step, n = progression
    n = int(n)
    if n < 1:
        raise ValueError("length must be >= 1")
    if not 1 < p_prime <= 2:
        raise ValueError("p_prime must lie in (1, 2]")
    if step == 0 or n == 1:
        return float(n)
    a = abs(float(step))
    pts = 64 * n * max(1, int(np.ceil(a)))

    def mean_power(m):
        x = np.arange(m) / m
        s = np.sin(np.pi * a * x)
        num = np.sin(np.pi * a * n * x)
        small = np.abs(s) < 1e-300
        mod = np.abs(np.where(small, float(n), num / np.where(small, 1.0, s)))
        return np.mean(mod ** p_prime)

    prev = mean_power(pts) ** (1.0 / p_prime)
    while True:
        pts *= 2
        cur = mean_power(pts) ** (1.0 / p_prime)
        if abs(cur - prev) <= rtol * abs(cur) or pts > 2 ** 26:
            return float(cur)
        prev = cur


def wiener_norm(f: GridSignal, p1: float) -> float:
    """``||f_hat||_{p1'}`` with ``f_hat(xi_j) = L c_j`` and measure ``1/L``."""
    if not p1 >= 2:
        raise ValueError("p1 must be >= 2")
    q = 1.0 if p1 == np.inf else p1 / (p1 - 1.0)
    L = f.period
    a = L * np.abs(f.coefficients())
    scale = a.max()
    if scale == 0:
        return 0.0
    return float(scale * (np.sum((a / scale) ** q) / L) ** (1.0 / q))
