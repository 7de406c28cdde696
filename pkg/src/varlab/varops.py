"""Square functions, restricted variations, bilinear tile multipliers, maximal adjoints.

All operators act on :class:`~varlab.spectral_grid.GridSignal` inputs.  The
quadratic and bilinear ones never form a pointwise product on the input
grid.  Each frequency window contributes a short coefficient vector, and the
spectrum of a product of two windowed pieces is the (small) convolution of
the two vectors.  These spectra are scattered into one output spectrum, which
is synthesized once on an output grid whose size only needs to cover the
output band.  On the torus this is exact whenever the windows sit on grid
frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral_grid import (
    BandError,
    GridSignal,
    Interval,
    apply_multiplier,
    from_coefficients,
    make_grid,
    same_geometry,
)

__all__ = [
    "FrequencySquare",
    "TileSet",
    "ScaleFamily",
    "make_tiles",
    "lambda_scale_threshold",
    "v2_translation_square",
    "v2res",
    "default_r_set",
    "bilinear_tm",
    "bilinear_scale_sup",
    "maximal_adjoint",
    "square_function",
    "lacunary_atom_product",
    "atom_decay_constant",
]


# ---------------------------------------------------------------------------
# spectral bookkeeping

_EMPTY_ENERGY = 1e-28


class _Spectrum:
    """Centered coefficient array of a signal with an energy prefix sum."""

    def __init__(self, f: GridSignal):
        self.f = f
        self.M = f.M
        self.L = f.period
        self.c = np.fft.fftshift(f.coefficients())  # index j + M/2
        e = np.abs(self.c) ** 2
        self.energy = np.concatenate([[0.0], np.cumsum(e)])
        self.nyq = f.nyquist

    def windows(self, centers, width, prof, weights=None):
        """Coefficient blocks of the windows ``prof((xi - c)/width)``.

        Returns ``(keep, starts, blocks)`` where ``keep`` indexes the windows
        that carry nonzero energy, ``starts`` the first frequency index of
        each block and ``blocks`` the windowed coefficients.
        """
        centers = np.atleast_1d(np.asarray(centers, dtype=float))
        s = prof.support * width
        lo_f, hi_f = centers - s, centers + s
        L, M = self.L, self.M
        starts = np.floor(lo_f * L).astype(np.int64)
        n = int(np.ceil(2 * s * L)) + 2
        # energy test on the closed index range actually touched
        a = np.clip(starts + M // 2, 0, M)
        b = np.clip(starts + n + M // 2, 0, M)
        # windows holding only rounding noise count as empty
        tol = _EMPTY_ENERGY * self.energy[-1]
        keep = np.nonzero(self.energy[b] - self.energy[a] > tol)[0]
        if keep.size == 0:
            return keep, starts[:0], np.zeros((0, n), dtype=complex)
        if np.any(lo_f[keep] < -self.nyq) or np.any(hi_f[keep] >= self.nyq):
            raise BandError("frequency window exceeds the grid band")
        starts = starts[keep]
        j = starts[:, None] + np.arange(n)[None, :]
        vals = prof((j / L - centers[keep, None]) / width)
        blocks = self.c[np.clip(j + M // 2, 0, M - 1)] * vals
        if weights is not None:
            blocks = blocks * np.asarray(weights)[keep, None]
        return keep, starts, blocks


def _block_products(sa, A, sb, B):
    """Spectra of products of paired blocks: starts and convolved rows."""
    na, nb = A.shape[1], B.shape[1]
    nf = 1 << int(np.ceil(np.log2(max(na + nb - 1, 1))))
    C = np.fft.ifft(np.fft.fft(A, nf, axis=1) * np.fft.fft(B, nf, axis=1), axis=1)
    return sa + sb, C[:, : na + nb - 1]


class _Accumulator:
    """Dense (group, frequency) spectra filled by scatter-adding coefficient rows."""

    def __init__(self, groups: int, out_m: int, L: float):
        self.groups = groups
        self.out_m = out_m
        self.L = L
        self.spec = np.zeros(groups * out_m, dtype=complex)

    def add(self, group, starts, rows):
        if rows.size == 0:
            return
        m = self.out_m
        n = rows.shape[1]
        d = starts[:, None] + np.arange(n)[None, :]
        nz = rows != 0
        if np.any(nz) and (d[nz].min() < -m // 2 or d[nz].max() >= m // 2):
            raise BandError("output spectrum exceeds the output grid band")
        g = np.asarray(group, dtype=np.int64)
        g = g[:, None] if g.ndim else g
        idx = (g * m + np.mod(d, m)).ravel()
        v = rows.ravel()
        size = self.spec.size
        self.spec += np.bincount(idx, weights=v.real, minlength=size)
        self.spec += 1j * np.bincount(idx, weights=v.imag, minlength=size)

    def synthesize(self, origin: float = 0.0):
        """Return an array ``(groups, out_m)`` of output samples."""
        m = self.out_m
        spec = self.spec.reshape(self.groups, m)
        if origin != 0.0:
            fr = np.fft.fftfreq(m, 1.0 / m) / self.L
            spec = spec * np.exp(2j * np.pi * fr * origin)[None, :]
        return np.fft.ifft(spec, axis=1) * m


def _out_grid(f: GridSignal, out_m):
    m = f.M if out_m is None else int(out_m)
    return make_grid(m, f.period, f.origin)


def _autocorr(starts, blocks):
    """Coefficient rows of ``|g|^2`` for each windowed piece ``g``."""
    n = blocks.shape[1]
    rev = np.conj(blocks[:, ::-1])
    return _block_products(starts, blocks, -(starts + n - 1), rev)


# ---------------------------------------------------------------------------
# square functions over translated interval families

def v2_translation_square(f: GridSignal, K_max: int, tau_set, w, *, out_m: int | None = None,
                          k_min: int = 1) -> GridSignal:
    """Maximal translation square function over the families ``I_k + tau``.

    ``I_k = {[k + l/k, k + (l+1)/k] : 0 <= l < k}`` for ``k_min <= k <= K_max``.
    The output is ``sup_tau (sum_I |f * w_{I+tau}|^2)^(1/2)`` sampled on a
    grid with ``out_m`` points (default: the input size).
    """
    if K_max < 2:
        raise ValueError("K_max must be >= 2")
    taus = np.sort(np.asarray(list(tau_set), dtype=float))
    if taus.size == 0:
        raise ValueError("tau_set must be nonempty")
    if K_max + 1 + taus.max() >= f.nyquist or k_min + taus.min() < -f.nyquist:
        raise BandError("interval family exceeds the grid band")
    sp = _Spectrum(f)
    out = _out_grid(f, out_m)
    acc = _Accumulator(taus.size, out.M, f.period)
    for k in range(k_min, K_max + 1):
        l = np.arange(k)
        cen = (k + (l + 0.5) / k)[None, :] + taus[:, None]
        grp = np.repeat(np.arange(taus.size), k)
        keep, st, bl = sp.windows(cen.ravel(), 1.0 / k, w)
        if keep.size:
            s2, rows = _autocorr(st, bl)
            acc.add(grp[keep], s2, rows)
    sq = acc.synthesize(out.origin).real
    return out.with_samples(np.sqrt(np.maximum(sq.max(axis=0), 0.0)))


def default_r_set(r_min: float, r_max: float, substeps: int = 4):
    """Dyadic scales refined by ``substeps`` geometric sub-steps per octave."""
    lo = int(np.floor(np.log2(r_min)))
    hi = int(np.ceil(np.log2(r_max)))
    r = [2.0 ** (e + s / substeps) for e in range(lo, hi + 1) for s in range(substeps)]
    return [x for x in r if r_min <= x <= r_max]


def v2res(f: GridSignal, R_set, alpha_count: int, w, *, out_m: int | None = None) -> GridSignal:
    """Restricted 2-variation over equally spaced window families.

    ``sup_R sup_alpha (sum_j |f * w_[alpha + jR, alpha + (j+1)R]|^2)^(1/2)``
    with ``alpha`` sampled at ``i R / alpha_count``.
    """
    R_set = sorted(float(r) for r in R_set)
    if not R_set:
        raise ValueError("R_set must be nonempty")
    if alpha_count < 1:
        raise ValueError("alpha_count must be >= 1")
    if R_set[0] < 1.0 / f.period:
        raise ValueError("R below one frequency-grid step")
    sp = _Spectrum(f)
    nyq = f.nyquist
    out = _out_grid(f, out_m)
    best = np.zeros(out.M)
    for R in R_set:
        alphas = R * np.arange(alpha_count) / alpha_count
        j = np.arange(int(np.floor(-nyq / R)) - 1, int(np.ceil(nyq / R)) + 1)
        cen = alphas[:, None] + (j + 0.5)[None, :] * R
        grp = np.repeat(np.arange(alpha_count), j.size)
        acc = _Accumulator(alpha_count, out.M, f.period)
        keep, st, bl = sp.windows(cen.ravel(), R, w)
        if keep.size:
            s2, rows = _autocorr(st, bl)
            acc.add(grp[keep], s2, rows)
        sq = acc.synthesize(out.origin).real
        best = np.maximum(best, sq.max(axis=0))
    return out.with_samples(np.sqrt(np.maximum(best, 0.0)))


# ---------------------------------------------------------------------------
# tiles

@dataclass(frozen=True)
class FrequencySquare:
    """A frequency square ``P1 x P2`` at scale ``2^-k`` with a phase weight on P2."""

    P1: Interval
    P2: Interval
    scale_exp: int
    weight: complex = 1.0

    def __post_init__(self):
        side = 2.0 ** (-self.scale_exp)
        for P in (self.P1, self.P2):
            if abs(P.width - side) > 1e-12 * side:
                raise ValueError("square sides must equal 2^-k")


@dataclass(frozen=True)
class ScaleFamily:
    sigmas: tuple

    def __post_init__(self):
        s = tuple(float(x) for x in self.sigmas)
        if not s or any(x <= 0 for x in s) or any(b <= a for a, b in zip(s, s[1:])):
            raise ValueError("sigmas must be positive and strictly increasing")
        object.__setattr__(self, "sigmas", s)

    def __iter__(self):
        return iter(self.sigmas)

    def __len__(self):
        return len(self.sigmas)


@dataclass(eq=False)
class TileSet:
    """Frequency squares stored as per-square arrays.

    Attributes
    ----------
    k, c1, c2, weight : ndarray
        Scale exponent, centers of ``P1`` and ``P2`` and the complex weight
        attached to the ``P2`` packet.
    """

    family: str
    gamma: float
    k_range: tuple
    orientation: str
    k: np.ndarray = field(repr=False)
    c1: np.ndarray = field(repr=False)
    c2: np.ndarray = field(repr=False)
    weight: np.ndarray = field(repr=False)
    threshold: int | None = None

    def __len__(self):
        return int(self.k.size)

    @property
    def squares(self):
        return tuple(
            FrequencySquare(Interval(a, 2.0 ** -int(k)), Interval(b, 2.0 ** -int(k)), int(k), complex(w))
            for k, a, b, w in zip(self.k, self.c1, self.c2, self.weight)
        )

    def scales(self):
        return sorted(set(int(k) for k in self.k))


def lambda_scale_threshold(gamma: float, eps: float = 0.01, k_max: int = 60) -> int:
    """Smallest ``k >= 8`` for which every square of the lambda family sits
    strictly inside the plateaus ``[m - 1/2 + eps, m + 1/2 - eps]`` (and the
    reflected plateau for ``P2``)."""
    from fractions import Fraction as Fr

    g = Fr(gamma).limit_denominator(10 ** 9)
    e = Fr(eps).limit_denominator(10 ** 9)
    for k in range(8, k_max + 1):
        h = Fr(1, 2 ** k)
        lam = 2 ** (k - 8) - 1 if k > 8 else 0
        half = h / 2
        ok = True
        for sgn in (-1, 1):
            lam_s = sgn * lam
            # P1 offset from m and P2 offset from -m
            o1 = lam_s * h
            o2 = -lam_s * h + g * h
            for o in (o1, o2):
                if not (o - half >= -Fr(1, 2) + e and o + half <= Fr(1, 2) - e):
                    ok = False
        if ok:
            return k
    raise ValueError("no admissible scale threshold found")


def make_tiles(family: str, gamma: float = 100.0, k_range=(0, 0), m_range=None,
               orientation: str = "reflected", *, band: float | None = None) -> TileSet:
    """Generate a tile family.

    ``section7_periodic``: ``P1 = [m 2^-k, (m+1) 2^-k]`` centered at
    ``m 2^-k`` and ``P2`` centered at ``-m 2^-k + gamma 2^-k`` (reflected) or
    ``m 2^-k + gamma 2^-k`` (literal).  ``m_range`` may be replaced by
    ``band``, which keeps the ``m`` whose squares lie inside ``[-band, band]``.

    ``section3_lambda``: ``P1`` centered at ``m + lambda 2^-k`` and ``P2`` at
    ``-m - lambda 2^-k + gamma 2^-k`` with ``|lambda| < 2^(k-8)``; the ``P2``
    packet carries the phase ``exp(2 pi i gamma 2^-k m)``.  Requires ``k >= 8``.
    """
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    if k_hi < k_lo:
        raise ValueError("empty k range")
    if orientation not in ("reflected", "literal"):
        raise ValueError("orientation must be 'reflected' or 'literal'")
    ks, c1s, c2s, ws = [], [], [], []
    expected = 0
    thr = None
    if family == "section7_periodic":
        sgn = -1.0 if orientation == "reflected" else 1.0
        for k in range(k_lo, k_hi + 1):
            h = 2.0 ** -k
            if m_range is not None:
                m = np.arange(int(m_range[0]), int(m_range[1]) + 1)
            elif band is not None:
                top = int(np.floor((band - h / 2) / h))
                m = np.arange(-top, top + 1)
                c2 = sgn * m * h + gamma * h
                m = m[np.abs(c2) + h / 2 <= band]
            else:
                raise ValueError("m_range or band required")
            if m.size == 0:
                raise ValueError("empty m range")
            expected += m.size
            ks.append(np.full(m.size, k))
            c1s.append(m * h)
            c2s.append(sgn * m * h + gamma * h)
            ws.append(np.ones(m.size, dtype=complex))
    elif family == "section3_lambda":
        if k_lo < 8:
            raise ValueError("the lambda family is defined for k >= 8")
        if m_range is None:
            raise ValueError("m_range required")
        m = np.arange(int(m_range[0]), int(m_range[1]) + 1)
        if m.size == 0:
            raise ValueError("empty m range")
        thr = lambda_scale_threshold(gamma)
        for k in range(k_lo, k_hi + 1):
            h = 2.0 ** -k
            lam_max = 2 ** (k - 8)
            lam = np.arange(-lam_max + 1, lam_max)
            mm, ll = np.meshgrid(m, lam, indexing="ij")
            mm, ll = mm.ravel(), ll.ravel()
            expected += m.size * (2 * lam_max - 1)
            ks.append(np.full(mm.size, k))
            c1s.append(mm + ll * h)
            c2s.append(-mm - ll * h + gamma * h)
            ws.append(np.exp(2j * np.pi * gamma * h * mm))
    else:
        raise ValueError(f"unknown tile family {family!r}")
    ts = TileSet(family, float(gamma), (k_lo, k_hi), orientation,
                 np.concatenate(ks), np.concatenate(c1s).astype(float),
                 np.concatenate(c2s).astype(float), np.concatenate(ws), thr)
    assert len(ts) == expected
    return ts


def _tile_scale_products(sp1, sp2, c1, c2, weight, k, w1, w2, acc, group):
    h = 2.0 ** -k
    keep1, s1, A = sp1.windows(c1, h, w1)
    if keep1.size == 0:
        return
    keep2, s2, B = sp2.windows(c2[keep1], h, w2, weight[keep1])
    if keep2.size == 0:
        return
    st, rows = _block_products(s1[keep2], A[keep2], s2, B)
    acc.add(group, st, rows)


def bilinear_tm(f1: GridSignal, f2: GridSignal, tiles: TileSet, w1, w2, mode: str = "full_sum",
                *, out_m: int | None = None):
    """Bilinear multiplier ``sum_P (f1 * w_P1) (f2 * w_P2)`` over a tile set.

    Returns one signal (``full_sum``) or a dict ``{k: signal}`` (``per_scale``).
    """
    same_geometry(f1, f2)
    if mode not in ("full_sum", "per_scale"):
        raise ValueError("mode must be 'full_sum' or 'per_scale'")
    sp1, sp2 = _Spectrum(f1), _Spectrum(f2)
    scales = tiles.scales()
    out = _out_grid(f1, out_m)
    acc = _Accumulator(len(scales), out.M, f1.period)
    for g, k in enumerate(scales):
        sel = tiles.k == k
        _tile_scale_products(sp1, sp2, tiles.c1[sel], tiles.c2[sel], tiles.weight[sel], k, w1, w2, acc, g)
    pieces = acc.synthesize(out.origin)
    if mode == "per_scale":
        return {k: out.with_samples(pieces[g]) for g, k in enumerate(scales)}
    return out.with_samples(pieces.sum(axis=0))


def bilinear_scale_sup(f1: GridSignal, f2: GridSignal, k_range, w, *, out_m: int | None = None,
                       return_terms: bool = False):
    """``sup_k |sum_{|P| = 2^k} (f1 * w_P)(f2 * w_{-P})|`` over dyadic intervals ``P``."""
    same_geometry(f1, f2)
    ks = list(range(int(k_range[0]), int(k_range[1]) + 1))
    if not ks:
        raise ValueError("empty k range")
    sp1, sp2 = _Spectrum(f1), _Spectrum(f2)
    nyq = f1.nyquist
    out = _out_grid(f1, out_m)
    acc = _Accumulator(len(ks), out.M, f1.period)
    for g, k in enumerate(ks):
        h = 2.0 ** k
        if h * w.support * 2 > 2 * nyq:
            raise BandError("scale exceeds the grid band")
        m = np.arange(int(np.floor(-nyq / h)) - 1, int(np.ceil(nyq / h)) + 1)
        cen = (m + 0.5) * h
        keep1, s1, A = sp1.windows(cen, h, w)
        if keep1.size == 0:
            continue
        keep2, s2, B = sp2.windows(-cen[keep1], h, w)
        if keep2.size == 0:
            continue
        st, rows = _block_products(s1[keep2], A[keep2], s2, B)
        acc.add(g, st, rows)
    terms = acc.synthesize(out.origin)
    res = out.with_samples(np.abs(terms).max(axis=0))
    if return_terms:
        return res, {k: out.with_samples(terms[g]) for g, k in enumerate(ks)}
    return res


# ---------------------------------------------------------------------------
# maximal adjoint

def _periodic_profile(eta, u):
    return eta(u - np.round(u))


def maximal_adjoint(f: GridSignal, g: GridSignal, sigmas, eta, method: str = "frequency_side",
                    *, return_sigma: bool = False):
    """``sup_sigma |(sum_tau f * eta_{I_tau^sigma}) (g * eta_{I_0^sigma})|``.

    ``I_tau^sigma`` has center ``tau sigma`` and width ``sigma``.  The ``tau``
    sum is the periodized multiplier ``sum_tau eta_hat(xi/sigma - tau)``;
    ``time_side`` evaluates it through the coefficient list
    ``sum_n c_n f(x - n/sigma)`` of the nonnegative kernel.
    """
    same_geometry(f, g)
    sig = ScaleFamily(tuple(sigmas)) if not isinstance(sigmas, ScaleFamily) else sigmas
    if sig.sigmas[0] < 1.0 / f.period:
        raise ValueError("sigma smaller than one frequency-grid step")
    if method not in ("frequency_side", "time_side"):
        raise ValueError("method must be 'frequency_side' or 'time_side'")
    if method == "time_side" and eta.coefficients is None:
        raise ValueError("time_side needs a profile with a coefficient list")
    best = np.zeros(f.M)
    arg = np.zeros(f.M)
    fc = np.fft.fft(f.samples)
    for s in sig:
        gs = apply_multiplier(g, lambda xi: eta(xi / s)).samples
        if method == "frequency_side":
            fs = np.fft.ifft(fc * _periodic_profile(eta, f.freqs / s))
        else:
            fs = _translate_sum(f, fc, eta.coefficients, 1.0 / s)
        v = np.abs(fs * gs)
        upd = v > best
        arg[upd] = s
        best = np.maximum(best, v)
    out = f.with_samples(best)
    return (out, arg) if return_sigma else out


def _translate_sum(f, fc, coeffs, step):
    """``sum_n c_{-n} f(x - n step)`` with ``n`` running over the list."""
    nmax = (coeffs.size - 1) // 2
    r = step / f.spacing
    acc = np.zeros(f.M, dtype=complex)
    integral = abs(r - round(r)) < 1e-12
    for n in range(-nmax, nmax + 1):
        c = coeffs[nmax - n]
        if c == 0:
            continue
        if integral:
            acc += c * np.roll(f.samples, n * int(round(r)))
        else:
            acc += c * np.fft.ifft(fc * np.exp(-2j * np.pi * f.freqs * n * step))
    return acc


# ---------------------------------------------------------------------------
# Littlewood-Paley

def _lp_weight(u, k):
    from .window_atoms import smoothstep

    up = smoothstep(2.0 * (u - k + 0.25))
    down = 1.0 - smoothstep(2.0 * (u - k - 0.75))
    return np.sqrt(np.clip(up * down, 0.0, 1.0))


def square_function(f: GridSignal, k_range, *, return_pieces: bool = False):
    """``(sum_k |f * psi_k|^2)^(1/2)`` for a smooth dyadic partition.

    ``psi_k_hat(xi)^2`` rises on ``log2|xi| in [k - 1/4, k + 1/4]``, is 1 on
    ``[k + 1/4, k + 3/4]`` and falls on ``[k + 3/4, k + 5/4]``, so the squares
    sum to 1 between the first plateau and the last.
    """
    ks = list(range(int(k_range[0]), int(k_range[1]) + 1))
    if not ks:
        raise ValueError("empty k range")
    if 2.0 ** (ks[-1] + 1.25) >= f.nyquist:
        raise BandError("dyadic band exceeds the grid band")
    fc = np.fft.fft(f.samples)
    xi = np.abs(f.freqs)
    with np.errstate(divide="ignore"):
        u = np.where(xi > 0, np.log2(np.where(xi > 0, xi, 1.0)), -np.inf)
    acc = np.zeros(f.M)
    pieces = {}
    for k in ks:
        piece = np.fft.ifft(fc * _lp_weight(u, k))
        acc += np.abs(piece) ** 2
        if return_pieces:
            pieces[k] = f.with_samples(piece)
    out = f.with_samples(np.sqrt(acc))
    return (out, pieces) if return_pieces else out


# ---------------------------------------------------------------------------
# lacunary atom products

def _atom(grid: GridSignal, w, k, center):
    """Time atom ``w_check(2^-k (x - center))`` built from its spectrum."""
    L = grid.period
    xi = grid.freqs
    c = (2.0 ** k / L) * w(2.0 ** k * xi) * np.exp(-2j * np.pi * xi * center)
    return from_coefficients(c, grid)


def lacunary_atom_product(grid: GridSignal, w, k: int, theta: float, shift: float, gamma: float):
    """``a(x - theta) a(x - theta - shift) exp(2 pi i gamma 2^-k (x - theta - shift))``
    with ``a(y) = w_check(2^-k y)``."""
    a1 = _atom(grid, w, k, theta)
    a2 = _atom(grid, w, k, theta + shift)
    ph = np.exp(2j * np.pi * gamma * 2.0 ** -k * (grid.x - theta - shift))
    return grid.with_samples(a1.samples * a2.samples * ph)


def atom_decay_constant(w, s_max: float = 16.0, n_s: int = 257, n_y: int = 4001) -> float:
    """``sup_s sup_y |a(y) a(y - s)| (1 + s^2) / a(0)^2`` on the real line."""
    y = np.linspace(-s_max - 8, s_max + 8, n_y)
    a = w.inverse_transform(y)
    a0 = float(w.inverse_transform(np.array([0.0]))[0]) ** 2
    dy = y[1] - y[0]
    best = 0.0
    for s in np.linspace(0, s_max, n_s):
        sh = int(round(s / dy))
        prod = np.abs(a[sh:] * a[: a.size - sh]) if sh else a ** 2
        best = max(best, float(prod.max()) * (1 + (sh * dy) ** 2) / a0)
    return best
