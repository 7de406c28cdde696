"""Input families that stress the operators, and the combinatorial facts behind them.

Generators are deterministic: equal inputs give bit-identical outputs.
Certificates (:class:`ShiftCover`, :class:`ThetaCertificate`) can be
re-verified independently and serialized to JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .spectral_grid import GridSignal, from_coefficients, make_grid
from .varops import ScaleFamily, maximal_adjoint

__all__ = [
    "ShiftCover",
    "ThetaCertificate",
    "chirp_train",
    "bichirp_pair",
    "greedy_shift",
    "shift_counts",
    "greedy_cover",
    "recount_cover",
    "greedy_cover_continuous",
    "union_measure",
    "orbit_distinct",
    "theta_construct",
    "verify_theta",
    "spike_train",
    "smooth_spike_train",
    "thin_scales",
    "hl_counterexample",
    "seeded_corpus",
]


# ---------------------------------------------------------------------------
# chirp trains

def _chirp_coeffs(N, phi, grid, sign):
    L = grid.period
    if L < 8 * N:
        raise ValueError(f"grid period {L} too small for N={N} (need >= {8 * N})")
    xi = grid.freqs
    n = np.round(sign * xi)
    inside = (n >= 1) & (n <= N)
    c = np.zeros(grid.M, dtype=complex)
    # n-th block: phi_hat(xi - s n) exp(-2 pi i (xi - s n) n) / L
    u = xi[inside] - sign * n[inside]
    c[inside] = phi(u) * np.exp(-2j * np.pi * u * n[inside]) / L
    return c


def chirp_train(N: int, phi, grid: GridSignal) -> GridSignal:
    """``f_N(x) = sum_{n=1}^{N} phi(x - n) exp(2 pi i n x)``, built spectrally.

    ``phi`` is given by its Fourier profile (support in ``[-1/2, 1/2]``), so
    the ``n``-th summand has spectrum inside ``[n - 1/2, n + 1/2]``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N + 0.5 >= grid.nyquist:
        raise ValueError("grid band too small for the chirp train")
    return from_coefficients(_chirp_coeffs(N, phi, grid, 1.0), grid)


def bichirp_pair(N: int, phi, grid: GridSignal):
    """Chirp train and its conjugate-modulated partner ``sum phi(x-n) e^{-2 pi i n x}``."""
    f1 = chirp_train(N, phi, grid)
    f2 = from_coefficients(_chirp_coeffs(N, phi, grid, -1.0), grid)
    return f1, f2


# ---------------------------------------------------------------------------
# greedy covers of [1, 2^k0] by translates of the dyadic orbit

@dataclass
class ShiftCover:
    k0: int
    shifts: list
    covered_measure: float
    target_measure: float
    constant: float
    kind: str = "integer"
    residual: int | None = None

    def to_json(self) -> str:
        d = asdict(self)
        d["shifts"] = [str(s) if isinstance(s, Fraction) else s for s in self.shifts]
        return json.dumps(d, sort_keys=True)


def shift_counts(S, k0: int) -> np.ndarray:
    """``counts[n + 2^k0] = |{2^k + n : 0 <= k < k0} & S|`` for all ``|n| <= 2^k0``."""
    top = 2 ** k0
    mask = np.zeros(3 * top + 2, dtype=np.int64)
    # index i stores membership of integer i - top
    idx = np.asarray(sorted(S), dtype=np.int64)
    mask[idx + top] = 1
    n = np.arange(-top, top + 1)
    counts = np.zeros(n.size, dtype=np.int64)
    for k in range(k0):
        counts += mask[2 ** k + n + top]
    return counts


def greedy_shift(S, k0: int) -> int:
    """Shift ``n`` in ``[-2^k0, 2^k0]`` maximizing ``|(orbit + n) & S|``.

    Ties go to the smallest ``|n|``, then to the negative one.
    """
    S = set(int(s) for s in S)
    if not S:
        raise ValueError("S must be nonempty")
    top = 2 ** k0
    if min(S) < 1 or max(S) > top:
        raise ValueError("S must lie in [1, 2^k0]")
    counts = shift_counts(S, k0)
    n = np.arange(-top, top + 1)
    best = counts.max()
    cand = n[counts == best]
    order = np.lexsort((cand >= 0, np.abs(cand)))
    return int(cand[order[0]])


def recount_cover(k0: int, shifts) -> int:
    """Independent count of ``|U_n (orbit + n) & [1, 2^k0]|``."""
    top = 2 ** k0
    hit = set()
    for n in shifts:
        for k in range(k0):
            v = 2 ** k + int(n)
            if 1 <= v <= top:
                hit.add(v)
    return len(hit)


def greedy_cover(k0: int) -> ShiftCover:
    """Greedy shifts until at most ``2^(k0-1)`` points of ``[1, 2^k0]`` remain."""
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    top = 2 ** k0
    alive = np.ones(top + 1, dtype=bool)
    alive[0] = False
    orbit = 2 ** np.arange(k0)
    shifts = []
    n = 0
    while True:
        shifts.append(n)
        pts = orbit + n
        pts = pts[(pts >= 1) & (pts <= top)]
        alive[pts] = False
        left = int(alive.sum())
        if left <= top // 2:
            break
        n = greedy_shift(np.nonzero(alive)[0].tolist(), k0)
    covered = top - left
    return ShiftCover(k0, shifts, covered, top - top // 2, len(shifts) * k0 / top, "integer", left)


def union_measure(intervals, lo=None, hi=None) -> Fraction:
    """Exact measure of a union of closed intervals, optionally clipped to ``[lo, hi]``."""
    iv = []
    for a, b in intervals:
        a, b = Fraction(a), Fraction(b)
        if lo is not None:
            a = max(a, Fraction(lo))
        if hi is not None:
            b = min(b, Fraction(hi))
        if b > a:
            iv.append((a, b))
    iv.sort()
    total = Fraction(0)
    cur_a = cur_b = None
    for a, b in iv:
        if cur_b is None or a > cur_b:
            if cur_b is not None:
                total += cur_b - cur_a
            cur_a, cur_b = a, b
        else:
            cur_b = max(cur_b, b)
    if cur_b is not None:
        total += cur_b - cur_a
    return total


def _uncovered(covered, lo, hi):
    """Complement of a union of intervals inside [lo, hi], as sorted floats."""
    iv = sorted(covered)
    gaps = []
    cur = lo
    for a, b in iv:
        if a > cur:
            gaps.append((cur, min(a, hi)))
        cur = max(cur, b)
        if cur >= hi:
            break
    if cur < hi:
        gaps.append((cur, hi))
    return [(a, b) for a, b in gaps if b > a]


def greedy_cover_continuous(K, k0: int, max_steps: int | None = None) -> ShiftCover:
    """Cover half of ``[1, 2^k0]`` by unit neighbourhoods of translates of ``K``.

    Each step picks the translation ``theta`` in ``[-2^k0, 2^k0]`` maximizing
    the newly covered measure; the gain is piecewise linear in ``theta`` so
    the maximum sits at a breakpoint.  The final measure is recomputed with
    exact rational interval arithmetic.
    """
    Kf = sorted(Fraction(k).limit_denominator(10 ** 12) for k in K)
    if len(Kf) != k0:
        raise ValueError("K must have exactly k0 elements")
    top = 2 ** k0
    if any(b - a < 1 for a, b in zip(Kf, Kf[1:])):
        raise ValueError("K must have pairwise gaps >= 1")
    if Kf[0] < 1 or Kf[-1] > 2 ** (k0 - 1):
        raise ValueError("K must lie in [1, 2^(k0-1)]")
    Ka = np.array([float(k) for k in Kf])
    half = Fraction(1, 2)
    target = Fraction(2 ** (k0 - 1))
    covered = []
    shifts = []
    steps = 0
    limit = max_steps or 64 * top
    while True:
        gaps = _uncovered([(float(a), float(b)) for a, b in covered], 1.0, float(top))
        meas = union_measure(covered, 1, top)
        if meas >= target or not gaps:
            break
        if steps >= limit:
            raise RuntimeError("continuous cover did not converge")
        ga = np.array(gaps)
        ends = np.concatenate([ga[:, 0], ga[:, 1]])
        cum = np.concatenate([[0.0], np.cumsum(ga[:, 1] - ga[:, 0])])

        def F(x):
            # measure of the gap set left of x
            x = np.asarray(x)
            i = np.searchsorted(ga[:, 0], x, side="right") - 1
            i = np.clip(i, 0, len(ga) - 1)
            part = np.clip(x - ga[i, 0], 0.0, ga[i, 1] - ga[i, 0])
            val = cum[i] + part
            return np.where(x < ga[0, 0], 0.0, val)

        cand = (ends[:, None] - Ka[None, :] + np.array([-0.5, 0.5])[:, None, None]).ravel()
        cand = np.concatenate([cand, [0.0]])
        cand = np.unique(np.round(cand[(cand >= -top) & (cand <= top)], 12))
        gain = np.zeros(cand.size)
        for k in Ka:
            gain += F(cand + k + 0.5) - F(cand + k - 0.5)
        best = gain.max()
        pick = cand[np.isclose(gain, best, rtol=0, atol=1e-9)]
        order = np.lexsort((pick >= 0, np.abs(pick)))
        th = Fraction(float(pick[order[0]])).limit_denominator(10 ** 12)
        shifts.append(th)
        covered.extend((k + th - half, k + th + half) for k in Kf)
        steps += 1
    meas = union_measure(covered, 1, top)
    return ShiftCover(k0, shifts, float(meas), float(target), len(shifts) * k0 / top, "continuous")


# ---------------------------------------------------------------------------
# number theory

_ORBIT_MAX_M = 10


def orbit_distinct(m: int):
    """Residues ``2^k mod 5^m`` for ``0 <= k < 4 5^(m-1)`` and whether they are distinct."""
    if not 1 <= m <= _ORBIT_MAX_M:
        raise ValueError(f"m must lie in [1, {_ORBIT_MAX_M}]")
    q = 5 ** m
    count = 4 * 5 ** (m - 1)
    block = min(count, 4096)
    base = np.empty(block, dtype=np.int64)
    r = 1
    for t in range(block):
        base[t] = r
        r = (2 * r) % q
    step = pow(2, block, q)
    res = np.empty(count, dtype=np.int64)
    mult = 1
    for s in range(0, count, block):
        e = min(block, count - s)
        res[s:s + e] = (base[:e] * mult) % q
        mult = (mult * step) % q
    seen = np.zeros(q, dtype=bool)
    seen[res] = True
    distinct = int(seen.sum()) == count
    return res, distinct


# ---------------------------------------------------------------------------
# diophantine construction

@dataclass
class ThetaCertificate:
    alphas: list
    k: int
    theta: Fraction
    band: list
    c1: float = 0.5
    c2: float = 2.0
    C: int = 0
    j0: int = 0
    precision: int = 0
    slack: float = 0.0

    def theta_float(self) -> float:
        return float(self.theta)

    def to_json(self) -> str:
        d = {
            "alphas": [str(a) for a in self.alphas],
            "k": self.k,
            "theta": f"{self.theta.numerator}/{self.theta.denominator}",
            "band": [[j, str(dist), str(lo), str(hi)] for j, dist, lo, hi in self.band],
            "c1": self.c1,
            "c2": self.c2,
            "C": self.C,
            "j0": self.j0,
            "precision": self.precision,
            "slack": self.slack,
        }
        return json.dumps(d, sort_keys=True)


def _dist_int(x: Fraction) -> Fraction:
    return abs(x - round(x))


def _targets(j, k):
    # nearest-integer distance aimed at for index j
    return Fraction(j, k) if 2 * j <= k else Fraction(1, 2)


def _try_theta(alphas, k, j0, bits):
    """Fixed-point refinement; returns theta as an exact dyadic rational or None."""
    scale = 1 << bits
    # first stage: || alpha_{j0} theta || = 1/k with theta >= 1/k
    a0 = alphas[j0 - 1]
    t = _targets(j0, k)
    # smallest theta >= 1/k with frac(a0 theta) = t: theta = (p + t) / a0
    p = math.ceil(Fraction(1, k) * a0 - t)
    theta = Fraction(p) + t
    theta /= a0
    theta = Fraction(math.floor(theta * scale), scale)
    for j in range(j0 + 1, k + 1):
        a = alphas[j - 1]
        t = _targets(j, k)
        x = a * theta
        # move theta right by less than 1/a so that frac(a theta) hits t
        frac = x - math.floor(x)
        delta = (t - frac) % 1
        theta += delta / a
        theta = Fraction(math.floor(theta * scale), scale)
    return theta


def _band(alphas, k, j0, theta, c1, c2):
    band = []
    ok = True
    for j in range(j0, k + 1):
        d = _dist_int(alphas[j - 1] * theta)
        lo, hi = Fraction(j) * Fraction(c1) / k, Fraction(j) * Fraction(c2) / k
        lo = min(lo, Fraction(1, 2))
        band.append((j, d, lo, min(hi, Fraction(1, 2))))
        if not lo <= d <= hi:
            ok = False
    return band, ok


def theta_construct(alphas, k: int, precision: int | None = None) -> ThetaCertificate:
    """Find ``theta`` with ``||alpha_j theta||`` of order ``j/k`` for ``j0 <= j <= k``.

    ``alphas`` must satisfy ``alpha_1 = 1`` and ``alpha_{j+1} >= 2^j alpha_j``.
    The start index is ``j0 = ceil(C ln k)`` with ``C`` the smallest integer
    for which the refinement's drift stays inside the band and
    ``alpha_{j0} >= 16k``.  Arithmetic is fixed point with ``precision`` bits
    (default: enough for 32 fractional bits of ``alpha_k theta``).
    """
    al = [Fraction(a) for a in alphas]
    if len(al) < k:
        raise ValueError("need at least k alphas")
    al = al[:k]
    if al[0] != 1:
        raise ValueError("alpha_1 must equal 1")
    for j in range(1, k):
        if al[j] < 2 ** j * al[j - 1]:
            raise ValueError(f"growth condition fails at j={j}")
    need = max(1, math.ceil(al[-1])).bit_length() + 32 + 8
    bits = need if precision is None else int(precision)
    if bits < need:
        raise OverflowError(f"precision {bits} bits below the required {need}")
    c1, c2 = 0.5, 2.0
    for C in range(1, 64):
        j0 = max(1, math.ceil(C * math.log(k))) if k > 1 else 1
        if j0 > k:
            return ThetaCertificate(al, k, Fraction(1, max(k, 1)), [], c1, c2, C, j0, bits, 0.0)
        if al[j0 - 1] < 16 * k:
            continue
        theta = _try_theta(al, k, j0, bits)
        band, ok = _band(al, k, j0, theta, c1, c2)
        if ok:
            slack = float(theta - Fraction(1, k))
            return ThetaCertificate(al, k, theta, band, c1, c2, C, j0, bits, slack)
    raise RuntimeError("no admissible constant found")


def verify_theta(cert: ThetaCertificate, precision: int | None = None):
    """Recompute every certified distance with mpmath at ``precision`` bits.

    Returns a list of ``(j, inside_band, agrees)`` where ``agrees`` states that
    the recomputed distance matches the stored exact one to the working
    precision.
    """
    bits = precision or 2 * cert.precision
    out = []
    with mpmath.workprec(bits):
        th = mpmath.mpf(cert.theta.numerator) / cert.theta.denominator
        tol = mpmath.mpf(2) ** (-bits + 8)
        for j, dist, lo, hi in cert.band:
            a = cert.alphas[j - 1]
            x = mpmath.mpf(a.numerator) / a.denominator * th
            d = abs(x - mpmath.nint(x))
            ok = mpmath.mpf(lo.numerator) / lo.denominator <= d <= mpmath.mpf(hi.numerator) / hi.denominator
            same = abs(d - mpmath.mpf(dist.numerator) / dist.denominator) <= tol
            out.append((j, bool(ok), bool(same)))
    return out


# ---------------------------------------------------------------------------
# spike trains

def spike_train(k0: int, shifts, width: float, grid: GridSignal) -> GridSignal:
    """Sum of indicators of ``[s - width/2, s + width/2]`` over the shifts.

    Grid points at distance exactly ``width/2`` count as inside.
    """
    if width < 4 * grid.spacing:
        raise ValueError("width below four grid steps is not representable")
    x = grid.x
    L = grid.period
    out = np.zeros(grid.M)
    h = 0.5 * width
    for s in shifts:
        if not grid.origin <= s < grid.origin + L:
            raise ValueError("shift outside the period")
        d = np.abs((x - s + 0.5 * L) % L - 0.5 * L)
        out += d <= h + 1e-12 * width
    return grid.with_samples(out.astype(complex))


def smooth_spike_train(centers, sigma: float, grid: GridSignal) -> GridSignal:
    """Sum of ``<sigma (x - c)>^-10`` atoms, periodized on the grid box."""
    x = grid.x
    L = grid.period
    out = np.zeros(grid.M)
    for c in np.atleast_1d(centers):
        d = (x - c + 0.5 * L) % L - 0.5 * L
        out += (1.0 + (sigma * d) ** 2) ** -5
    return grid.with_samples(out.astype(complex))


def thin_scales(sigmas, k0: int):
    """Select ``k0`` scales so that the reversed ratio sequence grows fast enough.

    With ``alpha_j = s_k0 / s_(k0-j+1)`` the growth condition
    ``alpha_(j+1) >= 2^j alpha_j`` reads ``s_(i+1) >= 2^(k0-i) s_i``.  The
    selection is greedy from the smallest scale ``>= 2``.
    """
    pool = sorted(float(s) for s in sigmas if s >= 2)
    if not pool:
        raise ValueError("thinning impossible: no scale >= 2")
    sel = [pool[0]]
    for i in range(1, k0):
        need = 2.0 ** (k0 - i) * sel[-1]
        nxt = [s for s in pool if s >= need]
        if not nxt:
            raise ValueError("thinning impossible: too few scales")
        sel.append(nxt[0])
    return sel


@dataclass
class HLCertificate:
    sigmas: list
    theta: ThetaCertificate
    hits: list
    mask_measure: float
    min_on_mask: float
    spike_count: int = 0
    extras: dict = field(default_factory=dict)


def hl_counterexample(sigmas, k0: int, grid: GridSignal, eta=None, *, verify: bool = True):
    """Smooth spike train paired with ``g = <x>^-10`` and its certified hit set.

    The spikes sit at ``tau / (s theta)`` for ``|tau| <= ceil(s theta)`` with
    ``s`` the largest selected scale.  A point ``x`` belongs to the hit set
    when ``x - 1/s_i`` lands on a spike for one of the certified scales.  With
    ``eta`` given and ``verify`` set, the maximal adjoint is evaluated and its
    minimum over the hit set is recorded.
    """
    sel = thin_scales(sigmas, k0)
    s_top = sel[-1]
    if 1.0 / s_top < 4 * grid.spacing:
        raise ValueError("top scale not representable on this grid")
    alphas = [Fraction(s_top) / Fraction(sel[k0 - j]) for j in range(1, k0 + 1)]
    cert = theta_construct(alphas, k0)
    th = cert.theta_float()
    T = math.ceil(s_top * th)
    period = 1.0 / (s_top * th)
    centers = np.arange(-T, T + 1) * period
    f = smooth_spike_train(centers, s_top, grid)
    g = grid.with_samples((1.0 + grid.x ** 2) ** -5 + 0j)
    # hit set: x in [0, 1] with x - 1/s_i within half an atom width of a spike
    x = grid.x
    mask = np.zeros(grid.M, dtype=bool)
    hits = []
    for j, *_ in cert.band:
        s = sel[k0 - j]
        y = (x - 1.0 / s) / period
        near = np.abs(y - np.round(y)) * period <= 0.5 / s_top
        near &= (np.abs(np.round(y)) <= T) & (x >= 0) & (x <= 1)
        mask |= near
        hits.append(j)
    meas = float(mask.sum() * grid.spacing)
    mn = float("nan")
    if eta is not None and verify:
        m = maximal_adjoint(f, g, ScaleFamily(tuple(sel)), eta, "frequency_side")
        mn = float(np.min(np.abs(m.samples[mask]))) if mask.any() else float("nan")
    hc = HLCertificate(sel, cert, hits, meas, mn, int(2 * T + 1))
    return f, g, mask, hc


# ---------------------------------------------------------------------------
# seeded corpus of smooth test signals

def seeded_corpus(count: int, grid: GridSignal, seed: int, *, band: float = 4.0, extent: float = 2.0,
                  atoms: int = 6, profile=None):
    """Sums of modulated, translated smooth packets with seeded parameters.

    Each packet has spectrum ``profile((xi - nu) / a)`` times a translation
    phase, so the corpus is band-limited to ``[-band, band]`` and spatially
    concentrated on ``[-extent, extent]`` up to Schwartz tails.
    """
    from .window_atoms import build_profile

    prof = profile if profile is not None else build_profile("plateau_phi")
    rng = np.random.default_rng(seed)
    xi = grid.freqs
    L = grid.period
    out = []
    for _ in range(count):
        c = np.zeros(grid.M, dtype=complex)
        for _ in range(atoms):
            a = rng.uniform(0.5, 2.0)
            nu = rng.uniform(-band + a / 2, band - a / 2)
            x0 = rng.uniform(-extent, extent)
            amp = rng.normal() + 1j * rng.normal()
            c += amp * prof((xi - nu) / a) * np.exp(-2j * np.pi * xi * x0) / L
        out.append(from_coefficients(c, grid))
    return out
