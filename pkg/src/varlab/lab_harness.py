"""Experiment driver: growth studies, exponent fits, refinement studies, CLI.

An experiment is described by a *descriptor*: a runner name, a parameter
list, the norm exponents, the growth model to fit, a config dict and the
acceptance bands.  The shipped descriptors live in ``data/descriptors.json``
so bands can be tuned without touching operator code.

Each runner maps ``(param, config, level)`` to the input norms, the output
norm and a dict of extra per-row measurements.  ``level`` is the refinement
level; level 0 is the descriptor's base sampling and every level doubles the
sampling of the discretized suprema.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import adversary, varops, window_atoms
from .spectral_grid import BandError, lp_norm, make_grid, from_coefficients

__all__ = [
    "GrowthRow",
    "GrowthReport",
    "load_descriptors",
    "fit_growth",
    "growth_study",
    "refinement_study",
    "check_bands",
    "run_cli",
    "main",
    "RUNNERS",
]

MODELS = ("log_power", "poly_power", "constant")
CSV_HEADER = ["experiment", "param", "p1", "p2", "input_norm1", "input_norm2", "output_norm", "ratio"]


# ---------------------------------------------------------------------------
# reports

@dataclass
class GrowthRow:
    param: float
    input_norms: tuple
    output_norm: float
    ratio: float
    info: dict = field(default_factory=dict)


@dataclass
class GrowthReport:
    """Rows of ``(param, input norms, output norm, ratio)`` plus a growth fit.

    ``norms`` holds ``(p1, p2, p_out)``; ``p2`` is ``None`` for linear
    operators.  Rows are kept sorted by ``param``.
    """

    experiment_id: str
    rows: list
    model: str
    fitted_exponent: float
    residual: float
    norms: tuple = (None, None, None)
    environment: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.param)
        if self.residual < 0:
            raise ValueError("residual must be nonnegative")

    @property
    def params(self):
        return np.array([r.param for r in self.rows], dtype=float)

    @property
    def ratios(self):
        return np.array([r.ratio for r in self.rows], dtype=float)

    # CSV carries the rows only
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        p1, p2 = _fmt(self.norms[0]), _fmt(self.norms[1])
        for r in self.rows:
            n1 = r.input_norms[0] if len(r.input_norms) > 0 else ""
            n2 = r.input_norms[1] if len(r.input_norms) > 1 else ""
            w.writerow([self.experiment_id, _fmt(r.param), p1, p2, _fmt(n1), _fmt(n2),
                        _fmt(r.output_norm), _fmt(r.ratio)])
        return buf.getvalue()

    @staticmethod
    def rows_from_csv(text: str):
        """Parse CSV text into ``(experiment_id, (p1, p2), rows)``."""
        rd = csv.reader(io.StringIO(text))
        head = next(rd)
        if head != CSV_HEADER:
            raise ValueError("unexpected CSV header")
        rows, exp, ps = [], None, (None, None)
        for rec in rd:
            exp = rec[0]
            ps = (_parse(rec[2]), _parse(rec[3]))
            norms = tuple(_parse(v) for v in rec[4:6] if v != "")
            rows.append(GrowthRow(_parse(rec[1]), norms, _parse(rec[6]), _parse(rec[7])))
        return exp, ps, rows

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "model": self.model,
            "fitted_exponent": self.fitted_exponent,
            "residual": self.residual,
            "norms": [_fmt_json(p) for p in self.norms],
            "environment": self.environment,
            "certificates": self.certificates,
            "rows": [
                {"param": r.param, "input_norms": list(r.input_norms), "output_norm": r.output_norm,
                 "ratio": r.ratio, "info": r.info}
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GrowthReport":
        d = json.loads(text)
        rows = [GrowthRow(r["param"], tuple(r["input_norms"]), r["output_norm"], r["ratio"], r["info"])
                for r in d["rows"]]
        return cls(d["experiment_id"], rows, d["model"], d["fitted_exponent"], d["residual"],
                   tuple(_parse_json(p) for p in d["norms"]), d["environment"], d["certificates"])


def _fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, str):
        return v
    if v == math.inf:
        return "inf"
    return repr(float(v))


def _parse(s: str):
    return None if s == "" else float(s)


def _fmt_json(p):
    return "inf" if p == math.inf else p


def _parse_json(p):
    return math.inf if p == "inf" else p


# ---------------------------------------------------------------------------
# fitting

def fit_growth(rows, model: str):
    """Least-squares growth exponent and RMS residual in log coordinates.

    Parameters
    ----------
    rows : sequence
        :class:`GrowthRow` objects or ``(param, ratio)`` pairs.
    model : {"log_power", "poly_power", "constant"}
        ``ratio ~ a (log param)^beta``, ``ratio ~ a param^beta`` or
        ``ratio ~ a`` (``beta = 0``, residual is the log dispersion).
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    pr = [(r.param, r.ratio) if isinstance(r, GrowthRow) else (r[0], r[1]) for r in rows]
    if len(pr) < 4:
        raise ValueError("at least four rows are required")
    x = np.array([p for p, _ in pr], dtype=float)
    y = np.array([v for _, v in pr], dtype=float)
    if np.any(~(y > 0)):
        raise ValueError("ratios must be positive")
    ly = np.log(y)
    if model == "constant":
        return 0.0, float(np.sqrt(np.mean((ly - ly.mean()) ** 2)))
    if np.all(x == x[0]):
        raise ValueError("degenerate parameters")
    if model == "log_power":
        if np.any(x <= 1):
            raise ValueError("log_power needs params > 1")
        t = np.log(np.log(x))
    else:
        if np.any(x <= 0):
            raise ValueError("poly_power needs positive params")
        t = np.log(x)
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res ** 2)))


# ---------------------------------------------------------------------------
# runners

_CACHE: dict = {}


def _cached(key, fn):
    if key not in _CACHE:
        _CACHE[key] = fn()
    return _CACHE[key]


def clear_cache():
    _CACHE.clear()


def _key(name, cfg, level):
    return (name, level, json.dumps(cfg, sort_keys=True, default=str))


def _pow2_at_least(x) -> int:
    return 1 << int(math.ceil(math.log2(x)))


def _run_identity(param, cfg, level):
    g = make_grid(int(cfg["grid_m"]), float(cfg["period"]), -0.5 * float(cfg["period"]))
    f = adversary.seeded_corpus(1, g, int(cfg["seed"]) + int(param))[0]
    f = f * float(param)
    p = float(cfg["p"])
    n = lp_norm(f, p)
    return (n,), lp_norm(f, p), {}


def _run_v2_blowup(param, cfg, level):
    N = int(param)
    w = window_atoms.build_profile(cfg["profile"])
    phi = window_atoms.build_profile(cfg["chirp_profile"])
    L = 8 * N
    M = int(cfg["grid_m"]) if cfg.get("grid_m") else _pow2_at_least(2 * (2 * N + 2) * L)
    f = adversary.chirp_train(N, phi, make_grid(M, float(L), 0.0))
    step = float(cfg["tau_step"]) / 2 ** level
    taus = np.arange(0, int(round(N / step)) + 1) * step
    V = varops.v2_translation_square(f, N, taus, w, out_m=4 * L)
    x = V.x
    sel = (x >= 1) & (x <= N / 2)
    low = float(V.samples.real[sel].min() / math.sqrt(math.log(N)))
    p = float(cfg["p"])
    return (lp_norm(f, p),), lp_norm(V, p), {"lower_bound": low, "grid_m": M}


def _run_tm3_blowup(param, cfg, level):
    N = int(param)
    L = float(cfg["period"])
    gamma = float(cfg["gamma"])
    M = _pow2_at_least(2 * (N + 1) * L)
    phi = window_atoms.build_profile("plateau_phi", plateau=0.49)
    W = window_atoms.build_profile("positive_Phi")
    f1, f2 = adversary.bichirp_pair(N, phi, make_grid(M, L, 0.0))
    k0 = varops.lambda_scale_threshold(gamma)
    tiles = varops.make_tiles("section3_lambda", gamma, (k0, int(cfg["k_max"])), m_range=(0, N + 1))
    T = varops.bilinear_tm(f1, f2, tiles, W, W, out_m=int(2 * L))
    p1, p2, po = float(cfg["p1"]), float(cfg["p2"]), float(cfg["p"])
    return (lp_norm(f1, p1), lp_norm(f2, p2)), lp_norm(T, po), {"grid_m": M, "k_min": k0}


def closed_form_scale(N: int, k: int, gamma: float, W, out):
    """Displayed per-scale identity evaluated by direct cosine sums.

    ``(2^(k-7) - 1) sum_m K_k(x - m)^2 exp(2 pi i gamma 2^-k x)`` with
    ``K_k`` the periodized inverse transform of ``W(2^k xi)``.
    """
    L = out.period
    x = out.x
    j = np.arange(1, int(L * 2.0 ** -k * W.support) + 2)
    fr = j / L
    K = np.full(x.size, float(W(0.0)) / L)
    for a in range(0, j.size, 256):
        ff = fr[a:a + 256]
        K += 2 * (W(2.0 ** k * ff)[:, None] * np.cos(2 * np.pi * np.outer(ff, x))).sum(0) / L
    sq = np.zeros(x.size)
    per = L / x.size
    for m in range(1, N + 1):
        sh = m / per
        if abs(sh - round(sh)) > 1e-9:
            raise ValueError("output spacing must divide the chirp spacing")
        sq += np.roll(K, int(round(sh))) ** 2
    return (2 ** (k - 7) - 1) * sq * np.exp(2j * np.pi * gamma * 2.0 ** -k * x)


def _run_tm3_closed_form(param, cfg, level):
    k = int(param)
    N = int(cfg["n"])
    L = float(cfg["period"])
    gamma = float(cfg["gamma"])
    k_hi = max(int(p) for p in cfg["all_params"])

    def compute():
        phi = window_atoms.build_profile("plateau_phi", plateau=0.49)
        W = window_atoms.build_profile("positive_Phi")
        f1, f2 = adversary.bichirp_pair(N, phi, make_grid(int(cfg["grid_m"]), L, 0.0))
        k0 = varops.lambda_scale_threshold(gamma)
        tiles = varops.make_tiles("section3_lambda", gamma, (k0, k_hi), m_range=(0, N + 1))
        ps = varops.bilinear_tm(f1, f2, tiles, W, W, "per_scale", out_m=int(2 * L))
        return f1, f2, W, k0, ps

    f1, f2, W, k0, ps = _cached(_key("tm3_closed_form", {**cfg, "all_params": k_hi}, level), compute)
    if k < k0:
        raise ValueError(f"scale {k} is below the admissible threshold {k0}")
    s = ps[k]
    orc = closed_form_scale(N, k, gamma, W, s)
    err = float(np.linalg.norm(s.samples - orc) / np.linalg.norm(orc))
    c = np.fft.fft(s.samples)
    fq = np.fft.fftfreq(s.M, s.spacing)
    inb = (fq >= (gamma - 1) * 2.0 ** -k) & (fq <= (gamma + 1) * 2.0 ** -k)
    mass = float(np.sum(np.abs(c[inb]) ** 2) / np.sum(np.abs(c) ** 2))
    p1, p2, po = float(cfg["p1"]), float(cfg["p2"]), float(cfg["p"])
    return ((lp_norm(f1, p1), lp_norm(f2, p2)), lp_norm(s, po),
            {"closed_form_error": err, "band_mass": mass, "k_min": k0})


def _v2res_members(cfg):
    n_rand = int(cfg["corpus_size"])
    return n_rand, [int(n) for n in cfg["chirp_ns"]]


def _run_v2res_bound(param, cfg, level):
    i = int(param)
    n_rand, ns = _v2res_members(cfg)
    w = window_atoms.build_profile("smooth_indicator")
    sub = int(cfg["substeps"]) * 2 ** level
    ac = int(cfg["alpha_count"]) * 2 ** level
    p = float(cfg["p"])
    if i < n_rand:
        L = float(cfg["period"])
        g = make_grid(int(cfg["grid_m"]), L, -L / 2)
        f = _cached(("v2res_corpus", int(cfg["seed"]), n_rand, g.M, L),
                    lambda: adversary.seeded_corpus(n_rand, g, int(cfg["seed"])))[i]
        V = varops.v2res(f, varops.default_r_set(4.0 / L, 8.0, sub), ac, w, out_m=g.M // 2)
        info = {"family": "corpus"}
    elif i < n_rand + len(ns):
        N = ns[i - n_rand]
        L = float(8 * N)
        phi = window_atoms.build_profile("plateau_phi")
        f = adversary.chirp_train(N, phi, make_grid(_pow2_at_least(2 * (N + 2) * L), L, 0.0))
        V = varops.v2res(f, varops.default_r_set(1 / 16, 4.0, sub), ac, w, out_m=int(16 * L))
        info = {"family": "chirp", "N": N}
    else:
        raise ValueError(f"member index {i} out of range")
    info.update(substeps=sub, alpha_count=ac)
    return (lp_norm(f, p),), lp_norm(V, p), info


def _run_v2res_l2fail(param, cfg, level):
    T = float(param)
    L = float(cfg["period"])
    sub = int(cfg["substeps"]) * 2 ** level
    ac = int(cfg["alpha_count"]) * 2 ** level

    def compute():
        g = make_grid(int(cfg["grid_m"]), L, -L / 2)
        phi = window_atoms.build_profile("plateau_phi")
        f = from_coefficients(phi(g.freqs) / L + 0j, g)
        w = window_atoms.build_profile("smooth_indicator")
        R = varops.default_r_set(float(cfg["r_min"]), float(cfg["r_max"]), sub)
        return f, varops.v2res(f, R, ac, w, out_m=g.M)

    f, V = _cached(_key("v2res_l2fail", cfg, level), compute)
    if T > L / 4:
        raise ValueError("truncation window too large for the period")
    x = V.x
    v = V.samples.real[np.abs(x) <= T]
    out = float(np.sqrt(V.spacing * np.sum(v ** 2)))
    return (lp_norm(f, 2),), out, {"tail_min": float(np.min(V.samples.real[np.abs(x) <= T] *
                                                                  np.sqrt(1 + np.abs(x[np.abs(x) <= T]))))}


def _whitney_pairs(cfg):
    L = float(cfg["period"])
    g = make_grid(int(cfg["grid_m"]), L, -L / 2)
    n = int(cfg["pairs"])
    cor = adversary.seeded_corpus(2 * n, g, int(cfg["seed"]))
    pairs = [(cor[2 * i], cor[2 * i + 1]) for i in range(n)]
    phi = window_atoms.build_profile("plateau_phi", plateau=0.49)
    pairs += [adversary.bichirp_pair(int(N), phi, g) for N in cfg["chirp_ns"]]
    return pairs


def _run_whitney_bound(param, cfg, level):
    K = int(param)
    k_hi = max(int(p) for p in cfg["all_params"])

    def compute():
        W = window_atoms.build_profile("positive_Phi")
        tiles = varops.make_tiles("section7_periodic", float(cfg["gamma"]), (0, k_hi),
                                  orientation=cfg["orientation"], band=float(cfg["band"]))
        p1, p2, po = float(cfg["p1"]), float(cfg["p2"]), float(cfg["p"])
        table = []
        for f1, f2 in _whitney_pairs(cfg):
            ps = varops.bilinear_tm(f1, f2, tiles, W, W, "per_scale")
            out = next(iter(ps.values()))
            acc = np.zeros(out.M, dtype=complex)
            cum = {}
            for k in range(0, k_hi + 1):
                if k in ps:
                    acc = acc + ps[k].samples
                cum[k] = lp_norm(out.with_samples(acc), po)
            table.append(((lp_norm(f1, p1), lp_norm(f2, p2)), cum))
        return table

    table = _cached(_key("whitney_bound", {**cfg, "all_params": k_hi}, level), compute)
    best = max(range(len(table)), key=lambda i: table[i][1][K] / np.prod(table[i][0]))
    norms, cum = table[best]
    return norms, cum[K], {"argmax_pair": best}


def _run_badjoint_counter(param, cfg, level):
    k0 = int(param)
    L = float(cfg["period"])
    g0 = make_grid(int(cfg["grid_m"]), L, -L / 2)
    eta = window_atoms.build_profile("nonneg_eta")
    cov = adversary.greedy_cover(k0)
    h = 2.0 ** -k0
    f = adversary.spike_train(k0, [n * h for n in cov.shifts], 2 * h, g0)
    g = g0.with_samples((np.abs(g0.x) <= 1).astype(complex))
    m = varops.maximal_adjoint(f, g, [2.0 ** j for j in range(1, k0 + 1)], eta, "time_side")
    cc = eta.certified_constants
    floor = 0.5 * cc["c_1"] * cc["c_eta"]
    nf = lp_norm(f, float(cfg["p1"]))
    return ((nf, lp_norm(g, math.inf)), lp_norm(m, float(cfg["p"])),
            {"scaled_input_norm": nf * k0 ** 0.25, "certified_floor": floor, "shifts": len(cov.shifts)})


def _run_expsum(param, cfg, level):
    n = int(param)
    pp = float(cfg.get("p_prime") or cfg["p1"])
    p = pp / (pp - 1)
    val = window_atoms.exp_sum_norm((0, cfg["step"], n), pp)
    return (n ** (1 / p),), val, {}


RUNNERS = {
    "identity": _run_identity,
    "v2_blowup": _run_v2_blowup,
    "tm3_blowup": _run_tm3_blowup,
    "tm3_closed_form": _run_tm3_closed_form,
    "v2res_bound": _run_v2res_bound,
    "v2res_l2fail": _run_v2res_l2fail,
    "whitney_bound": _run_whitney_bound,
    "badjoint_counter": _run_badjoint_counter,
    "expsum": _run_expsum,
}


# ---------------------------------------------------------------------------
# studies

def load_descriptors(path=None) -> dict:
    """Read the descriptor table (the packaged one by default)."""
    if path is None:
        text = resources.files("varlab").joinpath("data/descriptors.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


def _resolve(experiment):
    if isinstance(experiment, str):
        table = load_descriptors()
        if experiment not in table:
            raise ValueError(f"unknown experiment {experiment!r}")
        d = dict(table[experiment])
        d["name"] = experiment
        return d
    d = dict(experiment)
    d.setdefault("name", d.get("runner", "custom"))
    return d


def _environment(d, cfg, level):
    return {
        "config": {k: v for k, v in cfg.items() if k != "all_params"},
        "refinement_level": level,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def growth_study(experiment, params=None, norms=None, *, level: int = 0, overrides=None) -> GrowthReport:
    """Run one descriptor over a parameter list and fit its growth model.

    Parameters
    ----------
    experiment : str or dict
        Descriptor name from the packaged table, or a descriptor dict.
    params : list, optional
        Parameter values (default: the descriptor's list); at least four.
    norms : tuple, optional
        ``(p1, p2, p_out)`` overriding the descriptor's norms.
    level : int
        Refinement level passed to the runner.
    overrides : dict, optional
        Config entries overriding the descriptor's config.
    """
    d = _resolve(experiment)
    runner = RUNNERS.get(d.get("runner"))
    if runner is None:
        raise ValueError(f"descriptor references unknown operator {d.get('runner')!r}")
    params = sorted(float(p) for p in (params if params is not None else d["params"]))
    if len(params) < 4:
        raise ValueError("at least four parameter values are required")
    nm = tuple(norms if norms is not None else d["norms"])
    nm = tuple(_parse_json(p) for p in nm)
    cfg = dict(d.get("config", {}))
    cfg.update(overrides or {})
    cfg.update(p1=nm[0], p2=nm[1], p=nm[2], all_params=params)
    cfg.setdefault("seed", None)
    rows = []
    for prm in params:
        ins, out, info = runner(prm, cfg, level)
        ratio = out / float(np.prod(ins))
        rows.append(GrowthRow(prm, tuple(float(v) for v in ins), float(out), float(ratio), info))
    model = d.get("model", "constant")
    beta, res = fit_growth(rows, model)
    return GrowthReport(d["name"], rows, model, beta, res, nm, _environment(d, cfg, level))


@dataclass
class RefinementReport:
    experiment_id: str
    levels: list
    reports: list
    max_ratio: list
    changes: list

    @property
    def final_change(self) -> float:
        return self.changes[-1]

    def to_dict(self):
        return {"experiment_id": self.experiment_id, "levels": self.levels, "max_ratio": self.max_ratio,
                "changes": self.changes, "reports": [r.to_dict() for r in self.reports]}


def refinement_study(experiment, levels: int = 2, params=None, *, start: int = 0, overrides=None) -> RefinementReport:
    """Repeat a growth study at doubled sampling and track the max ratio.

    ``changes[i]`` is the relative change of the max ratio from level
    ``start + i`` to ``start + i + 1``; the per-row change is also recorded
    in each report's certificates.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    d = _resolve(experiment)
    lv = list(range(start, start + levels))
    reps = [growth_study(d, params, level=l, overrides=overrides) for l in lv]
    mx = [float(r.ratios.max()) for r in reps]
    changes = [abs(b - a) / a for a, b in zip(mx, mx[1:])]
    for a, b in zip(reps, reps[1:]):
        b.certificates["row_change_max"] = float(np.max(np.abs(b.ratios - a.ratios) / a.ratios))
    return RefinementReport(d["name"], lv, reps, mx, changes)


# ---------------------------------------------------------------------------
# acceptance bands

def check_bands(report, bands: dict):
    """Evaluate descriptor bands; returns a list of ``(label, ok, detail)``."""
    out = []
    if isinstance(report, RefinementReport):
        final = report.reports[-1]
        if "refinement_change_max" in bands:
            c = report.final_change
            out.append(("refinement_change", c < bands["refinement_change_max"], f"{c:.4g}"))
        if "chirp_poly_abs_max" in bands:
            rows = [(r.info["N"], r.ratio) for r in final.rows if r.info.get("family") == "chirp"]
            b, _ = fit_growth(rows, "poly_power")
            out.append(("chirp_poly_exponent", abs(b) < bands["chirp_poly_abs_max"], f"{b:.4g}"))
        report = final
        bands = {k: v for k, v in bands.items() if k not in ("refinement_change_max", "chirp_poly_abs_max")}
    r = report.ratios
    if bands.get("strictly_increasing"):
        out.append(("strictly_increasing", bool(np.all(np.diff(r) > 0)), np.array2string(r, precision=5)))
    if "exponent" in bands:
        lo, hi = bands["exponent"]
        out.append(("exponent", lo <= report.fitted_exponent <= hi, f"{report.fitted_exponent:.4g}"))
    if "exponent_abs_max" in bands:
        b = report.fitted_exponent
        out.append(("exponent_abs", abs(b) < bands["exponent_abs_max"], f"{b:.4g}"))
    if "residual_max" in bands:
        out.append(("residual", report.residual < bands["residual_max"], f"{report.residual:.3g}"))
    if "max_spread" in bands:
        s = r.max() / r.min() - 1
        out.append(("max_spread", s < bands["max_spread"], f"{s:.4g}"))
    if "ratio_spread" in bands:
        s = r.max() / r.min()
        out.append(("ratio_spread", s < bands["ratio_spread"], f"{s:.4g}"))
    for key in bands.get("info_nondecreasing", []):
        v = np.array([row.info[key] for row in report.rows])
        out.append((f"{key}_nondecreasing", bool(np.all(np.diff(v) >= 0)), np.array2string(v, precision=6)))
    for key, lim in bands.get("info_max", {}).items():
        v = max(row.info[key] for row in report.rows)
        out.append((f"{key}_max", v <= lim, f"{v:.3g}"))
    for key, lim in bands.get("info_min", {}).items():
        v = min(row.info[key] for row in report.rows)
        out.append((f"{key}_min", v >= lim, f"{v:.8g}"))
    for key, lim in bands.get("info_spread", {}).items():
        v = np.array([row.info[key] for row in report.rows])
        s = v.max() / v.min()
        out.append((f"{key}_spread", s < lim, f"{s:.4g}"))
    if "output_min_positive" in bands:
        o = min(row.output_norm for row in report.rows)
        floor = max(row.info.get("certified_floor", 0.0) for row in report.rows)
        out.append(("output_floor", o >= floor > 0, f"min {o:.4g} vs floor {floor:.4g}"))
    return out


# ---------------------------------------------------------------------------
# command line

_SUBCOMMANDS = {
    "v2-blowup": "v2_blowup",
    "tm3-blowup": "tm3_blowup",
    "v2res-bound": "v2res_bound",
    "v2res-l2fail": "v2res_l2fail",
    "whitney-bound": "whitney_bound",
    "badjoint-counter": "badjoint_counter",
    "expsum": "expsum",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _pow2(s):
    v = int(s)
    if v < 8 or v & (v - 1):
        raise argparse.ArgumentTypeError(f"{s} is not a power of two >= 8")
    return v


def _common():
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--grid-m", type=_pow2)
    c.add_argument("--period", type=float)
    c.add_argument("--p", type=float)
    c.add_argument("--p1", type=float)
    c.add_argument("--p2", type=float)
    c.add_argument("--n-max", type=int)
    c.add_argument("--k0", type=int)
    c.add_argument("--m", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--levels", type=int)
    c.add_argument("--out")
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--orientation", choices=("reflected", "literal"))
    c.add_argument("--config")
    c.add_argument("--verify", action="store_true")
    c.add_argument("--experiment")
    return c


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="varlab", description="Norm-ratio experiments for variation and bilinear multiplier operators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parent = _common()
    helps = {
        "v2-blowup": "translation-square 2-variation on chirp trains",
        "tm3-blowup": "lambda-square bilinear multiplier on bi-chirps",
        "v2res-bound": "restricted variation over a seeded corpus with refinement",
        "v2res-l2fail": "restricted variation of one atom on growing windows",
        "whitney-bound": "Whitney-tile bilinear multiplier over scale truncations",
        "badjoint-counter": "maximal adjoint on spike trains",
        "cover": "greedy integer cover certificate",
        "cover-cont": "greedy continuous cover certificate",
        "orbit": "powers of two modulo 5^m",
        "theta": "dilation parameter certificate",
        "expsum": "L^p' norms of progression exponential sums",
        "refine": "refinement study of any experiment",
    }
    for name, h in helps.items():
        sub.add_parser(name, parents=[parent], help=h)
    return p


_CONFIG_TYPES = {"grid_m": int, "period": float, "p": float, "p1": float, "p2": float, "n_max": int,
                 "k0": int, "m": int, "seed": int, "levels": int, "out": str, "format": str,
                 "orientation": str, "experiment": str}


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; dashes map to underscores."""
    cfg = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            k = k.replace("-", "_")
            if k not in _CONFIG_TYPES:
                raise ValueError(f"{path}:{ln}: unknown key {k!r}")
            cfg[k] = _CONFIG_TYPES[k](v)
    return cfg


def _emit(text: str, args):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _study_args(args, exp):
    d = _resolve(exp)
    params = list(d["params"])
    if args.n_max is not None and exp in ("v2_blowup", "tm3_blowup", "v2res_l2fail", "expsum"):
        lo = params[0]
        params = [2 ** e for e in range(int(math.log2(lo)), int(math.log2(args.n_max)) + 1)]
    if args.k0 is not None and exp in ("badjoint_counter", "whitney_bound"):
        params = [p for p in range(int(params[0]), args.k0 + 1)]
    nm = list(d["norms"])
    if args.p1 is not None:
        nm[0] = args.p1
    if args.p2 is not None:
        nm[1] = args.p2
    if args.p is not None:
        if exp == "expsum":
            nm[0] = nm[2] = args.p
        else:
            nm[2] = args.p
            if nm[1] is None and args.p1 is None:
                nm[0] = args.p
    ov = {}
    if args.grid_m is not None:
        ov["grid_m"] = args.grid_m
    if args.period is not None:
        ov["period"] = args.period
    if args.seed is not None:
        ov["seed"] = args.seed
    if args.orientation is not None:
        ov["orientation"] = args.orientation
    if exp == "expsum":
        ov["p_prime"] = float(nm[0])
    return d, params, tuple(nm), ov


def _report_text(rep, fmt):
    if isinstance(rep, RefinementReport):
        if fmt == "json":
            return json.dumps(rep.to_dict(), indent=1, sort_keys=True)
        return rep.reports[-1].to_csv()
    return rep.to_json() if fmt == "json" else rep.to_csv()


def _print_checks(checks):
    for label, ok, detail in checks:
        print(f"# {'PASS' if ok else 'FAIL'} {label}: {detail}", file=sys.stderr)
    return all(ok for _, ok, _ in checks)


def _run(args) -> int:
    cmd = args.command
    if cmd in _SUBCOMMANDS or cmd == "refine":
        exp = _SUBCOMMANDS.get(cmd) or args.experiment
        if exp is None:
            raise ValueError("refine needs --experiment")
        d, params, nm, ov = _study_args(args, exp)
        if cmd == "refine" or exp == "v2res_bound":
            rep = refinement_study(d, args.levels or 2, params, overrides=ov)
            for r in rep.reports:
                r.norms = tuple(_parse_json(p) for p in nm)
        else:
            rep = growth_study(d, params, nm, overrides=ov)
        _emit(_report_text(rep, args.format), args)
        ok = _print_checks(check_bands(rep, d.get("bands", {})))
        return 0 if ok else 2
    if cmd == "cover":
        k0 = args.k0 if args.k0 is not None else 8
        cov = adversary.greedy_cover(k0)
        _emit(cov.to_json(), args)
        if args.verify:
            n = adversary.recount_cover(k0, cov.shifts)
            ok = n == cov.covered_measure
            print(f"# {'PASS' if ok else 'FAIL'} recount {n} vs certificate {cov.covered_measure}", file=sys.stderr)
            return 0 if ok else 2
        return 0
    if cmd == "cover-cont":
        k0 = args.k0 if args.k0 is not None else 6
        cov = adversary.greedy_cover_continuous([2 ** j for j in range(k0)] if k0 > 1 else [1], k0)
        _emit(cov.to_json(), args)
        return 0
    if cmd == "orbit":
        m = args.m if args.m is not None else 3
        res, distinct = adversary.orbit_distinct(m)
        count = len(np.unique(res))
        _emit(json.dumps({"m": m, "count": count, "distinct": distinct, "residues": res.tolist()}), args)
        return 0 if distinct else 2
    if cmd == "theta":
        k = args.k0 if args.k0 is not None else 16
        al = [2 ** (j * (j - 1) // 2) for j in range(1, k + 1)]
        cert = adversary.theta_construct(al, k)
        _emit(cert.to_json(), args)
        if args.verify:
            ok = all(v[1] for v in adversary.verify_theta(cert, 2 * cert.precision))
            return 0 if ok else 2
        return 0
    raise ValueError(f"unknown command {cmd}")


def run_cli(argv=None) -> int:
    """Entry point returning the exit code (0 ok, 2 band violation, 1 error)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.config:
            cfg = read_config(args.config)
            # flags given on the command line win over the file
            given = {a.split("=", 1)[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
            for k, v in cfg.items():
                if k not in given:
                    setattr(args, k, v)
        return _run(args)
    except (BandError, ValueError, OverflowError, RuntimeError, OSError) as e:
        print(f"varlab: error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())
