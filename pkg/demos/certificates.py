# %% [markdown]
# # Combinatorial certificates behind the maximal-adjoint counterexample
#
# Three exact objects: a greedy cover of `[1, 2^k0]` by shifted copies of
# `{2^k}`, the orbit of 2 modulo powers of 5, and a dilation `theta` that
# pushes `alpha_j theta` to distance about `j/k` from the integers.

# %%
from varlab.adversary import greedy_cover, orbit_distinct, recount_cover, theta_construct, verify_theta

for k0 in (6, 8, 10, 12):
    cov = greedy_cover(k0)
    print(k0, len(cov.shifts), "shifts, covered", cov.covered_measure,
          "recount", recount_cover(k0, cov.shifts), "constant", round(cov.constant, 3))

# %%
for m in range(1, 6):
    res, ok = orbit_distinct(m)
    print(f"m={m}: {res.size} residues, all distinct: {ok}")

# %%
k = 16
cert = theta_construct([2 ** (j * (j - 1) // 2) for j in range(1, k + 1)], k)
print("theta =", float(cert.theta), "start index", cert.j0)
for j, d, lo, hi in cert.band[:5]:
    print(j, float(lo), "<=", float(d), "<=", float(hi))
print("mpmath recheck:", all(a and b for _, a, b in verify_theta(cert)))

# %% [markdown]
# ## The maximal adjoint on a spike train
#
# Unit spikes of width `2^(1-k0)` at the cover shifts; `g` is the indicator of
# `[-1, 1]`.  The `L^1` norm of the maximal adjoint stays above a certified
# floor while `||f||_4` shrinks like `k0^(-1/4)`.

# %%
import numpy as np

from varlab import build_profile, lp_norm, make_grid
from varlab.adversary import spike_train
from varlab.varops import maximal_adjoint

eta = build_profile("nonneg_eta")
g0 = make_grid(2 ** 14, 16.0, -8.0)
g = g0.with_samples((np.abs(g0.x) <= 1) + 0j)
for k0 in (4, 5, 6, 7, 8):
    cov = greedy_cover(k0)
    h = 2.0 ** -k0
    f = spike_train(k0, [n * h for n in cov.shifts], 2 * h, g0)
    m = maximal_adjoint(f, g, [2.0 ** j for j in range(1, k0 + 1)], eta, "time_side")
    print(f"k0={k0}: |M|_1={lp_norm(m, 1):.3f}  |f|_4 k0^(1/4)={lp_norm(f, 4) * k0 ** 0.25:.3f}")
