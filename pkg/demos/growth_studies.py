# %% [markdown]
# # Running growth studies from the descriptor table
#
# Every experiment is a named descriptor: a runner, a parameter sweep, the
# norms and the acceptance bands.  `growth_study` produces a report with a
# fitted exponent; `check_bands` evaluates the bands.

# %%
from varlab.lab_harness import check_bands, growth_study, load_descriptors, refinement_study

table = load_descriptors()
print(sorted(table))

# %%
rep = growth_study("expsum")
print(rep.to_csv())
for label, ok, detail in check_bands(rep, table["expsum"]["bands"]):
    print(label, ok, detail)

# %% [markdown]
# Norms can be overridden per study.  At `p' = 2` the exponential sums obey
# Parseval, so the ratio to `n^(1/2)` is exactly one.

# %%
rep2 = growth_study("expsum", norms=(2.0, None, 2.0), overrides={"p_prime": 2.0})
print(rep2.ratios)

# %% [markdown]
# ## Refinement
#
# A refinement study reruns the same sweep with doubled sampling and reports
# the relative change of the largest ratio.

# %%
rr = refinement_study("identity", levels=2)
print(rr.max_ratio, rr.changes)
