# %% [markdown]
# Amplitude amplification in two dimensions
#
# Every algorithm in this package ends in a state with a "good" and a
# "bad" component, so 2m+1 calls to it just multiply the success angle by
# 2m+1.  This script tabulates that map and the lower bound used when
# probabilities are only known approximately.

# %%
import numpy as np

from vtsearch.calculus import aa_lower_bound, amplify_exact, best_rounds, choose_m, max_rounds

delta = 0.01
for m in range(max_rounds(delta) + 2):
    exact = amplify_exact(delta, m)
    try:
        bound = f"{aa_lower_bound(delta, m):.4f}"
    except ValueError:
        bound = "n/a (overshoots pi/2)"
    print(f"m={m:2d}  exact={exact:.4f}  bound={bound}")

# %% [markdown]
# Choosing m so that (2m+1)^2 p lands between 1/(9 log n) and 1/log n.

# %%
n = 2 ** 10
for p in (1e-2, 1e-3, 1e-4, 1e-5):
    m = choose_m(p, n)
    print(f"p={p:.0e}  m={m:3d}  (2m+1)^2 p = {(2 * m + 1) ** 2 * p:.4f}")

# %% [markdown]
# When only an interval [lo, hi] is known, pick the m with the best worst case.

# %%
m, worst = best_rounds(0.002, 0.003)
grid = np.linspace(0.002, 0.003, 5)
print("m =", m, "worst case", round(worst, 4), "->", np.round(amplify_exact(grid, m), 4))
