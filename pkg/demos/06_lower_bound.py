# %% [markdown]
# From plain search to variable-time search
#
# An item that may take t steps can hide a group of t' plain bits, where
# t' is the largest group exact Grover search (plus one read) decides with
# certainty in t queries.  Since t' grows like t^2, sum t'_i is of order
# sum t_i^2 and the plain search lower bound carries over.

# %%
import numpy as np

from vtsearch.lowerbound import SQUARE_CONSTANT, reduction_harness, t_prime_table

table = t_prime_table(20)
for t, tp in enumerate(table, start=1):
    print(f"t={t:2d}  t'={tp:4d}  t'/t^2={tp / t ** 2:.3f}")
print("guaranteed ratio:", round(SQUARE_CONSTANT, 4))

# %%
rep = reduction_harness(np.random.default_rng(0).integers(1, 50, 20))
print("m =", rep.m, "checks ok:", rep.ok, "lower-bound constant:", rep.constant)
