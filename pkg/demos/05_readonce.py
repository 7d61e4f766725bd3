# %% [markdown]
# Read-once formulas
#
# Each gate searches its children for a deciding value (a 1 under OR, a 0
# under AND); internal children are repeated and majority-voted so their
# errors stay negligible.

# %%
import numpy as np

from vtsearch.model import CostMeter
from vtsearch.readonce import classical_eval, eval_readonce, parse_formula, random_formula, to_text

f = parse_formula("(x1 | !x2) & (x3 | (x4 & x5))")
a = [0, 1, 1, 0, 1]
rep = eval_readonce(f, a, CostMeter(), np.random.default_rng(0))
print(to_text(f), "on", a, "->", rep.value, "(classical", classical_eval(f, a), ")")
print("queries:", rep.queries, " P(correct) >=", round(rep.p_correct, 6))

# %%
rng = np.random.default_rng(1)
for d in (1, 2, 3):
    for N in (16, 64, 256):
        qs = []
        for _ in range(10):
            g = random_formula(N, d, rng)
            qs.append(eval_readonce(g, rng.integers(0, 2, N), None, rng).queries)
        print(f"d={d} N={N:3d}  mean queries {np.mean(qs):10.0f}")
