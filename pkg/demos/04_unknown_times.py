# %% [markdown]
# Search when the times are unknown
#
# The chain B_1, B_2, ... doubles the probe depth at every level and uses
# an amplitude estimate to decide whether to amplify.  The trace shows the
# survivor counts, the estimates and the cost per level.

# %%
import numpy as np

from vtsearch.experiments import InstanceSpec, generate_instance
from vtsearch.unknown_search import UnknownParams, theorem4_bound, unknown_search

rng = np.random.default_rng(4)
inst = generate_instance(InstanceSpec.parse("n=512,dist=uniform(1,200),marked=1"), rng)
res = unknown_search(inst, UnknownParams(epsilon=0.1), rng)
print("outcome:", res.outcome, "index:", res.index, "cost:", res.cost)
for rec in res.trace:
    print(f"j={rec.j:2d}  n_j={rec.n_j:4d}  p_j={rec.p:.3f}  estimate={rec.estimate:.4f}  "
          f"branch={rec.branch or '-'}  cost_j={rec.cost}")

# %% [markdown]
# Over many seeds, cost relative to the proven upper bound.

# %%
ratios = []
for s in range(50):
    r = np.random.default_rng(s)
    inst = generate_instance(InstanceSpec.parse("n=256,dist=uniform(1,64),marked=1"), r)
    ratios.append(unknown_search(inst, UnknownParams(), r).cost / theorem4_bound(inst.times))
print("cost / bound: median %.3f, max %.3f" % (np.median(ratios), np.max(ratios)))
