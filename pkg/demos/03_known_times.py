# %% [markdown]
# Search with known evaluation times
#
# The scheduler checks cheap items one at a time, boosts unlikely ones,
# buckets the rest by (time, probability) and recurses on the bucket
# composites.  Its cost should track sqrt(sum t_i^2), not n * max t.

# %%
import math

import numpy as np

from vtsearch.experiments import InstanceSpec, generate_instance
from vtsearch.known_search import build_plan, item_algs, known_search
from vtsearch.model import CostMeter

rng = np.random.default_rng(1)
for spec in ("n=256,dist=uniform(1,64)", "n=256,dist=powerlaw(1)", "n=256,dist=single-heavy",
             "n=4096,dist=uniform(1,64)"):
    inst = generate_instance(InstanceSpec.parse(spec + ",marked=1"), rng)
    res = known_search(inst, rng, CostMeter())
    print(f"{spec:28s} cost/sqrt(T) = {res.cost / math.sqrt(inst.sum_t2):5.2f}  "
          f"success = {res.success_probability:.3f}  found = {res.index}")

# %% [markdown]
# A single schedule, level by level.

# %%
inst = generate_instance(InstanceSpec.parse("n=1024,dist=uniform(1,64),marked=1"), rng)
plan = build_plan(item_algs(inst, np.arange(inst.n)))
for depth, level in enumerate(plan.levels()):
    kind = level.base_mode if level.base else "bucketed"
    print(f"level {depth}: {level.n:5d} algorithms, {len(level.sequential):3d} sequential, "
          f"{len(level.buckets):3d} buckets, {kind}")
print("energy overhead across levels:", round(plan.overhead, 3))
