# %% [markdown]
# Relative-error amplitude estimation
#
# Est-Amp draws from the exact phase-estimation outcome law.  The Estimate
# loop doubles M until the error test passes, and gives up (returning 0)
# once M exceeds its cap.  Zero is therefore reported exactly, at the price
# of running to the cap.

# %%
import numpy as np

from vtsearch.estimation import EstimateParams, estimate, outcome_distribution
from vtsearch.model import CostMeter

values, probs = outcome_distribution(0.3, 16)
top = np.argsort(probs)[::-1][:4]
print("M=16, eps=0.3: most likely outputs", np.round(values[top], 3), "with probs", np.round(probs[top], 3))

# %%
rng = np.random.default_rng(0)
params = EstimateParams(c=0.2, p_floor=1 / 256, k=4)
for eps in (0.0, 1 / 256, 0.05, 0.5):
    runs = [estimate(eps, params, CostMeter(), rng) for _ in range(200)]
    vals = np.array([r.value for r in runs])
    ok = (vals == 0) if eps == 0 else np.abs(eps - vals) < params.c * vals
    print(f"eps={eps:.4f}  median estimate={np.median(vals):.4f}  within c: {ok.mean():.3f}  "
          f"mean evaluations={np.mean([r.evaluations for r in runs]):.0f}")
