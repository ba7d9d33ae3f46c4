"""The relaxed Bernoulli mask: temperature trades bias for smoothness.

Sampling a hard 0/1 sentence mask is not differentiable, so training uses
a temperature-controlled relaxation

    z = sigmoid((logit(p) + a - b) / tau),   a, b ~ Gumbel,

which is (i) differentiable in p, (ii) exactly Bernoulli(p) in the tau -> 0
limit, and (iii) crosses 0.5 with probability p at every temperature.
"""

import numpy as np

from phishloc.model import sample_random_mask, sample_selection_mask
from phishloc.tensor import Tensor, sample_gumbel

rng = np.random.default_rng(0)
n = 200_000

print("P(z > 0.5) is exactly p at any temperature:")
for p in (0.2, 0.5, 0.8):
    for tau in (0.1, 0.5, 1.0):
        z = sample_selection_mask(Tensor(np.full(n, p)), tau, rng).data
        print(f"  p={p}  tau={tau:>3}: frac(z > 0.5) = {np.mean(z > 0.5):.3f}, "
              f"mean z = {z.mean():.3f}")
    print()

print("low temperature pushes samples toward {0, 1}:")
for tau in (1.0, 0.5, 0.1):
    z = sample_selection_mask(Tensor(np.full(n, 0.7)), tau, rng).data
    near_edges = np.mean((z < 0.05) | (z > 0.95))
    print(f"  tau={tau:>3}: fraction within 0.05 of an endpoint = {near_edges:.3f}")

print("\nthe random mask used by the disjoint classifier step is the same "
      "relaxation at p = 0.5:")
r = sample_random_mask((n,), rng, 0.5)
print(f"  mean r = {r.data.mean():.4f} (expect 0.5)")

g = sample_gumbel((1_000_000,), rng)
print(f"\nstandard Gumbel sample mean = {g.data.mean():.4f} "
      "(expect the Euler-Mascheroni constant, 0.5772)")
