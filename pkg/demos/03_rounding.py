"""Rounding a near-feasible plan into the transport polytope.

The shrink passes cap each marginal at its target; a rank-one tensor of
the leftover deficits restores exact feasibility.  Total movement is
certified against twice the summed marginal gaps.
Run with:  python3 demos/03_rounding.py
"""

import numpy as np

import tensorot as tot

rng = np.random.default_rng(23)

n, d = 3, 3
p = 0.3 + rng.random((d, n))
P = tot.MarginalFamily(p / p.sum(axis=1, keepdims=True))

# Start from a positive tensor whose marginals are off target.
F = tot.Tensor(0.2 + rng.random((n,) * d))
F = tot.Tensor(F.data / tot.l1_norm(F) * 1.08)

gaps = np.abs(tot.all_marginals(F) - P.p).sum(axis=1)
print("marginal gaps before rounding:", np.round(gaps, 4))

G, submarginals = tot.shrink_to_submarginals(F, P)
print("after shrinking: every marginal capped:",
      bool(np.all(submarginals <= P.p + 1e-12)),
      " mass %.4f -> %.4f" % (tot.l1_norm(F), tot.l1_norm(G)))

B = tot.rank_one_correction(G, submarginals, P)
worst = max(np.abs(tot.marginal(B, j) - P.p[j]).max() for j in range(d))
print("after the rank-one correction: worst marginal error %.2e" % worst)

moved = tot.l1_distance(B, F)
budget = 2.0 * gaps.sum()
print("moved %.4f of l1 mass, certified budget %.4f" % (moved, budget))

# Feasible plans are fixed points.
again = tot.round_to_polytope(B, P)
print("rounding a feasible plan is a no-op: %.1e" % tot.l1_distance(again, B))
