"""Dense d-mode tensors: marginals, rescaling, scalings, entropy, files.

Walks through the elementary kernels everything else is built from.
Run with:  python3 demos/01_tensor_basics.py
"""

import tempfile
from pathlib import Path

import numpy as np

import tensorot as tot

rng = np.random.default_rng(7)

# A 3-mode tensor with side length 2: eight cells, first index slowest.
A = tot.Tensor(rng.random((2, 2, 2)))
print("order", A.d, "side", A.n, "mass %.4f" % tot.l1_norm(A))

# The mode-j marginal sums over every other mode.  Whatever the mode, the
# entries always add up to the total mass.
for j in range(A.d):
    s = tot.marginal(A, j)
    print(f"marginal {j}: {np.round(s, 4)}  (sum {s.sum():.4f})")

# Rescaling one mode moves exactly the l1 gap between target and marginal.
target = np.array([0.6, 0.4]) * tot.l1_norm(A)
moved = tot.l1_distance(tot.rescale_mode(A, target, 0), A)
gap = np.abs(target - tot.marginal(A, 0)).sum()
print("rescale moved %.6f == marginal gap %.6f" % (moved, gap))

# Diagonal scalings act entrywise through per-mode exponents and never
# touch the zero pattern.
X = rng.normal(size=(3, 2)) * 0.5
scaled = tot.apply_scaling(A, X)
print("scaling kept zero pattern:", np.array_equal(scaled.data == 0, A.data == 0))

# Entropy of a probability tensor sits between 0 and d*log(n), hitting the
# ceiling exactly on the independent (outer-product) coupling.
P = tot.MarginalFamily(np.full((3, 2), 0.5))
U = tot.outer(P.p)
print("entropy of the product coupling %.6f vs ceiling %.6f"
      % (tot.entropy(U), 3 * np.log(2)))

# Tensors and marginal families round-trip through JSON bit-stably.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "tensor.json"
    tot.save_tensor(A, path)
    again = tot.load_tensor(path)
    print("JSON round-trip exact:", np.array_equal(A.data, again.data))
