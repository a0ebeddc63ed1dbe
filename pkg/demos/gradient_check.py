#!/usr/bin/env python3
"""Sanity-check the analytic backprop against central finite differences.

Builds a tiny float64 network, perturbs every parameter by +-1e-3, and
compares the resulting loss slopes with the gradients from backward().
"""

import numpy as np

from feature_transfer import backward, forward, init_network, loss_softmax_ce

rng = np.random.default_rng(0)
d, n1, n2, batch = 6, 5, 3, 4
params = init_network(d, n1, n2, seed=1, dtype=np.float64)
X = rng.standard_normal((batch, d))
labels = rng.integers(0, n2, batch)

_, logits = forward(params, X)
print(f"loss at init: {loss_softmax_ce(logits, labels):.4f} "
      f"(uniform would be {np.log(n2):.4f})")

grads = backward(params, X, labels)

eps = 1e-3
worst = 0.0
for t_idx, tensor in enumerate(params.tensors()):
    fd = np.zeros(tensor.size)
    for i in range(tensor.size):
        probes = []
        for delta in (+eps, -eps):
            nudged = params.copy()
            nudged.tensors()[t_idx].reshape(-1)[i] += delta
            _, z = forward(nudged, X)
            probes.append(loss_softmax_ce(z, labels))
        fd[i] = (probes[0] - probes[1]) / (2 * eps)
    analytic = grads.tensors()[t_idx].reshape(-1)
    err = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1.0)
    worst = max(worst, err.max())
    print(f"tensor {t_idx}: {tensor.size:3d} params, "
          f"max relative error {err.max():.2e}")

print(f"worst over all tensors: {worst:.2e} (tolerance 1e-4)")
assert worst < 1e-4
