#!/usr/bin/env python3
"""A small (N1, N2) architecture sweep on synthetic data.

Each N2 doubles as the cluster count k, so the sweep re-clusters the HR
features once per row and reuses that clustering across the N1 columns.
Prints the rendered mAP table with the best cell starred.
"""

import numpy as np

from feature_transfer import GridSpec, PipelineConfig, render_grid, run_grid
from feature_transfer.feature_store import (SyntheticConfig,
                                            generate_synthetic,
                                            split_permutation, split_sizes)

SEED = 1

cfg = SyntheticConfig(n_clusters=5, n_per_cluster=200, d=64,
                      hr_separation=16.0, lr_noise_sigma=2.0, lr_rank=16,
                      seed=SEED)
hr, lr = generate_synthetic(cfg)
perm = split_permutation(hr.n, SEED)
n_train = split_sizes(hr.n, 0.1)[0]
tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])

base = PipelineConfig(iters=600, batch_size=100, lr0=0.05, weight_decay=0.01,
                      seed=SEED)
spec = GridSpec(n1_values=[16, 64, 128], n2_values=[5, 20, 40],
                base_config=base, seed=SEED)

print("sweeping 3 x 3 architectures (rows = N2 = k, columns = N1) ...")
result = run_grid(spec, hr.take(tr), lr.take(tr), lr.take(te))
print(render_grid(result))
print(f"best cell: N1={result.best[0]}, N2={result.best[1]} "
      f"-> mAP {result.cells[result.best].map:.3f}")
for (n1, n2), cell in sorted(result.cells.items()):
    print(f"  n1={n1:4d} n2={n2:3d}  {cell.seconds:5.2f}s")
