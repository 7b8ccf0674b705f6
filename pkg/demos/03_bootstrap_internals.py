"""
Inside the bootstrap calibration
================================

The calibration first decides how many subgroups the baseline holds
(prediction strength), clusters it, and then repeatedly carves a surrogate
"second sample" out of single clusters. Here each step is run by hand.
"""
import numpy as np

from hetero2st.hetero import (bootstrap_surrogate_split, cluster_baseline, cutoff_from_ensemble,
                              estimate_num_clusters, sample_mixing_weights)

rng = np.random.default_rng(1)
means = np.array([[0, 0, 0], [0, -4, -4], [4, -2, -3]], dtype=float)
x = means[rng.integers(0, 3, 1500)] + rng.normal(size=(1500, 3))

k_hat, strengths = estimate_num_clusters(x, kmax=6, seed=2, return_strengths=True)
print("prediction strength by k:", np.round(strengths, 3), "-> K =", k_hat)

model = cluster_baseline(x, k_hat, seed=3, n_init=5)
print("cluster sizes:", model.class_sizes.tolist())

# Corner weights put the whole surrogate in one cluster, cycling through them.
for b in range(1, 4):
    w = sample_mixing_weights(k_hat, "corner", b)
    split = bootstrap_surrogate_split(model, x, w, m=100, seed=b)
    print(f"round {b}: weights {w.lambdas}, surrogate rows {len(split.y_rows)}, "
          f"residual rows {len(split.x_rows)}")

# The cutoff is the smallest ensemble value with at most alpha*B values at or above it.
ensemble = rng.gamma(5.0, size=200)
print("cutoff at alpha=0.05:", round(cutoff_from_ensemble(ensemble, 0.05), 4),
      "= 10th largest:", round(np.sort(ensemble)[-10], 4))
