"""
Reading the learned embedding geometry
======================================

After training, the embedding of a good run is nearly block-diagonal in the
cosine-similarity sense: within-class directions align, across-class
directions are near orthogonal, and each class fills as many dimensions as it
can.  The diagnostics module quantifies all three.

Runs in ~20 s (trains a short federated model first).
"""

import numpy as np

from flowsim import (
    FederationConfig,
    class_spectra,
    cosine_matrix,
    derive_seed,
    dirichlet_partition,
    forward,
    gen_union_of_subspaces,
    orthogonality_score,
    run,
)

SEED = 7
ds = gen_union_of_subspaces(
    n_classes=4, subspace_dim=2, samples_per_class=200,
    ambient_dim=20, noise_sigma=0.05, seed=2026,
)
plan = dirichlet_partition(ds.labels, 8, 5.0, derive_seed(SEED, "partition"))
cfg = FederationConfig(
    n_clients=8, tau=5, eta=0.05, rounds=600, batch_size=64,
    seed=SEED, epsilon=0.5, hidden=(64, 32), embed_dim=10,
)
params, logs = run(cfg, ds, plan)
print(f"trained {cfg.rounds} rounds, f went {logs[0].objective:.3f} -> {logs[-1].objective:.3f}")

z, _ = forward(params, ds.x)

# Mean |cosine| between same-class and different-class embedding pairs.
sim = cosine_matrix(z, ds.labels)
inter, intra = orthogonality_score(sim)
print(f"\nmean |cos|: across classes {inter:.4f}, within classes {intra:.4f}")

# The raw similarity matrix is label-sorted, so the block structure is
# visible even in a coarse text rendering (one character per 40x40 block).
m = sim.values.shape[0]
step = m // 20
print("\ncoarse |cosine| map (# > 0.5 > + > 0.2 > .):")
for i in range(0, m, step):
    row = ""
    for j in range(0, m, step):
        block = np.abs(sim.values[i : i + step, j : j + step]).mean()
        row += "#" if block > 0.5 else ("+" if block > 0.2 else ".")
    print("  " + row)

# Per-class singular spectra: effective rank counts directions holding
# non-negligible energy; the target is min(class size, embedding dim).
report = class_spectra(z, ds.labels)
print("\nclass | size | effective rank / target | top singular values")
for c in report.classes:
    top = ", ".join(f"{s:.2f}" for s in c.singular_values[:4])
    print(f"  {c.label}   | {c.size}  | {c.effective_rank:2d} / {c.rank_target}            | {top}, ...")
