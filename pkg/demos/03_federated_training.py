"""
Federated vs centralized training on the same data
==================================================

Eight clients hold Dirichlet-skewed shards and take one local SGD step per
round; every tau rounds their parameter vectors are averaged and broadcast
back.  The centralized reference is the same loop with one client owning
everything.  Both minimize the coding-rate objective through the same
backbone; the federated run lands close to, but not below, the centralized
one.

Runs in ~15 s.
"""

from flowsim import (
    FederationConfig,
    derive_seed,
    dirichlet_partition,
    gen_union_of_subspaces,
    run,
)

ROUNDS = 400
SEED = 7

ds = gen_union_of_subspaces(
    n_classes=4, subspace_dim=2, samples_per_class=200,
    ambient_dim=20, noise_sigma=0.05, seed=2026,
)


def train(mode, n_clients):
    cfg = FederationConfig(
        n_clients=n_clients, tau=5, eta=0.05, rounds=ROUNDS, batch_size=64,
        seed=SEED, epsilon=0.5, mode=mode, hidden=(64, 32), embed_dim=10,
    )
    plan = None
    if mode == "federated":
        plan = dirichlet_partition(ds.labels, n_clients, 5.0, derive_seed(SEED, "partition"))
    return run(cfg, ds, plan)


print(f"{'round':>5} | {'centralized f':>14} | {'federated f (N=8)':>18}")
_, logs_c = train("centralized", 1)
_, logs_f = train("federated", 8)
for t in (1, 50, 100, 200, 300, ROUNDS):
    lc, lf = logs_c[t - 1], logs_f[t - 1]
    print(f"{t:5d} | {lc.objective:14.4f} | {lf.objective:18.4f}")

print(f"\naggregations in the federated run: {ROUNDS // 5}")
print(f"final gap (federated - centralized): {logs_f[-1].objective - logs_c[-1].objective:+.4f} nats")

# The per-round logs also carry client-dispersion diagnostics: sigma2_hat
# measures how far shard gradients sit from the pooled gradient.
last = logs_f[-1]
print(f"last round: |grad|^2 = {last.grad_norm_sq:.3e}, sigma2_hat = {last.sigma2_hat:.3e}, delta_hat = {last.delta_hat:.3e}")
