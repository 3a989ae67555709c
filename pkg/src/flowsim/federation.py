"""Federated training loop with periodic parameter averaging.

Every round, each client takes one SGD step on the coding-rate objective of
a minibatch drawn without replacement from its own shard (reshuffled each
local pass); every ``tau`` rounds the clients' parameter vectors are
averaged uniformly and broadcast back.  Centralized mode is the same loop
with a single client owning the whole dataset and no averaging.

Round metrics are computed at the uniform average of the current client
parameters (the model the server would assemble at that instant), so the
logged trajectory is well-defined between aggregations too.  Gradient
statistics compare each client's full-shard gradient against the gradient
of the pooled objective:

    sigma2_hat = mean_n || g_n - g_pool ||^2       (spread proxy)
    mu_hat_n   = g_n - mean_m(g_m)                 (bias proxies, sum to 0)
    delta_hat  = max_n | mu_hat_n . g_pool |       (worst bias alignment)

Clients may step concurrently (``FLOWSIM_THREADS`` caps the pool, default
the machine's cores); each client owns its state and results are reduced
in client order, so schedules cannot change the outcome.
"""

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .backbone import backward, flatten_params, forward, init_backbone, unflatten_params
from .linalg import derive_seed, make_rng
from .mcr2 import CodingRateParams, RepresentationBatch, mcr2_gradient, mcr2_objective


class NonFiniteParameters(Exception):
    """Parameters left the finite range; training diverged."""

    def __init__(self, message, round_index=None):
        super().__init__(message)
        self.round_index = round_index


class ShapeMismatch(Exception):
    """Parameter vectors of different lengths cannot be averaged."""


@dataclass
class FederationConfig:
    n_clients: int
    tau: int                 # rounds between aggregations
    eta: float               # SGD step size
    rounds: int
    batch_size: int
    local_epochs: int = 1    # bookkeeping only; one minibatch step per round
    seed: int = 0
    epsilon: float = 0.5
    mode: str = "federated"  # "federated" | "centralized"
    hidden: tuple = (64, 32)
    embed_dim: int = 10
    eval_cap: int = 512
    weighted_averaging: bool = False

    def validate(self):
        if self.n_clients < 1:
            raise ValueError("n_clients must be >= 1")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.local_epochs < 1:
            raise ValueError("local_epochs must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.mode not in ("federated", "centralized"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.embed_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("layer widths must be positive")


@dataclass
class ClientState:
    client_id: int
    params: object           # BackboneParams
    indices: np.ndarray
    rng: np.random.Generator
    _order: np.ndarray = field(default=None, repr=False)
    _cursor: int = field(default=0, repr=False)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.indices.size == 0:
            raise ValueError(f"client {self.client_id} has an empty shard")

    def next_batch(self, batch_size):
        """Next minibatch indices, without replacement within a local pass."""
        if self._order is None or self._cursor >= self._order.size:
            self._order = self.rng.permutation(self.indices)
            self._cursor = 0
        take = self._order[self._cursor : self._cursor + batch_size]
        self._cursor += take.size
        return take


@dataclass(frozen=True)
class RoundLog:
    round: int
    objective: float
    rate: float
    per_class_rate: float
    grad_norm_sq: float
    sigma2_hat: float
    delta_hat: float
    wall_ms: float
    local_objectives: tuple


@dataclass(frozen=True, eq=False)
class GradientStats:
    global_gradient: np.ndarray
    client_gradients: np.ndarray   # n_clients x n_params
    global_norm_sq: float
    sigma2_hat: float
    mu_hat: np.ndarray             # deviations from the client mean
    delta_hat: float


def evaluate_objective(params, x, labels, n_classes, epsilon):
    z, _ = forward(params, x)
    batch = RepresentationBatch(z, labels, n_classes)
    return mcr2_objective(batch, CodingRateParams(epsilon))


def full_gradient(params, x, labels, n_classes, epsilon):
    """Exact parameter gradient of the objective on the given samples."""
    z, tape = forward(params, x)
    batch = RepresentationBatch(z, labels, n_classes)
    dz = mcr2_gradient(batch, CodingRateParams(epsilon))
    return backward(tape, dz)


def local_update(state, params, dataset, steps, eta, epsilon, batch_size):
    """Run ``steps`` SGD steps on the client's shard, starting from ``params``."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    current = params
    manifest = current.manifest()
    n_classes = dataset.n_classes
    for _ in range(steps):
        idx = state.next_batch(batch_size)
        try:
            grad = full_gradient(
                current, dataset.x[:, idx], dataset.labels[idx], n_classes, epsilon
            )
        except ValueError as exc:
            # On loop-validated data the only ValueError left is a forward
            # pass overflowing, i.e. the parameters have blown up.
            raise NonFiniteParameters(str(exc)) from exc
        vec = flatten_params(current) - eta * grad
        if not np.isfinite(vec).all():
            raise NonFiniteParameters("parameters became non-finite")
        current = unflatten_params(vec, manifest)
    state.params = current
    return state


def fedavg(vectors, weights=None):
    """Elementwise (weighted) mean of parameter vectors."""
    if not vectors:
        raise ValueError("nothing to average")
    length = vectors[0].size
    for v in vectors[1:]:
        if v.size != length:
            raise ShapeMismatch(f"vector sizes differ: {v.size} vs {length}")
    stacked = np.stack(vectors)
    if weights is None:
        return stacked.sum(axis=0) / len(vectors)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(vectors),):
        raise ShapeMismatch("one weight per vector required")
    if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    return weights @ stacked


def estimate_gradient_stats(dataset, shards, params, epsilon):
    """Full-batch gradient statistics at a shared parameter setting."""
    n_classes = dataset.n_classes
    g_pool = full_gradient(
        params, dataset.x, dataset.labels, n_classes, epsilon
    )
    client_grads = np.stack(
        [
            full_gradient(
                params, dataset.x[:, idx], dataset.labels[idx], n_classes, epsilon
            )
            for idx in shards
        ]
    )
    mean_grad = client_grads.mean(axis=0)
    mu_hat = client_grads - mean_grad
    diffs = client_grads - g_pool
    sigma2 = float((diffs * diffs).sum(axis=1).mean())
    delta = float(np.abs(mu_hat @ g_pool).max())
    return GradientStats(
        global_gradient=g_pool,
        client_gradients=client_grads,
        global_norm_sq=float(g_pool @ g_pool),
        sigma2_hat=sigma2,
        mu_hat=mu_hat,
        delta_hat=delta,
    )


def _worker_cap():
    raw = os.environ.get("FLOWSIM_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = os.cpu_count() or 1
    return max(1, cap)


def run(config, dataset, plan=None):
    """Train for ``config.rounds`` rounds; returns (final params, round logs)."""
    config.validate()
    if config.mode == "centralized":
        shards = [np.arange(dataset.n_samples)]
    else:
        if plan is None:
            raise ValueError("federated mode needs a partition plan")
        if plan.n_clients != config.n_clients:
            raise ValueError(
                f"plan has {plan.n_clients} clients, config says {config.n_clients}"
            )
        shards = list(plan.client_indices)

    dims = [dataset.ambient_dim, *config.hidden, config.embed_dim]
    params0 = init_backbone(dims, make_rng(derive_seed(config.seed, "init")))
    manifest = params0.manifest()
    clients = [
        ClientState(
            i, params0, idx, make_rng(derive_seed(config.seed, f"client-{i}"))
        )
        for i, idx in enumerate(shards)
    ]

    eval_rng = make_rng(derive_seed(config.seed, "eval"))
    cap = min(dataset.n_samples, config.eval_cap)
    eval_idx = np.sort(eval_rng.choice(dataset.n_samples, size=cap, replace=False))
    eval_x = dataset.x[:, eval_idx]
    eval_labels = dataset.labels[eval_idx]

    weights = None
    if config.weighted_averaging:
        sizes = np.array([c.indices.size for c in clients], dtype=np.float64)
        weights = sizes / sizes.sum()

    n_workers = min(len(clients), _worker_cap())
    pool = ThreadPoolExecutor(max_workers=n_workers) if n_workers > 1 else None

    def step_client(state):
        return local_update(
            state,
            state.params,
            dataset,
            steps=1,
            eta=config.eta,
            epsilon=config.epsilon,
            batch_size=config.batch_size,
        )

    logs = []
    try:
        for t in range(1, config.rounds + 1):
            t0 = time.perf_counter()
            try:
                if pool is not None:
                    list(pool.map(step_client, clients))
                else:
                    for state in clients:
                        step_client(state)
            except NonFiniteParameters as exc:
                raise NonFiniteParameters(
                    f"round {t}: {exc}; try a smaller step size", round_index=t
                ) from exc

            aggregated = config.mode == "federated" and t % config.tau == 0
            if aggregated:
                avg_vec = fedavg([flatten_params(c.params) for c in clients], weights)
                for state in clients:
                    state.params = unflatten_params(avg_vec, manifest)
                global_vec = avg_vec
            elif len(clients) == 1:
                global_vec = flatten_params(clients[0].params)
            else:
                global_vec = fedavg(
                    [flatten_params(c.params) for c in clients], weights
                )
            global_params = unflatten_params(global_vec, manifest)

            try:
                stats = estimate_gradient_stats(
                    dataset, shards, global_params, config.epsilon
                )
                value = evaluate_objective(
                    global_params, eval_x, eval_labels,
                    dataset.n_classes, config.epsilon,
                )
                local_vals = tuple(
                    evaluate_objective(
                        c.params,
                        dataset.x[:, c.indices],
                        dataset.labels[c.indices],
                        dataset.n_classes,
                        config.epsilon,
                    ).objective
                    for c in clients
                )
            except ValueError as exc:
                # Same reasoning as in local_update: mid-loop this can only
                # be an overflowed forward pass.
                raise NonFiniteParameters(
                    f"round {t}: {exc}; try a smaller step size", round_index=t
                ) from exc
            logs.append(
                RoundLog(
                    round=t,
                    objective=value.objective,
                    rate=value.rate,
                    per_class_rate=value.per_class_rate,
                    grad_norm_sq=stats.global_norm_sq,
                    sigma2_hat=stats.sigma2_hat,
                    delta_hat=stats.delta_hat,
                    wall_ms=(time.perf_counter() - t0) * 1e3,
                    local_objectives=local_vals,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown()
    return unflatten_params(global_vec, manifest), logs


ROUND_CSV_HEADER = "round,f,R,Rc,grad_norm_sq,sigma2_hat,delta_hat,wall_ms"


def write_round_csv(path, logs):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(ROUND_CSV_HEADER + "\n")
        for lg in logs:
            fh.write(
                f"{lg.round},{lg.objective:.17g},{lg.rate:.17g},"
                f"{lg.per_class_rate:.17g},{lg.grad_norm_sq:.17g},"
                f"{lg.sigma2_hat:.17g},{lg.delta_hat:.17g},{lg.wall_ms:.3f}\n"
            )


def write_round_jsonl(path, logs):
    with open(path, "w", encoding="ascii") as fh:
        for lg in logs:
            fh.write(
                json.dumps(
                    {
                        "round": lg.round,
                        "f": lg.objective,
                        "R": lg.rate,
                        "Rc": lg.per_class_rate,
                        "grad_norm_sq": lg.grad_norm_sq,
                        "sigma2_hat": lg.sigma2_hat,
                        "delta_hat": lg.delta_hat,
                        "wall_ms": lg.wall_ms,
                        "local_f": list(lg.local_objectives),
                    }
                )
                + "\n"
            )
