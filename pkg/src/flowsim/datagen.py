"""Synthetic data, CSV ingestion, and non-IID client partitioning.

The synthetic generator draws one orthonormal basis per class (blocks of a
single QR factor, so inter-class orthogonality is exact up to rounding) and
emits samples  x = U_k c + sigma * n  with standard-normal coefficients and
ambient noise.  Client shards come from the usual Dirichlet recipe: for
every class, a proportion vector over clients is drawn from Dir(alpha) and
the class samples are split multinomially.  Small alpha gives skewed
shards, large alpha approaches a uniform split.
"""

import json
from dataclasses import dataclass

import numpy as np

from .linalg import check_matrix, derive_seed, make_rng


class DimensionError(Exception):
    """Requested class subspaces do not fit in the ambient dimension."""


class ParseError(Exception):
    """CSV row failed to parse; message carries the 1-based line number."""


class InconsistentWidth(Exception):
    """CSV rows disagree on the number of feature columns."""


class InfeasiblePartition(Exception):
    """No partition satisfying the per-client minimum after resampling."""


@dataclass(frozen=True, eq=False)
class Dataset:
    x: np.ndarray          # features, ambient_dim x n_samples
    labels: np.ndarray     # class index per column
    source: str            # "synthetic" | "csv"

    def __post_init__(self):
        x = check_matrix(self.x, "X")
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "labels", labels)
        if labels.shape[0] != x.shape[1]:
            raise ValueError("one label per sample column required")
        if labels.size == 0:
            raise ValueError("dataset is empty")
        k = int(labels.max()) + 1
        present = np.unique(labels)
        if present[0] < 0 or present.size != k:
            raise ValueError("labels must densely cover 0..K-1")

    @property
    def n_samples(self):
        return self.x.shape[1]

    @property
    def ambient_dim(self):
        return self.x.shape[0]

    @property
    def n_classes(self):
        return int(self.labels.max()) + 1


@dataclass(frozen=True, eq=False)
class PartitionPlan:
    client_indices: tuple   # one sorted index array per client
    n_clients: int
    alpha: float
    seed: int

    def __post_init__(self):
        if len(self.client_indices) != self.n_clients:
            raise ValueError("one index list per client required")
        sizes = [idx.size for idx in self.client_indices]
        if min(sizes, default=0) == 0:
            raise ValueError("empty client shard")
        merged = np.concatenate(self.client_indices)
        total = merged.size
        if not np.array_equal(np.sort(merged), np.arange(total)):
            raise ValueError("client shards must partition 0..M-1")

    @property
    def shard_sizes(self):
        return np.array([idx.size for idx in self.client_indices])


def gen_union_of_subspaces(
    n_classes=4,
    subspace_dim=2,
    samples_per_class=200,
    ambient_dim=20,
    noise_sigma=0.05,
    seed=0,
):
    """Samples from mutually orthogonal class subspaces plus ambient noise.

    Basis, coefficient and noise draws use independent derived streams, so
    two calls differing only in ``noise_sigma`` share the same geometry and
    coefficients.
    """
    if n_classes * subspace_dim > ambient_dim:
        raise DimensionError(
            f"{n_classes} classes x {subspace_dim} dims exceed ambient "
            f"dimension {ambient_dim}"
        )
    rng_basis = make_rng(derive_seed(seed, "uos-bases"))
    rng_coeff = make_rng(derive_seed(seed, "uos-coeffs"))
    rng_noise = make_rng(derive_seed(seed, "uos-noise"))
    g = rng_basis.standard_normal((ambient_dim, n_classes * subspace_dim))
    q, _ = np.linalg.qr(g)
    blocks = []
    labels = []
    for k in range(n_classes):
        basis = q[:, k * subspace_dim : (k + 1) * subspace_dim]
        coeff = rng_coeff.standard_normal((subspace_dim, samples_per_class))
        noise = rng_noise.standard_normal((ambient_dim, samples_per_class))
        blocks.append(basis @ coeff + noise_sigma * noise)
        labels.append(np.full(samples_per_class, k, dtype=np.int64))
    return Dataset(np.hstack(blocks), np.concatenate(labels), "synthetic")


def _parse_float(token, lineno):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"line {lineno}: cannot parse {token!r}") from None


def load_csv(path):
    """Read "label,feat1,...,featD" rows; a header line is auto-detected.

    Raw labels are reindexed densely to 0..K-1 in sorted order.
    """
    rows = []
    raw_labels = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if lineno == 1:
                try:
                    float(tokens[0])
                except ValueError:
                    continue  # header line
            if len(tokens) < 2:
                raise ParseError(f"line {lineno}: need a label and features")
            if width is None:
                width = len(tokens)
            elif len(tokens) != width:
                raise InconsistentWidth(
                    f"line {lineno}: {len(tokens)} fields, expected {width}"
                )
            raw_labels.append(_parse_float(tokens[0], lineno))
            rows.append([_parse_float(t, lineno) for t in tokens[1:]])
    if not rows:
        raise ParseError(f"{path}: no data rows")
    _, dense = np.unique(np.array(raw_labels), return_inverse=True)
    x = np.array(rows, dtype=np.float64).T
    return Dataset(x, dense.astype(np.int64), "csv")


def save_csv(path, dataset):
    with open(path, "w", encoding="ascii") as fh:
        for j in range(dataset.n_samples):
            feats = ",".join(f"{v:.17g}" for v in dataset.x[:, j])
            fh.write(f"{int(dataset.labels[j])},{feats}\n")


def dirichlet_partition(labels, n_clients, alpha, seed, min_per_client=2):
    """Split sample indices across clients, class by class.

    Every class's samples are shuffled and dealt to clients with
    multinomial counts drawn from a fresh Dir(alpha) proportion vector.
    Draws are repeated (up to 100 attempts) until every client holds at
    least ``min_per_client`` samples.
    """
    labels = np.asarray(labels, dtype=np.int64).ravel()
    total = labels.size
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if total < n_clients * min_per_client:
        raise ValueError(
            f"{total} samples cannot give {n_clients} clients "
            f">= {min_per_client} each"
        )
    rng = make_rng(seed)
    classes = np.unique(labels)
    for _ in range(100):
        shards = [[] for _ in range(n_clients)]
        for k in classes:
            idx = rng.permutation(np.flatnonzero(labels == k))
            p = rng.dirichlet(np.full(n_clients, float(alpha)))
            counts = rng.multinomial(idx.size, p)
            stop = np.cumsum(counts)[:-1]
            for client, part in enumerate(np.split(idx, stop)):
                shards[client].append(part)
        merged = [
            np.sort(np.concatenate(parts)) if parts else np.array([], dtype=np.int64)
            for parts in shards
        ]
        if min(part.size for part in merged) >= max(1, min_per_client):
            return PartitionPlan(tuple(merged), n_clients, float(alpha), int(seed))
    raise InfeasiblePartition(
        f"no draw with >= {min_per_client} samples per client in 100 attempts"
    )


def save_partition(path, plan):
    payload = {
        "n_clients": plan.n_clients,
        "alpha": plan.alpha,
        "seed": plan.seed,
        "clients": {str(i): idx.tolist() for i, idx in enumerate(plan.client_indices)},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)


def load_partition(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    n = int(payload["n_clients"])
    indices = tuple(
        np.asarray(payload["clients"][str(i)], dtype=np.int64) for i in range(n)
    )
    return PartitionPlan(indices, n, float(payload["alpha"]), int(payload["seed"]))
