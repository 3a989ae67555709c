"""Coding-rate objective for labeled representation batches.

The compactness measure for a batch Z in R^{d x M} at coding precision
``epsilon`` is

    R(Z) = 1/2 * logdet(I + alpha * Z Z^T),      alpha = d / (M * epsilon^2)

in nats.  Splitting the batch by class and averaging the per-class rates
(sample weighted) gives Rc; the training objective minimized by the backbone
is ``objective = Rc - R``: compress each class, keep the ensemble diverse.

Log-dets are evaluated on the smaller Gram side (the d x d form when
M >= d, the M x M form otherwise; both sides agree by the
Weinstein-Aronszajn determinant identity), which also keeps the linear
solves behind the analytic gradient cheap.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import check_matrix, cholesky, logdet_spd, solve_spd, sym_eig


@dataclass(frozen=True, eq=False)
class RepresentationBatch:
    """A d x M matrix of column embeddings plus per-column class labels."""

    z: np.ndarray
    labels: np.ndarray
    n_classes: int
    on_sphere: bool = False
    _class_cols: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        z = check_matrix(self.z, "Z")
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "labels", labels)
        d, m = z.shape
        if d < 1 or m < 1:
            raise ValueError(f"Z must be at least 1x1, got {z.shape}")
        if labels.shape[0] != m:
            raise ValueError(f"need {m} labels, got {labels.shape[0]}")
        if self.n_classes < 1:
            raise ValueError("n_classes must be positive")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError("labels must lie in [0, n_classes)")
        if self.on_sphere:
            norms = np.linalg.norm(z, axis=0)
            if np.abs(norms - 1.0).max() > 1e-8:
                raise ValueError("columns must have unit norm on the sphere")
        cols = tuple(
            np.flatnonzero(labels == k) for k in range(self.n_classes)
        )
        object.__setattr__(self, "_class_cols", cols)

    @property
    def dim(self):
        return self.z.shape[0]

    @property
    def n_samples(self):
        return self.z.shape[1]

    def class_columns(self, k):
        """Column indices of class k (possibly empty)."""
        return self._class_cols[k]


@dataclass(frozen=True)
class CodingRateParams:
    """Coding precision epsilon; scale alpha = dim / (count * epsilon^2)."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def alpha(self, dim, count):
        return dim / (count * self.epsilon * self.epsilon)


class ObjectiveValue(NamedTuple):
    objective: float
    rate: float
    per_class_rate: float


def _half_logdet(z, alpha, form="auto"):
    """1/2 * logdet(I + alpha * z z^T), on the requested Gram side."""
    d, m = z.shape
    if form == "auto":
        form = "gram" if m < d else "square"
    if form == "square":
        g = np.eye(d) + alpha * (z @ z.T)
    elif form == "gram":
        g = np.eye(m) + alpha * (z.T @ z)
    else:
        raise ValueError(f"unknown form {form!r}")
    return 0.5 * logdet_spd(cholesky(g))


def _inv_apply(z, alpha, form="auto"):
    """(I + alpha * z z^T)^{-1} z via the cheaper of the two solves."""
    d, m = z.shape
    if form == "auto":
        form = "gram" if m < d else "square"
    if form == "square":
        g = np.eye(d) + alpha * (z @ z.T)
        return solve_spd(cholesky(g), z)
    if form == "gram":
        # push-through: (I + a zz^T)^{-1} z = z (I + a z^T z)^{-1}
        g = np.eye(m) + alpha * (z.T @ z)
        return solve_spd(cholesky(g), z.T).T
    raise ValueError(f"unknown form {form!r}")


def coding_rate(batch, params, form="auto"):
    """Rate of the whole batch, R(Z) >= 0."""
    alpha = params.alpha(batch.dim, batch.n_samples)
    return float(_half_logdet(batch.z, alpha, form))


def per_class_coding_rate(batch, params):
    """Sample-weighted average of the class-restricted rates.

    Classes absent from the batch contribute zero.
    """
    m = batch.n_samples
    total = 0.0
    for k in range(batch.n_classes):
        cols = batch.class_columns(k)
        mk = cols.size
        if mk == 0:
            continue
        alpha_k = params.alpha(batch.dim, mk)
        total += (mk / m) * _half_logdet(batch.z[:, cols], alpha_k)
    return float(total)


def mcr2_objective(batch, params):
    """(objective, rate, per_class_rate) with objective = Rc - R."""
    rate = coding_rate(batch, params)
    rc = per_class_coding_rate(batch, params)
    return ObjectiveValue(rc - rate, rate, rc)


def mcr2_gradient(batch, params):
    """d(objective)/dZ, the same shape as Z.

    Per column j of class k:

        dRc/dz_j = (m_k/M) * alpha_k * (I + alpha_k Z_k Z_k^T)^{-1} z_j
        dR/dz_j  =           alpha   * (I + alpha   Z   Z^T  )^{-1} z_j
    """
    z = batch.z
    m = batch.n_samples
    alpha = params.alpha(batch.dim, m)
    grad = -alpha * _inv_apply(z, alpha)
    for k in range(batch.n_classes):
        cols = batch.class_columns(k)
        mk = cols.size
        if mk == 0:
            continue
        alpha_k = params.alpha(batch.dim, mk)
        grad[:, cols] += (mk / m) * alpha_k * _inv_apply(z[:, cols], alpha_k)
    return grad


def rate_from_spectrum(batch, params):
    """Eigenvalue route to R(Z): 1/2 * sum(log1p(alpha * eig(Z Z^T))).

    Independent of the Cholesky path; used as a cross-check oracle.
    """
    alpha = params.alpha(batch.dim, batch.n_samples)
    w, _ = sym_eig(batch.z @ batch.z.T)
    return float(0.5 * np.log1p(alpha * np.clip(w, 0.0, None)).sum())


def check_subspace_conditions(dim, class_dims, class_sizes, epsilon):
    """Can per-class subspaces be mutually orthogonal and full size?

    True when the embedding space has room for every class subspace
    (dim >= sum of per-class dimensions) and the coding precision is fine
    enough:  epsilon^4 < min_k |class k| * dim^2 / (M * class_dim_k^2).

    The returned report also carries the worst-case precision threshold
    over mismatched index pairs, since the bound can be read with the
    denominator dimension taken from a different class.
    """
    class_dims = np.asarray(class_dims, dtype=np.int64)
    class_sizes = np.asarray(class_sizes, dtype=np.int64)
    if class_dims.shape != class_sizes.shape or class_dims.ndim != 1:
        raise ValueError("class_dims and class_sizes must be 1-D, same length")
    if (class_dims <= 0).any() or (class_sizes <= 0).any():
        raise ValueError("class dimensions and sizes must be positive")
    total = int(class_sizes.sum())
    eps4 = float(epsilon) ** 4
    thresholds = class_sizes * dim * dim / (total * class_dims.astype(float) ** 2)
    threshold = float(thresholds.min())
    worst = float(
        class_sizes.min() * dim * dim / (total * float(class_dims.max()) ** 2)
    )
    embedding_ok = bool(dim >= class_dims.sum())
    precision_ok = bool(eps4 < threshold)
    report = {
        "embedding_ok": embedding_ok,
        "precision_ok": precision_ok,
        "dim": int(dim),
        "dim_required": int(class_dims.sum()),
        "epsilon_fourth": eps4,
        "precision_threshold": threshold,
        "precision_threshold_worst_pair": worst,
        "precision_margin": threshold - eps4,
    }
    return embedding_ok and precision_ok, report
