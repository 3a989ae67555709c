"""Feature extractor: an MLP mapping inputs to unit-norm embeddings.

The network is a stack of affine layers with tanh on the hidden layers and
a linear final layer, followed by projection of each output column onto the
unit sphere (which removes the scale degeneracy of the coding-rate
objective).  tanh keeps the map smooth in the parameters.  Forward and
backward passes are written out by hand so the parameter gradient can be
checked against finite differences.

Parameters flatten to a single float64 vector (plus a shape manifest) so
that client models can be averaged elementwise; the round trip is
bit-exact.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import check_matrix, sym_eig
from .mcr2 import RepresentationBatch

DEGENERATE_NORM = 1e-12


class DegenerateEmbeddingWarning(UserWarning):
    """A pre-projection column collapsed to (near) zero norm."""


class EmptyTrainingClass(Exception):
    """Subspace classifier needs at least one sample of every class."""


@dataclass(frozen=True, eq=False)
class BackboneParams:
    weights: tuple       # layer weight matrices, out x in
    biases: tuple        # layer bias vectors, out
    activations: tuple   # "tanh" | "linear" per layer

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("layer lists disagree in length")
        prev = None
        for w, b, act in zip(self.weights, self.biases, self.activations):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError("bad layer shapes")
            if prev is not None and w.shape[1] != prev:
                raise ValueError("consecutive layer dimensions incompatible")
            if act not in ("tanh", "linear"):
                raise ValueError(f"unknown activation {act!r}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError("non-finite parameters")
            prev = w.shape[0]

    @property
    def input_dim(self):
        return self.weights[0].shape[1]

    @property
    def output_dim(self):
        return self.weights[-1].shape[0]

    def manifest(self):
        """JSON-friendly shape record, enough to unflatten a vector."""
        return [
            {"out": int(w.shape[0]), "in": int(w.shape[1]), "activation": act}
            for w, act in zip(self.weights, self.activations)
        ]


def init_backbone(layer_dims, rng):
    """Glorot-uniform weights, zero biases, tanh hidden / linear output."""
    if len(layer_dims) < 2:
        raise ValueError("need at least input and output dimensions")
    weights, biases, acts = [], [], []
    n_layers = len(layer_dims) - 1
    for i in range(n_layers):
        fan_in, fan_out = layer_dims[i], layer_dims[i + 1]
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-lim, lim, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
        acts.append("linear" if i == n_layers - 1 else "tanh")
    return BackboneParams(tuple(weights), tuple(biases), tuple(acts))


def flatten_params(params):
    """Concatenate all weights and biases into one float64 vector."""
    parts = []
    for w, b in zip(params.weights, params.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unflatten_params(vec, manifest):
    """Rebuild :class:`BackboneParams` from a flat vector and its manifest."""
    vec = np.asarray(vec, dtype=np.float64)
    weights, biases, acts = [], [], []
    pos = 0
    for entry in manifest:
        out, inp = int(entry["out"]), int(entry["in"])
        weights.append(vec[pos : pos + out * inp].reshape(out, inp).copy())
        pos += out * inp
        biases.append(vec[pos : pos + out].copy())
        pos += out
        acts.append(entry["activation"])
    if pos != vec.size:
        raise ValueError(f"vector length {vec.size} does not match manifest ({pos})")
    return BackboneParams(tuple(weights), tuple(biases), tuple(acts))


@dataclass(frozen=True, eq=False)
class Tape:
    """Intermediates of one forward pass, consumed by :func:`backward`."""

    params: BackboneParams
    activations: tuple    # a_0 = X, a_1, ..., a_L (pre-projection)
    norms: np.ndarray     # column norms of a_L
    z: np.ndarray         # projected output
    degenerate: np.ndarray


def forward(params, x):
    """Map inputs (columns of x) to unit-norm embeddings.

    Columns whose pre-projection norm falls below 1e-12 are replaced by the
    first canonical basis vector and reported via
    :class:`DegenerateEmbeddingWarning`.  Non-finite norms (parameter
    blow-up) raise ValueError.
    """
    x = check_matrix(x, "X")
    if x.shape[0] != params.input_dim:
        raise ValueError(
            f"input rows {x.shape[0]} != backbone input dim {params.input_dim}"
        )
    acts = [x]
    a = x
    for w, b, act in zip(params.weights, params.biases, params.activations):
        s = w @ a + b[:, None]
        a = np.tanh(s) if act == "tanh" else s
        acts.append(a)
    norms = np.linalg.norm(a, axis=0)
    # An overflowed norm cannot be projected to the sphere; refuse rather
    # than silently emitting zero columns.
    if not np.isfinite(norms).all():
        raise ValueError("pre-projection norms are non-finite")
    degenerate = norms < DEGENERATE_NORM
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} embedding column(s) collapsed below "
            f"{DEGENERATE_NORM}; substituting the first basis vector",
            DegenerateEmbeddingWarning,
            stacklevel=2,
        )
    safe = np.where(degenerate, 1.0, norms)
    z = a / safe
    if degenerate.any():
        z[:, degenerate] = 0.0
        z[0, degenerate] = 1.0
    tape = Tape(params, tuple(acts), norms, z, degenerate)
    return z, tape


def project_sphere_backward(tape, dz):
    """Pull a gradient in z back through the unit-sphere projection.

    The Jacobian per column is (I - zhat zhat^T) / norm; the radial
    direction is annihilated.  Degenerate columns are constants, so their
    gradient is zero.
    """
    zhat = tape.z
    radial = (zhat * dz).sum(axis=0)
    dy = (dz - zhat * radial) / np.where(tape.degenerate, 1.0, tape.norms)
    if tape.degenerate.any():
        dy = dy.copy()
        dy[:, tape.degenerate] = 0.0
    return dy


def backward(tape, dz):
    """Chain an output gradient dL/dZ back to the flat parameter gradient."""
    params = tape.params
    g = project_sphere_backward(tape, dz)
    n_layers = len(params.weights)
    grads_w = [None] * n_layers
    grads_b = [None] * n_layers
    for l in range(n_layers - 1, -1, -1):
        if params.activations[l] == "tanh":
            a_out = tape.activations[l + 1]
            g = g * (1.0 - a_out * a_out)
        a_in = tape.activations[l]
        grads_w[l] = g @ a_in.T
        grads_b[l] = g.sum(axis=1)
        if l > 0:
            g = params.weights[l].T @ g
    parts = []
    for gw, gb in zip(grads_w, grads_b):
        parts.append(gw.ravel())
        parts.append(gb)
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# Personalized linear softmax head
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HeadParams:
    weight: np.ndarray   # n_classes x dim
    bias: np.ndarray     # n_classes

    def __post_init__(self):
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise ValueError("non-finite head parameters")


def init_head(n_classes, dim):
    return HeadParams(np.zeros((n_classes, dim)), np.zeros(n_classes))


def head_cross_entropy(head, z, labels):
    """Mean softmax cross-entropy of the head on fixed embeddings."""
    logits = head.weight @ z + head.bias[:, None]
    shift = logits.max(axis=0)
    lse = shift + np.log(np.exp(logits - shift).sum(axis=0))
    picked = logits[labels, np.arange(z.shape[1])]
    return float((lse - picked).mean())


def head_predict(head, z):
    logits = head.weight @ z + head.bias[:, None]
    return logits.argmax(axis=0)


def head_accuracy(head, z, labels):
    return float((head_predict(head, z) == np.asarray(labels)).mean())


def train_head(head, z, labels, steps, lr):
    """Full-batch gradient descent on softmax cross-entropy.

    The embeddings are fixed (frozen backbone); only the head moves.
    """
    labels = np.asarray(labels, dtype=np.int64)
    m = z.shape[1]
    w = head.weight.copy()
    b = head.bias.copy()
    onehot = np.zeros((w.shape[0], m))
    onehot[labels, np.arange(m)] = 1.0
    for _ in range(steps):
        logits = w @ z + b[:, None]
        shift = logits.max(axis=0)
        p = np.exp(logits - shift)
        p /= p.sum(axis=0)
        dlogits = (p - onehot) / m
        w -= lr * (dlogits @ z.T)
        b -= lr * dlogits.sum(axis=1)
    return HeadParams(w, b)


# ---------------------------------------------------------------------------
# Nearest-subspace classification (diagnostic for orthogonal class geometry)
# ---------------------------------------------------------------------------

def nearest_subspace_classify(train, test_z):
    """Assign each test column to the class whose principal subspace
    captures the most of its energy.

    Per class the subspace keeps the eigenvectors of Z_k Z_k^T whose
    eigenvalues are >= 1e-6 of the leading one.
    """
    if not isinstance(train, RepresentationBatch):
        raise TypeError("train must be a RepresentationBatch")
    test_z = check_matrix(test_z, "test_z")
    bases = []
    for k in range(train.n_classes):
        cols = train.class_columns(k)
        if cols.size == 0:
            raise EmptyTrainingClass(f"class {k} has no training samples")
        zk = train.z[:, cols]
        w, v = sym_eig(zk @ zk.T)
        if w[0] <= 0.0:
            rank = 1
        else:
            rank = max(1, int((w >= 1e-6 * w[0]).sum()))
        bases.append(v[:, :rank])
    scores = np.empty((train.n_classes, test_z.shape[1]))
    for k, u in enumerate(bases):
        scores[k] = np.linalg.norm(u.T @ test_z, axis=0)
    return scores.argmax(axis=0)
