"""Finite-difference verification of the end-to-end parameter gradient.

Central differences on the scalar objective are the independent oracle for
the analytic backward pass.  Errors are reported as a whole-vector relative
norm, ||g_a - g_fd|| / max(||g_a|| + ||g_fd||, 1e-12), which stays
meaningful when individual coordinates are tiny.

The environment variable FLOWSIM_GRADCHECK_PERTURB (a float) injects a
relative error into one analytic gradient coordinate.  It exists only so
the failure path of the checker itself can be exercised; leave it unset.
"""

import os

import numpy as np

from .backbone import flatten_params, forward, init_backbone, unflatten_params
from .federation import full_gradient
from .linalg import derive_seed, make_rng
from .mcr2 import CodingRateParams, RepresentationBatch, mcr2_objective

PASS_THRESHOLD = 1e-5
FD_STEP = 1e-5


def objective_scalar(params, x, labels, n_classes, epsilon):
    z, _ = forward(params, x)
    batch = RepresentationBatch(z, labels, n_classes)
    return mcr2_objective(batch, CodingRateParams(epsilon)).objective


def fd_gradient(params, x, labels, n_classes, epsilon, step=FD_STEP):
    """Central-difference gradient over every parameter coordinate."""
    vec = flatten_params(params)
    manifest = params.manifest()
    grad = np.empty_like(vec)
    for i in range(vec.size):
        bumped = vec.copy()
        bumped[i] = vec[i] + step
        up = objective_scalar(
            unflatten_params(bumped, manifest), x, labels, n_classes, epsilon
        )
        bumped[i] = vec[i] - step
        down = objective_scalar(
            unflatten_params(bumped, manifest), x, labels, n_classes, epsilon
        )
        grad[i] = (up - down) / (2.0 * step)
    return grad


def gradient_error(analytic, numeric):
    denom = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / denom)


def sample_case(rng):
    """Random small architecture and batch with well-conditioned embeddings."""
    ambient = int(rng.integers(2, 8))
    hidden_choices = ((), (5,), (6, 4))
    hidden = hidden_choices[int(rng.integers(len(hidden_choices)))]
    embed = int(rng.integers(2, 13))
    m = int(rng.integers(2, 13))
    k = int(rng.integers(2, 5))
    epsilon = float(rng.uniform(0.3, 1.5))
    params = init_backbone([ambient, *hidden, embed], rng)
    labels = rng.integers(0, k, size=m)
    # Keep pre-projection norms away from the degenerate-column regime so the
    # finite-difference step stays inside the smooth region.
    for _ in range(50):
        x = rng.normal(size=(ambient, m))
        _, tape = forward(params, x)
        if tape.norms.min() > 1e-3:
            break
    return {
        "params": params,
        "x": x,
        "labels": labels,
        "n_classes": k,
        "epsilon": epsilon,
        "shape": f"D={ambient} hidden={hidden} d={embed} M={m} K={k}",
    }


def _perturb_factor():
    raw = os.environ.get("FLOWSIM_GRADCHECK_PERTURB", "")
    if not raw:
        return 0.0
    try:
        return float(raw)
    except ValueError:
        return 0.0


def run_gradcheck(seed=0, n_cases=8, step=FD_STEP):
    """Returns (max relative error, list of (case description, error))."""
    factor = _perturb_factor()
    results = []
    for i in range(n_cases):
        rng = make_rng(derive_seed(seed, f"gradcheck-{i}"))
        case = sample_case(rng)
        analytic = full_gradient(
            case["params"], case["x"], case["labels"],
            case["n_classes"], case["epsilon"],
        )
        if factor != 0.0:
            analytic = analytic.copy()
            analytic[0] += factor * (abs(analytic[0]) + 1.0)
        numeric = fd_gradient(
            case["params"], case["x"], case["labels"],
            case["n_classes"], case["epsilon"], step=step,
        )
        results.append((case["shape"], gradient_error(analytic, numeric)))
    max_err = max(err for _, err in results)
    return max_err, results
