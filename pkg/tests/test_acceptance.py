"""Acceptance gate: every release-blocking property in one place.

Each test prints exactly one "[criterion N] PASS/FAIL: ..." line with the
measured numbers, then asserts.  Criteria are property thresholds, not
golden values; the committed record in baselines/desk_scale_baseline.json
documents the reference run that validated the thresholds and is itself
checked for consistency here.

The desk-scale training runs (criteria 4 and 6) share module-scoped
fixtures, so the whole file costs roughly one N=8 run plus one N=16 run.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from flowsim.backbone import flatten_params, forward
from flowsim.datagen import dirichlet_partition, gen_union_of_subspaces
from flowsim.diagnostics import class_spectra, cosine_matrix, orthogonality_score
from flowsim.federation import FederationConfig, run
from flowsim.gradcheck import PASS_THRESHOLD, run_gradcheck
from flowsim.linalg import derive_seed, make_rng
from flowsim.mcr2 import (
    CodingRateParams,
    RepresentationBatch,
    check_subspace_conditions,
    coding_rate,
    mcr2_gradient,
    mcr2_objective,
)

DATASET_SEED = 2026
ROOT_SEED = 7
BASELINE_PATH = Path(__file__).resolve().parents[1] / "baselines" / "desk_scale_baseline.json"


def report(n, ok, detail):
    print(f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    assert ok, f"criterion {n}: {detail}"


def desk_config(n_clients, mode="federated", rounds=2000):
    return FederationConfig(
        n_clients=n_clients, tau=5, eta=0.05, rounds=rounds, batch_size=64,
        seed=ROOT_SEED, epsilon=0.5, mode=mode, hidden=(64, 32), embed_dim=10,
    )


@pytest.fixture(scope="module")
def dataset():
    return gen_union_of_subspaces(
        n_classes=4, subspace_dim=2, samples_per_class=200,
        ambient_dim=20, noise_sigma=0.05, seed=DATASET_SEED,
    )


def timed_run(config, ds, plan):
    start = time.perf_counter()
    params, logs = run(config, ds, plan)
    return params, logs, time.perf_counter() - start


@pytest.fixture(scope="module")
def run_n8(dataset):
    plan = dirichlet_partition(
        dataset.labels, 8, 5.0, derive_seed(ROOT_SEED, "partition")
    )
    return timed_run(desk_config(8), dataset, plan)


@pytest.fixture(scope="module")
def run_n16(dataset):
    plan = dirichlet_partition(
        dataset.labels, 16, 5.0, derive_seed(ROOT_SEED, "partition")
    )
    return timed_run(desk_config(16), dataset, plan)


def test_criterion_1_gradients_match_finite_differences():
    start = time.perf_counter()
    max_err, results = run_gradcheck(seed=11, n_cases=50)
    elapsed = time.perf_counter() - start
    ok = max_err < PASS_THRESHOLD and elapsed < 30.0
    report(
        1, ok,
        f"max relative error {max_err:.3e} over {len(results)} configs "
        f"(threshold {PASS_THRESHOLD:g}), {elapsed:.1f}s (budget 30s)",
    )


def test_criterion_2_trivial_identities():
    params = CodingRateParams(epsilon=1.0)
    zero = RepresentationBatch(np.zeros((3, 5)), np.zeros(5, dtype=int), 1)
    r_zero = coding_rate(zero, CodingRateParams(0.7))

    rng = make_rng(derive_seed(2, "trivial"))
    one_class = RepresentationBatch(
        rng.normal(size=(4, 9)), np.zeros(9, dtype=int), 1
    )
    value = mcr2_objective(one_class, CodingRateParams(0.5))
    grad = mcr2_gradient(one_class, CodingRateParams(0.5))

    eye = RepresentationBatch(np.eye(2), np.array([0, 1]), 2)
    r_eye = coding_rate(eye, params)

    worst = max(
        abs(r_zero),
        abs(value.per_class_rate - value.rate),
        abs(value.objective),
        float(np.abs(grad).max()),
        abs(r_eye - math.log(2.0)),
    )
    ok = worst <= 1e-12
    report(2, ok, f"largest identity residual {worst:.3e} (tolerance 1e-12)")


def test_criterion_3_single_client_matches_centralized(dataset):
    fed_cfg = desk_config(1, rounds=100)
    cen_cfg = desk_config(1, mode="centralized", rounds=100)
    fed_cfg.tau = 1
    plan = dirichlet_partition(
        dataset.labels, 1, 5.0, derive_seed(ROOT_SEED, "partition")
    )
    fed_params, fed_logs = run(fed_cfg, dataset, plan)
    cen_params, cen_logs = run(cen_cfg, dataset)

    params_same = (
        flatten_params(fed_params).tobytes() == flatten_params(cen_params).tobytes()
    )
    logs_same = len(fed_logs) == len(cen_logs) == 100 and all(
        a.round == b.round
        and a.objective == b.objective
        and a.rate == b.rate
        and a.per_class_rate == b.per_class_rate
        and a.grad_norm_sq == b.grad_norm_sq
        and a.sigma2_hat == b.sigma2_hat
        and a.delta_hat == b.delta_hat
        and a.local_objectives == b.local_objectives
        for a, b in zip(fed_logs, cen_logs)
    )
    ok = params_same and logs_same
    report(
        3, ok,
        f"params bit-identical={params_same}, all 100 round logs "
        f"(minus wall time) identical={logs_same}",
    )


def test_criterion_4_desk_scale_geometry(dataset, run_n8):
    cond_ok, cond = check_subspace_conditions(10, [2] * 4, [200] * 4, 0.5)
    params, _, elapsed = run_n8
    z, _ = forward(params, dataset.x)
    sim = cosine_matrix(z, dataset.labels)
    inter, _ = orthogonality_score(sim)
    spectra = class_spectra(z, dataset.labels)
    rank_floor = [0.8 * min(c.size, spectra.embed_dim) for c in spectra.classes]
    ranks_ok = all(
        c.effective_rank >= floor
        for c, floor in zip(spectra.classes, rank_floor)
    )

    baseline = json.loads(BASELINE_PATH.read_text(encoding="ascii"))
    ref = baseline["results"]
    thresholds = baseline["thresholds_validated"]
    baseline_ok = (
        thresholds["inter_class_mean_abs_cos_max"] == 0.1
        and thresholds["effective_rank_fraction_min"] == 0.8
        and ref["inter_class_mean_abs_cos"] < 0.1
        and all(
            r >= 0.8 * min(200, t)
            for r, t in zip(ref["effective_ranks"], ref["rank_targets"])
        )
    )

    ok = (
        cond_ok
        and inter < 0.1
        and ranks_ok
        and elapsed < 300.0
        and baseline_ok
    )
    report(
        4, ok,
        f"precision check ok={cond_ok}, inter-class |cos| {inter:.4f} (< 0.1), "
        f"effective ranks {[c.effective_rank for c in spectra.classes]} "
        f"(floors {rank_floor}), run {elapsed:.1f}s (budget 300s), "
        f"committed baseline consistent={baseline_ok}",
    )


def test_criterion_5_scaling_never_raises_objective():
    rng = make_rng(derive_seed(55, "scale-sweep"))
    worst = -np.inf
    for _ in range(100):
        d = int(rng.integers(2, 13))
        m = int(rng.integers(2, 25))
        k = int(rng.integers(1, 5))
        z = rng.normal(size=(d, m)) * float(rng.uniform(0.2, 3.0))
        labels = rng.integers(0, k, size=m)
        prm = CodingRateParams(float(rng.uniform(0.3, 1.5)))
        base = mcr2_objective(RepresentationBatch(z, labels, k), prm).objective
        for c in (2.0, 5.0):
            scaled = mcr2_objective(
                RepresentationBatch(c * z, labels, k), prm
            ).objective
            worst = max(worst, scaled - base)
    ok = worst <= 1e-10
    report(
        5, ok,
        f"max f(cZ)-f(Z) over 100 batches x c in {{2,5}}: {worst:.3e} "
        f"(tolerance 1e-10)",
    )


def test_criterion_6_convergence_trend(run_n8, run_n16):
    _, logs8, _ = run_n8
    _, logs16, _ = run_n16

    grad = np.array([lg.grad_norm_sq for lg in logs8])
    running = np.cumsum(grad) / np.arange(1, grad.size + 1)
    half = running[grad.size // 2 :]
    max_ratio = float(np.max(half[1:] / half[:-1]))

    drop = logs8[0].objective - logs8[-1].objective
    gap = logs16[-1].objective - logs8[-1].objective

    ok = max_ratio <= 1.1 and drop >= 0.1 and gap >= -0.05
    report(
        6, ok,
        f"running-mean grad ratio over last half {max_ratio:.6f} (<= 1.1), "
        f"objective drop {drop:.3f} (>= 0.1), "
        f"N=16 minus N=8 final objective {gap:+.4f} (>= -0.05)",
    )


def test_criterion_7_partitions_exact_and_uniform_at_high_alpha():
    meta = make_rng(derive_seed(77, "partition-sweep"))
    checked = 0
    for _ in range(200):
        n_clients = int(meta.integers(1, 33))
        alpha = float(np.exp(meta.uniform(np.log(0.1), np.log(1e9))))
        seed = int(meta.integers(0, 2**62))
        k = int(meta.integers(2, 6))
        labels = np.repeat(np.arange(k), 30 * n_clients)
        plan = dirichlet_partition(labels, n_clients, alpha, seed, min_per_client=1)
        merged = np.concatenate(plan.client_indices)
        assert np.array_equal(np.sort(merged), np.arange(labels.size))
        checked += 1

    # Near-infinite concentration must give near-uniform per-class counts.
    worst_dev = 0.0
    for n_clients in (4, 10):
        labels = np.repeat(np.arange(4), 10000)
        plan = dirichlet_partition(
            labels, n_clients, 1e9, derive_seed(77, f"uniform-{n_clients}")
        )
        for k in range(4):
            counts = np.array(
                [np.sum(labels[idx] == k) for idx in plan.client_indices]
            )
            expected = 10000 / n_clients
            worst_dev = max(worst_dev, float(np.abs(counts - expected).max() / expected))
    ok = checked == 200 and worst_dev <= 0.2
    report(
        7, ok,
        f"{checked}/200 random partitions exact; worst per-class per-client "
        f"deviation at alpha=1e9: {worst_dev:.3f} (<= 0.2)",
    )


def test_criterion_8_dual_form_and_rotation_invariance():
    rng = make_rng(derive_seed(88, "invariance-sweep"))
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 17))
        m = int(rng.integers(2, 25))
        z = rng.normal(size=(d, m)) * float(rng.uniform(0.3, 2.0))
        prm = CodingRateParams(float(rng.uniform(0.3, 2.0)))
        labels = np.zeros(m, dtype=int)
        batch = RepresentationBatch(z, labels, 1)
        r_square = coding_rate(batch, prm, form="square")
        r_gram = coding_rate(batch, prm, form="gram")
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        r_rotated = coding_rate(RepresentationBatch(q @ z, labels, 1), prm)
        worst = max(worst, abs(r_square - r_gram), abs(r_rotated - r_square))
    ok = worst <= 1e-8
    report(
        8, ok,
        f"max dual-form / rotation discrepancy over 100 cases: {worst:.3e} "
        f"(tolerance 1e-8)",
    )
