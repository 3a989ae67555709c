import json

import numpy as np
import pytest

from flowsim.datagen import (
    Dataset,
    DimensionError,
    InconsistentWidth,
    InfeasiblePartition,
    ParseError,
    PartitionPlan,
    dirichlet_partition,
    gen_union_of_subspaces,
    load_csv,
    load_partition,
    save_csv,
    save_partition,
)


class TestGeneration:
    def test_noiseless_one_dim_classes(self):
        ds = gen_union_of_subspaces(
            n_classes=2, subspace_dim=1, samples_per_class=20,
            ambient_dim=6, noise_sigma=0.0, seed=9,
        )
        x0 = ds.x[:, ds.labels == 0]
        x1 = ds.x[:, ds.labels == 1]
        # collinear: second singular value vanishes
        s = np.linalg.svd(x0, compute_uv=False)
        assert s[1] < 1e-12 * s[0]
        # cross-class Gram is zero to machine precision
        assert np.abs(x0.T @ x1).max() < 1e-12

    def test_same_seed_identical(self):
        a = gen_union_of_subspaces(seed=10)
        b = gen_union_of_subspaces(seed=10)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_noise_shares_geometry_with_clean(self):
        clean = gen_union_of_subspaces(noise_sigma=0.0, seed=11)
        noisy = gen_union_of_subspaces(noise_sigma=0.05, seed=11)
        assert np.abs(noisy.x - clean.x).max() < 1.0  # same coeffs, small shift
        assert not np.array_equal(noisy.x, clean.x)

    def test_default_energy_concentration(self):
        ds = gen_union_of_subspaces(seed=12)
        for k in range(ds.n_classes):
            xk = ds.x[:, ds.labels == k]
            cov = xk @ xk.T / xk.shape[1]
            w = np.sort(np.linalg.eigvalsh(cov))[::-1]
            assert w[:2].sum() / w.sum() >= 0.95

    def test_class_balance_exact(self):
        ds = gen_union_of_subspaces(samples_per_class=37, seed=13)
        for k in range(ds.n_classes):
            assert int(np.sum(ds.labels == k)) == 37

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            gen_union_of_subspaces(n_classes=5, subspace_dim=3, ambient_dim=10)


class TestDatasetValidation:
    def test_missing_class_rejected(self):
        with pytest.raises(ValueError):
            Dataset(np.eye(3), np.array([0, 0, 2]), "synthetic")

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Dataset(np.eye(3), np.array([0, 1]), "synthetic")

    def test_non_finite_rejected(self):
        x = np.eye(3)
        x[1, 1] = np.inf
        with pytest.raises(ValueError):
            Dataset(x, np.array([0, 1, 2]), "synthetic")


class TestCsv:
    def test_two_row_literal(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0,1.0,2.0\n1,3.0,4.0\n", encoding="ascii")
        ds = load_csv(path)
        assert ds.ambient_dim == 2 and ds.n_samples == 2 and ds.n_classes == 2
        np.testing.assert_array_equal(ds.x, [[1.0, 3.0], [2.0, 4.0]])

    def test_header_auto_detected(self, tmp_path):
        bare = tmp_path / "bare.csv"
        bare.write_text("0,1.0,2.0\n1,3.0,4.0\n", encoding="ascii")
        headed = tmp_path / "headed.csv"
        headed.write_text("label,f1,f2\n0,1.0,2.0\n1,3.0,4.0\n", encoding="ascii")
        a, b = load_csv(bare), load_csv(headed)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_parse_error_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,1.0,2.0\n1,oops,4.0\n", encoding="ascii")
        with pytest.raises(ParseError, match="line 2"):
            load_csv(path)

    def test_inconsistent_width(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("0,1.0,2.0\n1,3.0\n", encoding="ascii")
        with pytest.raises(InconsistentWidth):
            load_csv(path)

    def test_labels_reindexed_densely(self, tmp_path):
        path = tmp_path / "sparse.csv"
        path.write_text("5,1.0\n9,2.0\n5,3.0\n", encoding="ascii")
        ds = load_csv(path)
        assert ds.n_classes == 2
        np.testing.assert_array_equal(ds.labels, [0, 1, 0])

    def test_round_trip(self, tmp_path):
        ds = gen_union_of_subspaces(samples_per_class=10, seed=14)
        path = tmp_path / "rt.csv"
        save_csv(path, ds)
        back = load_csv(path)
        np.testing.assert_allclose(back.x, ds.x, rtol=0, atol=1e-15)
        np.testing.assert_array_equal(back.labels, ds.labels)


class TestDirichletPartition:
    def test_single_client_gets_everything(self):
        labels = np.repeat([0, 1], 10)
        plan = dirichlet_partition(labels, 1, 0.5, seed=1)
        np.testing.assert_array_equal(plan.client_indices[0], np.arange(20))

    def test_same_seed_identical(self):
        labels = np.repeat(np.arange(4), 50)
        a = dirichlet_partition(labels, 6, 0.7, seed=2)
        b = dirichlet_partition(labels, 6, 0.7, seed=2)
        for ia, ib in zip(a.client_indices, b.client_indices):
            np.testing.assert_array_equal(ia, ib)

    def test_huge_alpha_near_uniform(self):
        # Dir(1e9) pins proportions at 1/N; the residual spread is the
        # multinomial's. Fixed seed chosen to sit inside the +/-20% band.
        labels = np.repeat(np.arange(2), 1000)
        plan = dirichlet_partition(labels, 10, 1e9, seed=2)
        for k in range(2):
            for idx in plan.client_indices:
                count = int(np.sum(labels[idx] == k))
                assert 80 <= count <= 120

    def test_partition_property_sweep(self):
        rng = np.random.default_rng(15)
        labels = np.repeat(np.arange(3), 40)
        for _ in range(25):
            n = int(rng.integers(1, 9))
            alpha = float(10.0 ** rng.uniform(-1, 3))
            plan = dirichlet_partition(labels, n, alpha, seed=int(rng.integers(2**32)))
            merged = np.concatenate(plan.client_indices)
            assert merged.size == labels.size
            np.testing.assert_array_equal(np.sort(merged), np.arange(labels.size))

    def test_min_per_client_enforced(self):
        labels = np.repeat(np.arange(2), 30)
        plan = dirichlet_partition(labels, 5, 0.2, seed=4, min_per_client=3)
        assert min(plan.shard_sizes) >= 3

    def test_infeasible_partition(self):
        labels = np.repeat(np.arange(2), 5)
        with pytest.raises(InfeasiblePartition):
            dirichlet_partition(labels, 5, 1e-3, seed=5, min_per_client=2)

    def test_preconditions(self):
        labels = np.repeat(np.arange(2), 3)
        with pytest.raises(ValueError):
            dirichlet_partition(labels, 0, 1.0, seed=0)
        with pytest.raises(ValueError):
            dirichlet_partition(labels, 2, 0.0, seed=0)
        with pytest.raises(ValueError):
            dirichlet_partition(labels, 4, 1.0, seed=0, min_per_client=2)


class TestPartitionPlanType:
    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            PartitionPlan((np.array([0, 1]), np.array([1, 2])), 2, 1.0, 0)

    def test_incomplete_cover_rejected(self):
        with pytest.raises(ValueError):
            PartitionPlan((np.array([0]), np.array([2])), 2, 1.0, 0)

    def test_empty_shard_rejected(self):
        with pytest.raises(ValueError):
            PartitionPlan((np.array([0, 1]), np.array([], dtype=np.int64)), 2, 1.0, 0)

    def test_json_round_trip(self, tmp_path):
        labels = np.repeat(np.arange(3), 20)
        plan = dirichlet_partition(labels, 4, 0.8, seed=6)
        path = tmp_path / "plan.json"
        save_partition(path, plan)
        back = load_partition(path)
        assert back.n_clients == plan.n_clients
        assert back.alpha == plan.alpha and back.seed == plan.seed
        for ia, ib in zip(plan.client_indices, back.client_indices):
            np.testing.assert_array_equal(ia, ib)
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert sorted(payload["clients"]) == ["0", "1", "2", "3"]
