"""Conformal p-values, step-up adjustment, thresholds, and set prediction."""

import numpy as np
import pytest

from confset import (
    DataError,
    LabeledDataset,
    PredictionSets,
    TestBatch,
    acceptance_threshold,
    bh_adjust,
    conformal_pvalue,
    conformal_pvalues,
    oracle_params,
    multi_class_config,
    generate,
    predict,
    set_size_discrepancy,
)
from conftest import (
    naive_bh,
    naive_conformal_pvalue,
    naive_predict,
    naive_threshold,
    random_instance,
    sets_equal,
)


class TestConformalPValues:
    def test_hand_values(self):
        train = np.array([1.0, 3.0, 5.0])
        # (1 + #{train >= s}) / 4
        assert conformal_pvalue(train, 2.0) == pytest.approx(3 / 4)
        assert conformal_pvalue(train, 0.0) == pytest.approx(1.0)
        assert conformal_pvalue(train, 6.0) == pytest.approx(1 / 4)

    def test_tie_counts_as_at_least(self):
        train = np.array([1.0, 3.0, 5.0])
        assert conformal_pvalue(train, 5.0) == pytest.approx(2 / 4)
        assert conformal_pvalue(train, 1.0) == pytest.approx(1.0)

    def test_grid_property(self, rng):
        """Every p-value is r/(n+1) for an integer r in [1, n+1]."""
        train = rng.normal(size=57)
        test = rng.normal(size=200)
        p = conformal_pvalues(train, test)
        r = p * 58
        np.testing.assert_allclose(r, np.round(r), atol=1e-9)
        assert np.all(p >= 1 / 58 - 1e-12) and np.all(p <= 1.0 + 1e-12)

    def test_matches_naive_with_ties(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 30))
            train = rng.integers(0, 6, size=n).astype(float)  # force ties
            test = rng.integers(0, 6, size=7).astype(float)
            got = conformal_pvalues(train, test)
            expected = [naive_conformal_pvalue(train, s) for s in test]
            np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_monotone_in_score(self, rng):
        train = rng.normal(size=40)
        test = np.sort(rng.normal(size=25))
        p = conformal_pvalues(train, test)
        assert np.all(np.diff(p) <= 1e-15)

    def test_rejects_empty_train(self):
        with pytest.raises(DataError):
            conformal_pvalues(np.array([]), np.array([1.0]))

    def test_rejects_nonfinite(self):
        with pytest.raises(DataError):
            conformal_pvalues(np.array([1.0, np.nan]), np.array([1.0]))


class TestBHAdjust:
    def test_hand_example(self):
        got = bh_adjust(np.array([0.01, 0.04, 0.03, 0.20]))
        np.testing.assert_allclose(got, [0.04, 4 * 0.04 / 3, 4 * 0.04 / 3, 0.20],
                                   rtol=1e-12)

    def test_all_ones(self):
        np.testing.assert_array_equal(bh_adjust(np.ones(5)), np.ones(5))

    def test_single_entry_identity(self):
        assert bh_adjust(np.array([0.3]))[0] == pytest.approx(0.3)

    def test_output_at_least_input(self, rng):
        for _ in range(50):
            p = rng.uniform(1e-9, 1.0, size=int(rng.integers(1, 40)))
            assert np.all(bh_adjust(p) >= p - 1e-15)

    def test_capped_at_one(self, rng):
        p = rng.uniform(0.5, 1.0, size=30)
        assert np.all(bh_adjust(p) <= 1.0)

    def test_permutation_equivariance(self, rng):
        p = rng.uniform(1e-6, 1.0, size=25)
        perm = rng.permutation(25)
        np.testing.assert_allclose(bh_adjust(p)[perm], bh_adjust(p[perm]), rtol=1e-12)

    def test_matches_naive_including_ties(self, rng):
        for _ in range(200):
            m = int(rng.integers(1, 25))
            # mass on few distinct values to force ties
            p = rng.choice([0.01, 0.05, 0.2, 0.5, 1.0], size=m)
            np.testing.assert_allclose(bh_adjust(p), naive_bh(list(p)), rtol=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(DataError):
            bh_adjust(np.array([0.0, 0.5]))
        with pytest.raises(DataError):
            bh_adjust(np.array([0.5, 1.1]))


class TestAcceptanceThreshold:
    def test_hand_values(self):
        assert acceptance_threshold(99, 0.05) == pytest.approx(0.05)
        assert acceptance_threshold(10, 0.05) == 0.0
        assert acceptance_threshold(9, 1 / 10.4) == 0.0  # alpha just below 1/(n+1)

    def test_float_product_near_integer(self):
        # (9+1)*0.3 = 2.9999999999999996 in floats; the floor must still be 3
        assert acceptance_threshold(9, 0.3) == pytest.approx(0.3)
        assert acceptance_threshold(19, 0.35) == pytest.approx(7 / 20)

    def test_monotone_in_alpha(self):
        grid = np.linspace(0.01, 0.99, 197)
        values = [acceptance_threshold(33, a) for a in grid]
        assert all(x <= y + 1e-15 for x, y in zip(values, values[1:]))

    def test_matches_naive(self, rng):
        for _ in range(300):
            n_k = int(rng.integers(1, 400))
            alpha = float(rng.uniform(0.005, 0.995))
            assert acceptance_threshold(n_k, alpha) == pytest.approx(
                naive_threshold(n_k, alpha), abs=1e-12
            )

    def test_rejects_bad_inputs(self):
        with pytest.raises(DataError):
            acceptance_threshold(0, 0.05)
        with pytest.raises(DataError):
            acceptance_threshold(10, 0.0)
        with pytest.raises(DataError):
            acceptance_threshold(10, 1.0)


class TestPredict:
    def test_point_at_class_mean_gets_singleton(self, two_class_data):
        center = two_class_data.class_rows(1).mean(axis=0)
        batch = TestBatch(features=center[None, :])
        pvals, sets = predict(two_class_data, batch, alpha=0.05)
        assert sets_equal(sets, [{1}])
        # m=1 skips the multiplicity adjustment entirely
        np.testing.assert_array_equal(pvals.raw, pvals.adjusted)

    def test_far_point_gets_empty_set(self, two_class_data):
        batch = TestBatch(features=np.array([[1000.0, -1000.0]]))
        _, sets = predict(two_class_data, batch, alpha=0.05)
        assert sets_equal(sets, [set()])

    def test_tiny_alpha_accepts_everything(self, two_class_data):
        # threshold is 0 whenever alpha < 1/(n_k+1); strict > then always holds
        batch = TestBatch(features=np.array([[1000.0, -1000.0], [0.0, 0.0]]))
        pvals, sets = predict(two_class_data, batch, alpha=0.001)
        assert np.all(pvals.thresholds == 0.0)
        assert sets_equal(sets, [{1, 2}, {1, 2}])

    def test_threshold_values_per_class(self, two_class_data):
        pvals, _ = predict(
            two_class_data, TestBatch(features=np.zeros((1, 2))), alpha=0.1
        )
        # n_k = 50: floor(51 * 0.1)/51 = 5/51
        np.testing.assert_allclose(pvals.thresholds, [5 / 51, 5 / 51])

    def test_matches_naive_pipeline_empirical(self, rng):
        for _ in range(25):
            data, batch = random_instance(rng)
            alpha = float(rng.uniform(0.02, 0.4))
            _, sets = predict(data, batch, alpha)
            assert sets_equal(sets, naive_predict(data, batch, alpha))

    def test_matches_naive_pipeline_oracle(self, rng):
        config = multi_class_config(p=4, n_k=10, m=12, rho=0.4, run_seed=3)
        data, batch = generate(config)
        oracle = oracle_params(config)
        _, sets = predict(data, batch, 0.2, oracle=oracle)
        assert sets_equal(sets, naive_predict(data, batch, 0.2, oracle=oracle))

    def test_monotone_sets_in_alpha(self, rng):
        data, batch = random_instance(rng, n_classes=3, n_k=30, m=40)
        alphas = [0.01, 0.05, 0.1, 0.2, 0.4]
        members = [predict(data, batch, a)[1].member for a in alphas]
        for low, high in zip(members, members[1:]):
            # larger alpha -> smaller sets, pointwise
            assert np.all(high <= low)

    def test_deterministic(self, rng):
        data, batch = random_instance(rng)
        p1, s1 = predict(data, batch, 0.1)
        p2, s2 = predict(data, batch, 0.1)
        np.testing.assert_array_equal(p1.raw, p2.raw)
        np.testing.assert_array_equal(p1.adjusted, p2.adjusted)
        np.testing.assert_array_equal(s1.member, s2.member)

    def test_oracle_mode_matches_empirical_shape(self, two_class_data):
        oracle_like = oracle_params(
            multi_class_config(p=2, n_k=4, run_seed=0)
        )
        # 4 classes vs 2 in the data: must refuse
        with pytest.raises(DataError, match="classes"):
            predict(
                two_class_data, TestBatch(features=np.zeros((1, 2))), 0.05,
                oracle=oracle_like,
            )

    def test_rejects_feature_mismatch(self, two_class_data):
        with pytest.raises(DataError, match="features"):
            predict(two_class_data, TestBatch(features=np.zeros((1, 3))), 0.05)

    def test_variance_floor_path(self):
        features = np.array([[0.0, 5.0], [1.0, 5.0], [2.0, 5.0]])
        data = LabeledDataset(
            features=features, labels=np.array([1, 1, 1]), n_classes=1
        )
        batch = TestBatch(features=np.array([[1.0, 5.0]]))
        pvals, _ = predict(data, batch, 0.05, variance_floor=0.5)
        assert pvals.raw.shape == (1, 1)

    def test_grid_property_through_predict(self, rng):
        data, batch = random_instance(rng, n_classes=2, n_k=19, m=15)
        pvals, _ = predict(data, batch, 0.1)
        r = pvals.raw * 20
        np.testing.assert_allclose(r, np.round(r), atol=1e-9)


class TestSetSizeDiscrepancy:
    def test_hand_values(self):
        a = PredictionSets.from_sets([{1}, {1, 2}], n_classes=2)
        b = PredictionSets.from_sets([{1}, {1}], n_classes=2)
        assert set_size_discrepancy(a, b) == pytest.approx(0.5)
        assert set_size_discrepancy(a, a) == 0.0

    def test_empty_vs_full(self):
        a = PredictionSets.from_sets([set()], n_classes=4)
        b = PredictionSets.from_sets([{1, 2, 3, 4}], n_classes=4)
        assert set_size_discrepancy(a, b) == pytest.approx(4.0)

    def test_symmetry(self, rng):
        mk = lambda: PredictionSets(member=rng.random((10, 3)) < 0.5)
        a, b = mk(), mk()
        assert set_size_discrepancy(a, b) == set_size_discrepancy(b, a)

    def test_rejects_mismatch(self):
        a = PredictionSets.from_sets([{1}], n_classes=2)
        b = PredictionSets.from_sets([{1}, {2}], n_classes=2)
        with pytest.raises(DataError):
            set_size_discrepancy(a, b)
