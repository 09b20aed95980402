import json

import numpy as np
import pytest
import scipy.io
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binom

from specluster import (
    BinaryDataset,
    BsbmParams,
    InvalidInputError,
    MixtureModel,
    bsbm_sigma_sq,
    bsbm_to_mixture,
    delta_v,
    expected_from_truth,
    expected_matrix,
    indicator_model,
    load_dataset,
    min_symmetric_difference,
    sample,
    save_dataset,
    separation,
)


class TestMixtureModel:
    def test_valid(self):
        model = MixtureModel(np.array([[0.2, 0.4], [0.4, 0.1]]), np.array([0.5, 0.5]))
        assert model.k == 2 and model.n == 2
        assert model.sigma_sq == 0.4  # defaults to the largest mean entry
        assert model.w_min == 0.5

    def test_rejects_bad_means(self):
        with pytest.raises(InvalidInputError):
            MixtureModel(np.array([[1.2, 0.0]]), np.array([1.0]))
        with pytest.raises(InvalidInputError):
            MixtureModel(np.array([[0.5, 0.5]]), np.array([0.7]))  # weights != 1
        with pytest.raises(InvalidInputError):
            MixtureModel(np.array([[0.5]]), np.array([1.0]), sigma_sq=0.3)

    def test_separation_examples(self):
        model = MixtureModel(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0.5, 0.5]))
        assert separation(model) == pytest.approx(np.sqrt(2.0))
        same = MixtureModel(np.array([[0.3, 0.3], [0.3, 0.3]]), np.array([0.5, 0.5]))
        assert separation(same) == 0.0
        single = MixtureModel(np.array([[0.5]]), np.array([1.0]))
        with pytest.raises(InvalidInputError):
            separation(single)


class TestBsbm:
    def test_validation(self):
        with pytest.raises(InvalidInputError):
            BsbmParams.balanced(10, 8, 2, 0.7, 0.1)  # p > 0.5
        with pytest.raises(InvalidInputError):
            BsbmParams.balanced(10, 8, 2, 0.3, 0.3)  # p == q
        with pytest.raises(InvalidInputError):
            BsbmParams(10, 4, 2, 0.4, 0.1, (5, 5), np.zeros(4, dtype=int))  # empty V_2

    def test_means_substitution(self):
        params = BsbmParams(4, 4, 2, 0.5, 0.0, (2, 2), np.array([0, 0, 1, 1]))
        model = bsbm_to_mixture(params)
        assert np.array_equal(model.means, [[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.5]])
        assert np.allclose(model.weights, [0.5, 0.5])

    def test_sigma_formula(self):
        assert bsbm_sigma_sq(0.45, 0.05) == pytest.approx(2 * 0.45 * 0.55)
        params = BsbmParams.balanced(10, 8, 2, 0.45, 0.05)
        model = bsbm_to_mixture(params)
        assert model.sigma_sq == pytest.approx(0.495)
        assert model.means.max() <= model.sigma_sq  # variance proxy dominates means

    @given(st.floats(0.0, 0.5), st.floats(0.0, 0.5))
    def test_sigma_range_and_variance_dominance(self, p, q):
        if p == q:
            return
        sigma_sq = bsbm_sigma_sq(p, q)
        assert 0.0 < sigma_sq <= 0.5
        assert sigma_sq >= p * (1 - p) and sigma_sq >= q * (1 - q)

    def test_separation_identity_paper_case(self):
        # Delta_mu^2 = (p - q)^2 * Delta_V; with p=0.4, q=0.1, Delta_V=10 this is 0.9.
        params = BsbmParams(20, 10, 2, 0.4, 0.1, (10, 10), np.repeat([0, 1], 5))
        assert delta_v(params) == 10
        model = bsbm_to_mixture(params)
        assert separation(model) ** 2 == pytest.approx(0.9, rel=1e-12)
        assert separation(model) == pytest.approx(0.3 * np.sqrt(10.0), rel=1e-12)

    @given(
        st.integers(2, 4),
        st.integers(0, 10_000),
    )
    def test_separation_identity_random(self, k, seed):
        rs = np.random.RandomState(seed)
        n = int(rs.randint(k, 4 * k))
        p, q = 0.5 * rs.rand() or 0.25, 0.5 * rs.rand()
        if p == q:
            q = p / 2 if p > 0 else 0.25
        assignment = rs.randint(0, k, size=n)
        assignment[:k] = np.arange(k)  # keep every right cluster nonempty
        m = 2 * k
        params = BsbmParams(m, n, k, p, q, (2,) * k, assignment)
        model = bsbm_to_mixture(params)
        assert separation(model) ** 2 == pytest.approx(
            (p - q) ** 2 * delta_v(params), rel=1e-9
        )

    def test_symmetric_difference(self):
        assert min_symmetric_difference([{1, 2}, {3, 4}]) == 4
        assert min_symmetric_difference([{1, 2}, {1, 2}]) == 0
        assert min_symmetric_difference([{1, 2, 3}, {3, 4}]) == 3
        assert min_symmetric_difference([{1, 2}, {2, 3}, {1, 2, 3, 4}]) == 2


class TestSampling:
    def test_degenerate_means(self):
        ones = MixtureModel(np.ones((1, 4)), np.array([1.0]), sigma_sq=1.0)
        assert np.all(sample(ones, 3, 0).matrix == 1.0)
        zeros = MixtureModel(np.zeros((1, 4)), np.array([1.0]), sigma_sq=1.0)
        assert np.all(sample(zeros, 3, 0).matrix == 0.0)

    def test_exact_counts_and_binary_entries(self):
        params = BsbmParams(12, 9, 3, 0.45, 0.05, (6, 4, 2), np.repeat([0, 1, 2], 3))
        model = bsbm_to_mixture(params)
        ds = sample(model, 12, 4)
        assert np.all((ds.matrix == 0) | (ds.matrix == 1))
        assert np.array_equal(np.bincount(ds.truth), [6, 4, 2])

    def test_non_integral_counts_rejected(self):
        model = MixtureModel(
            np.array([[0.2], [0.8]]), np.array([1 / 3, 2 / 3]), sigma_sq=1.0
        )
        with pytest.raises(InvalidInputError):
            sample(model, 10, 0)

    def test_determinism(self):
        model = bsbm_to_mixture(BsbmParams.balanced(20, 15, 2, 0.4, 0.1))
        a, b = sample(model, 20, 9), sample(model, 20, 9)
        assert np.array_equal(a.matrix, b.matrix)
        assert np.array_equal(a.truth, b.truth)
        c = sample(model, 20, 10)
        assert not np.array_equal(a.matrix, c.matrix)

    def test_column_mean_within_binomial_band(self):
        # One Bernoulli(0.5) column, m = 10_000: the mean falls within 3
        # standard errors with exactly the two-sided binomial probability.
        model = MixtureModel(np.full((1, 1), 0.5), np.array([1.0]))
        m, half_width = 10_000, 3 * np.sqrt(0.25 / 10_000)
        lo, hi = 5_000 - 150, 5_000 + 150
        expected_rate = binom.cdf(hi, m, 0.5) - binom.cdf(lo - 1, m, 0.5)
        assert expected_rate > 0.99
        seeds = range(300)
        hits = sum(
            1
            for s in seeds
            if abs(float(sample(model, m, s).matrix.mean()) - 0.5) <= half_width
        )
        assert hits >= 0.99 * len(seeds)

    def test_row_order_is_shuffled(self):
        model = bsbm_to_mixture(BsbmParams.balanced(40, 10, 2, 0.45, 0.05))
        ds = sample(model, 40, 0)
        assert not np.array_equal(ds.truth, np.sort(ds.truth))


class TestExpectedMatrix:
    def test_single_component(self):
        model = MixtureModel(np.array([[0.3, 0.7]]), np.array([1.0]), sigma_sq=1.0)
        e = expected_matrix(model, 4, 0)
        assert np.array_equal(e, np.tile([0.3, 0.7], (4, 1)))

    def test_rank_at_most_k(self):
        model = bsbm_to_mixture(BsbmParams.balanced(30, 12, 3, 0.4, 0.1))
        e = expected_matrix(model, 30, 5)
        assert np.linalg.matrix_rank(e) <= 3

    def test_pairs_with_sample_placement(self):
        model = bsbm_to_mixture(BsbmParams.balanced(20, 10, 2, 0.45, 0.05))
        ds = sample(model, 20, 3)
        e = expected_matrix(model, 20, 3)
        assert np.array_equal(e, expected_from_truth(model, ds.truth))

    def test_monte_carlo_entry_mean(self):
        # Across seeds, each observed entry averages to its paired
        # expectation within 3 exact binomial standard errors.
        model = bsbm_to_mixture(BsbmParams.balanced(10, 6, 2, 0.45, 0.05))
        seeds = range(200)
        i, j = 2, 3
        observed = np.array([float(sample(model, 10, s).matrix[i, j]) for s in seeds])
        expected = np.array([float(expected_matrix(model, 10, s)[i, j]) for s in seeds])
        pooled_se = np.sqrt(np.sum(expected * (1.0 - expected))) / len(observed)
        assert abs(observed.mean() - expected.mean()) <= 3 * pooled_se


class TestIndicatorModel:
    def test_blocks(self):
        model = indicator_model(6, 3, [0.5, 0.25, 0.25])
        assert np.array_equal(
            model.means,
            [[1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0], [0, 0, 0, 0, 1, 1]],
        )
        ds = sample(model, 8, 0)
        assert np.array_equal(ds.matrix, expected_matrix(model, 8, 0))


class TestSerialization:
    def test_round_trip(self, tmp_path):
        params = BsbmParams.balanced(12, 9, 3, 0.45, 0.05)
        model = bsbm_to_mixture(params)
        ds = sample(model, 12, 7)
        ds.bsbm = params
        prefix = tmp_path / "data"
        mtx_path, json_path = save_dataset(ds, prefix)
        loaded = load_dataset(prefix)
        assert np.array_equal(loaded.matrix, ds.matrix)
        assert np.array_equal(loaded.truth, ds.truth)
        assert loaded.seed == 7
        assert np.array_equal(loaded.model.means, model.means)
        assert loaded.model.sigma_sq == model.sigma_sq
        assert loaded.bsbm.p == params.p
        assert np.array_equal(loaded.bsbm.right_assignment, params.right_assignment)

    def test_matrix_market_interoperates_with_scipy(self, tmp_path):
        model = bsbm_to_mixture(BsbmParams.balanced(8, 5, 2, 0.4, 0.1))
        ds = sample(model, 8, 1)
        prefix = tmp_path / "mm"
        mtx_path, _ = save_dataset(ds, prefix)
        via_scipy = np.asarray(scipy.io.mmread(mtx_path))
        assert np.array_equal(via_scipy, ds.matrix)

    def test_sidecar_derived_values(self, tmp_path):
        params = BsbmParams(20, 10, 2, 0.4, 0.1, (10, 10), np.repeat([0, 1], 5))
        model = bsbm_to_mixture(params)
        ds = sample(model, 20, 0)
        ds.bsbm = params
        _, json_path = save_dataset(ds, tmp_path / "x")
        sidecar = json.loads(json_path.read_text())
        assert sidecar["derived"]["delta_mu_sq"] == pytest.approx(0.9, rel=1e-12)
        assert sidecar["derived"]["delta_v"] == 10
        assert sidecar["derived"]["w_min"] == 0.5

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidInputError):
            load_dataset(tmp_path / "nope")

    def test_malformed_sidecar(self, tmp_path):
        model = bsbm_to_mixture(BsbmParams.balanced(8, 5, 2, 0.4, 0.1))
        ds = sample(model, 8, 1)
        prefix = tmp_path / "bad"
        _, json_path = save_dataset(ds, prefix)
        json_path.write_text("{not json")
        with pytest.raises(InvalidInputError):
            load_dataset(prefix)


def test_dataset_rejects_non_binary():
    with pytest.raises(InvalidInputError):
        BinaryDataset(np.array([[0.0, 0.5]]))
