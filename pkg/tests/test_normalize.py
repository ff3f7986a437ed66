from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnvad.normalize import (
    KINDS,
    fit_normalizer,
    load_normalizer,
    save_normalizer,
)


def _fit(kind, x, batches=1):
    parts = np.array_split(x, batches) if batches > 1 else [x]
    return fit_normalizer(kind, (p for p in parts if p.shape[0]))


@pytest.fixture
def train():
    rng = np.random.default_rng(7)
    # deliberately anisotropic: distinct scales and offsets per feature
    return rng.normal(size=(400, 12)) * np.linspace(0.1, 30, 12) + np.arange(12)


class TestZscore:
    def test_train_mean_zero_std_one(self, train):
        out = _fit("zscore", train).transform(train)
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-9)

    def test_constant_feature_maps_to_zero(self):
        x = np.ones((50, 3))
        x[:, 1] = np.arange(50)
        out = _fit("zscore", x).transform(x)
        assert (out[:, 0] == 0).all()
        assert (out[:, 2] == 0).all()
        assert out[:, 1].std() > 0

    def test_population_std_used(self):
        x = np.array([[0.0], [2.0]])
        norm = _fit("zscore", x)
        # population std of {0,2} is 1, sample std would be sqrt(2)
        np.testing.assert_allclose(norm.std, [1.0])


class TestZeroOne:
    def test_train_min_zero_max_one_exact(self, train):
        out = _fit("zeroone", train).transform(train)
        assert out.min(axis=0).tolist() == [0.0] * train.shape[1]
        assert out.max(axis=0).tolist() == [1.0] * train.shape[1]

    def test_constant_feature_maps_to_zero(self):
        x = np.full((10, 2), 5.0)
        out = _fit("zeroone", x).transform(x)
        assert (out == 0).all()

    def test_out_of_range_test_values_not_clipped(self, train):
        norm = _fit("zeroone", train)
        beyond = train.max(axis=0, keepdims=True) * 2 + 1
        out = norm.transform(beyond)
        assert (out > 1).any()


class TestRowNorms:
    @pytest.mark.parametrize("kind,ord_", [("l1", 1), ("l2", 2)])
    def test_unit_row_norms(self, train, kind, ord_):
        out = _fit(kind, train).transform(train)
        norms = np.linalg.norm(out, ord=ord_, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-9)

    @pytest.mark.parametrize("kind", ["l1", "l2"])
    def test_zero_rows_pass_through(self, kind):
        x = np.zeros((4, 6))
        x[1] = 3.0
        out = _fit(kind, x).transform(x)
        assert (out[0] == 0).all()
        assert (out[2] == 0).all()
        assert np.linalg.norm(out[1], ord=1 if kind == "l1" else 2) == pytest.approx(1.0)

    def test_row_normalization_needs_no_fit_statistics(self):
        norm = fit_normalizer("l2", [np.ones((3, 4))])
        fresh = np.array([[2.0, 0.0, 0.0, 0.0]])
        np.testing.assert_allclose(norm.transform(fresh), [[1, 0, 0, 0]])


class TestStreaming:
    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("batches", [2, 3, 7])
    def test_batched_fit_equals_one_shot(self, train, kind, batches):
        one = _fit(kind, train)
        many = _fit(kind, train, batches=batches)
        out1 = one.transform(train)
        out2 = many.transform(train)
        np.testing.assert_allclose(out1, out2, rtol=1e-12, atol=1e-12)

    def test_empty_stream_rejected(self):
        with pytest.raises(ValueError):
            fit_normalizer("zscore", iter([]))

    def test_inconsistent_widths_rejected(self):
        with pytest.raises(ValueError):
            fit_normalizer("zscore", [np.ones((2, 3)), np.ones((2, 4))])


class TestPersistence:
    @pytest.mark.parametrize("kind", KINDS)
    def test_round_trip_is_exact(self, tmp_path, train, kind):
        norm = _fit(kind, train)
        path = tmp_path / "n.json"
        save_normalizer(norm, path)
        loaded = load_normalizer(path)
        x = train[:17]
        np.testing.assert_array_equal(norm.transform(x), loaded.transform(x))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            fit_normalizer("minmax", [np.ones((2, 2))])


@settings(deadline=None, max_examples=40)
@given(
    st.integers(min_value=2, max_value=40),
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=0, max_value=2**31 - 1),
)
def test_zscore_idempotent_on_standardized_data(n, d, seed):
    # standardizing already-standardized data is a no-op
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    first = fit_normalizer("zscore", [x])
    y = first.transform(x)
    second = fit_normalizer("zscore", [y])
    z = second.transform(y)
    np.testing.assert_allclose(z, y, atol=1e-9)


@settings(deadline=None, max_examples=40)
@given(
    st.integers(min_value=1, max_value=30),
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=0, max_value=2**31 - 1),
)
def test_l2_transform_is_scale_invariant(n, d, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    norm = fit_normalizer("l2", [x])
    np.testing.assert_allclose(
        norm.transform(x), norm.transform(x * 37.5), rtol=1e-12, atol=1e-12
    )
