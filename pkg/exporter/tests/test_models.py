"""Backbone behavior with seeded random weights (no downloads needed here).

Real exports default to ImageNet weights; these tests pin the mechanics --
dims, preprocessing binding, determinism -- which do not depend on which
weights are loaded.
"""

import numpy as np
import pytest

pytest.importorskip("tensorflow")

from featexport.models import MODELS, FeatureModel


def test_unknown_name_rejected():
    with pytest.raises(ValueError, match="unknown model"):
        FeatureModel("alexnet")


def test_bad_weights_rejected():
    with pytest.raises(ValueError, match="weights"):
        FeatureModel("vgg16", weights="random")


@pytest.mark.parametrize("name", sorted(MODELS))
def test_output_dim_per_backbone(name, fixture_patches):
    model = FeatureModel(name, weights="none", seed=0)
    feats = model.features(fixture_patches)
    assert feats.shape == (8, MODELS[name].output_dim)
    assert feats.dtype == np.float32
    assert np.isfinite(feats).all()
    # random-init conv stacks still separate distinct inputs
    assert not np.allclose(feats[0], feats[7])


def test_same_seed_same_features(fixture_patches):
    a = FeatureModel("vgg16", weights="none", seed=0).features(fixture_patches)
    b = FeatureModel("vgg16", weights="none", seed=0).features(fixture_patches)
    assert a.tobytes() == b.tobytes()


def test_different_seed_different_features(fixture_patches):
    a = FeatureModel("vgg16", weights="none", seed=0).features(fixture_patches)
    b = FeatureModel("vgg16", weights="none", seed=1).features(fixture_patches)
    assert not np.array_equal(a, b)


def test_batch_size_does_not_change_features(fixture_patches, vgg_model):
    whole = vgg_model.features(fixture_patches)
    chunked = vgg_model.features(fixture_patches, batch_size=3)
    np.testing.assert_allclose(chunked, whole, rtol=1e-5, atol=1e-6)


def test_input_shape_validated(vgg_model):
    with pytest.raises(ValueError, match="patches"):
        vgg_model.features(np.zeros((8, 32, 32), dtype=np.uint8))
    with pytest.raises(ValueError, match="patches"):
        vgg_model.features(np.zeros((8, 32, 32, 1), dtype=np.uint8))
