"""The four ImageNet backbones and their canonical preprocessing.

Each backbone runs without its classifier head on variable-size input; a
32x32 patch comes out of every network's convolutional stack with 1x1
spatial extent (all four have total stride 32), so the feature vector is
the channel dimension itself.  Larger inputs are reduced by global average
pooling.  Mixing one network's preprocessing with another's weights would
corrupt the features, so each backbone is bound to its own preprocessing
with no way to override it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExtractorSpec:
    name: str
    output_dim: int
    preprocessing: str  # identifier of the canonical preprocessing routine


MODELS: dict[str, ExtractorSpec] = {
    "vgg16": ExtractorSpec("vgg16", 512, "vgg16"),
    "resnet50": ExtractorSpec("resnet50", 2048, "resnet50"),
    "xception": ExtractorSpec("xception", 2048, "xception"),
    "densenet121": ExtractorSpec("densenet121", 1024, "densenet"),
}

WEIGHT_CHOICES = ("imagenet", "none")


class FeatureModel:
    """A backbone bound to its preprocessing, producing (n, dim) features."""

    def __init__(self, name: str, weights: str = "imagenet", seed: int = 0):
        if name not in MODELS:
            raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
        if weights not in WEIGHT_CHOICES:
            raise ValueError(f"weights must be one of {WEIGHT_CHOICES}")
        self.spec = MODELS[name]
        self.name = name
        self.weights = weights
        tf, ctor, preprocess = _backbone(name)
        if weights == "none":
            # deterministic random init for weightless contract testing
            tf.keras.utils.set_random_seed(seed)
        self._model = ctor(
            include_top=False,
            weights=None if weights == "none" else "imagenet",
            input_shape=(None, None, 3),
        )
        self._preprocess = preprocess
        self._tf = tf

    def features(self, patches: np.ndarray, batch_size: int = 345) -> np.ndarray:
        """Forward (n, h, w, 3) patches through the convolutional stack."""
        x = np.asarray(patches)
        if x.ndim != 4 or x.shape[3] != 3:
            raise ValueError(f"expected (n, h, w, 3) patches, got {x.shape}")
        outs = []
        for start in range(0, x.shape[0], batch_size):
            chunk = x[start : start + batch_size].astype(np.float32)
            y = self._model(self._preprocess(chunk), training=False).numpy()
            if y.ndim == 4 and (y.shape[1] > 1 or y.shape[2] > 1):
                y = y.mean(axis=(1, 2))  # global average pool
            outs.append(y.reshape(y.shape[0], -1))
        feats = np.concatenate(outs, axis=0)
        if feats.shape[1] != self.spec.output_dim:
            raise RuntimeError(
                f"{self.spec.name} produced dim {feats.shape[1]}, "
                f"expected {self.spec.output_dim}"
            )
        if not np.isfinite(feats).all():
            raise RuntimeError(f"{self.spec.name} produced non-finite activations")
        return feats.astype(np.float32)


def _backbone(name: str):
    try:
        import tensorflow as tf
    except ImportError as exc:  # pragma: no cover - environment dependent
        raise ImportError(
            "featexport needs TensorFlow for inference; install the 'tf' extra "
            "(pip install featexport[tf]) or any TensorFlow >= 2.16"
        ) from exc
    from tensorflow.keras import applications as apps

    table = {
        "vgg16": (apps.VGG16, apps.vgg16.preprocess_input),
        "resnet50": (apps.ResNet50, apps.resnet50.preprocess_input),
        "xception": (apps.Xception, apps.xception.preprocess_input),
        "densenet121": (apps.DenseNet121, apps.densenet.preprocess_input),
    }
    ctor, preprocess = table[name]
    return tf, ctor, preprocess
