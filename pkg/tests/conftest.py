import os
from pathlib import Path

import numpy as np
import pytest

from spa_snn.dataio import Dataset

# Real datasets are looked up under SPA_SNN_DATA (default /root/data):
# <root>/mnist/*.gz and <root>/emnist/*.gz.  Tests that need them skip when
# the files are absent.
DATA_ROOT = Path(os.environ.get("SPA_SNN_DATA", "/root/data"))
MNIST_DIR = DATA_ROOT / "mnist"
EMNIST_DIR = DATA_ROOT / "emnist"

needs_mnist = pytest.mark.skipif(
    not (MNIST_DIR / "train-images-idx3-ubyte.gz").exists()
    and not (MNIST_DIR / "train-images-idx3-ubyte").exists(),
    reason=f"MNIST IDX files not found under {MNIST_DIR}",
)
needs_emnist = pytest.mark.skipif(
    not (EMNIST_DIR / "emnist-letters-train-images-idx3-ubyte.gz").exists(),
    reason=f"EMNIST-letters IDX files not found under {EMNIST_DIR}",
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def synthetic_dataset():
    """A tiny separable 4-class image set: each class lights one quadrant
    plus noise.  Enough structure for end-to-end smoke runs without MNIST."""
    gen = np.random.default_rng(99)
    n_per = 30
    images = []
    labels = []
    for cls in range(4):
        for _ in range(n_per):
            img = gen.integers(0, 20, size=(28, 28))
            r0 = 14 * (cls // 2)
            c0 = 14 * (cls % 2)
            img[r0:r0 + 14, c0:c0 + 14] = gen.integers(150, 255, size=(14, 14))
            images.append(img)
            labels.append(cls)
    order = gen.permutation(len(images))
    return Dataset(
        images=np.asarray(images, dtype=np.uint8)[order],
        labels=np.asarray(labels, dtype=np.int64)[order],
        name="synthetic",
        split="train",
        n_classes=4,
    )
