import os
import pickle

import numpy as np
import pytest

from archhelpers import plan_architecture, write_architecture


@pytest.fixture
def minimal_arch(tmp_path):
    arch = plan_architecture(8, [1], [1], [1], resolution=8, classes=10)
    return write_architecture(tmp_path / "minimal.json", arch)


@pytest.fixture
def baseline_arch(tmp_path):
    arch = plan_architecture(64, [6, 12, 24, 16], [32] * 4, [3] * 4, classes=100)
    return write_architecture(tmp_path / "baseline.json", arch)


@pytest.fixture(scope="session")
def cifar_dir(tmp_path_factory):
    """CIFAR-10 python-format batches, synthesized when the real set is absent.

    Images are class-structured (one fixed pattern per label plus noise) so a
    short training run has something learnable.  Point DENSEARCH_DATA_DIR at a
    real extraction to exercise the identical code path on the real data.
    """
    existing = os.environ.get("DENSEARCH_DATA_DIR")
    if existing and os.path.isfile(
        os.path.join(existing, "cifar-10-batches-py", "data_batch_1")
    ):
        return existing
    root = tmp_path_factory.mktemp("data")
    base = root / "cifar-10-batches-py"
    base.mkdir()
    rng = np.random.default_rng(12345)
    patterns = rng.integers(0, 256, size=(10, 3072), dtype=np.int64)
    n = 2048
    labels = rng.integers(0, 10, size=n)
    noise = rng.normal(0.0, 25.0, size=(n, 3072))
    data = np.clip(patterns[labels] + noise, 0, 255).astype(np.uint8)
    with open(base / "data_batch_1", "wb") as fh:
        pickle.dump({b"data": data, b"labels": labels.tolist()}, fh)
    return str(root)
