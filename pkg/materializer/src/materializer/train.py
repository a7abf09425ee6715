"""Short sanity training runs on locally available image datasets.

Datasets are read from a local directory in their standard published layouts
(CIFAR python pickle batches, SVHN .mat files); nothing is downloaded.  The
optimizer settings are fixed: SGD with momentum 0.9, weight decay 5e-4, and
initial learning rate 0.1 at batch size 32.
"""
from __future__ import annotations

import os
import pickle

import numpy as np
import torch
import torch.nn.functional as F

from .build import load_architecture
from .model import DenseBackbone

DATA_DIR_ENV = "DENSEARCH_DATA_DIR"
MAX_STEPS = 500

DATASET_CLASSES = {"cifar10": 10, "cifar100": 100, "svhn": 10}

_DOWNLOAD_HINTS = {
    "cifar10": (
        "download https://www.cs.toronto.edu/~kriz/cifar-10-python.tar.gz and "
        "extract it so that <data_dir>/cifar-10-batches-py/data_batch_1 exists"
    ),
    "cifar100": (
        "download https://www.cs.toronto.edu/~kriz/cifar-100-python.tar.gz and "
        "extract it so that <data_dir>/cifar-100-python/train exists"
    ),
    "svhn": (
        "download http://ufldl.stanford.edu/housenumbers/train_32x32.mat into "
        "<data_dir>/svhn/train_32x32.mat"
    ),
}


class DatasetMissingError(FileNotFoundError):
    """Raised when a dataset is not present locally; carries download help."""


class SmokeTrainError(RuntimeError):
    """Raised when the short training run fails its sanity condition."""


def _unpickle(path: str) -> dict:
    with open(path, "rb") as fh:
        return pickle.load(fh, encoding="bytes")


def _load_cifar10(root: str) -> tuple[np.ndarray, np.ndarray]:
    base = os.path.join(root, "cifar-10-batches-py")
    batches = [os.path.join(base, f"data_batch_{i}") for i in range(1, 6)]
    present = [p for p in batches if os.path.isfile(p)]
    if not present:
        raise DatasetMissingError(
            f"cifar10 not found under {base}; {_DOWNLOAD_HINTS['cifar10']}"
        )
    data, labels = [], []
    for path in present:
        raw = _unpickle(path)
        data.append(raw[b"data"])
        labels.extend(raw[b"labels"])
    images = np.concatenate(data).reshape(-1, 3, 32, 32)
    return images, np.asarray(labels, dtype=np.int64)


def _load_cifar100(root: str) -> tuple[np.ndarray, np.ndarray]:
    path = os.path.join(root, "cifar-100-python", "train")
    if not os.path.isfile(path):
        raise DatasetMissingError(
            f"cifar100 not found at {path}; {_DOWNLOAD_HINTS['cifar100']}"
        )
    raw = _unpickle(path)
    images = raw[b"data"].reshape(-1, 3, 32, 32)
    return images, np.asarray(raw[b"fine_labels"], dtype=np.int64)


def _load_svhn(root: str) -> tuple[np.ndarray, np.ndarray]:
    path = os.path.join(root, "svhn", "train_32x32.mat")
    if not os.path.isfile(path):
        raise DatasetMissingError(
            f"svhn not found at {path}; {_DOWNLOAD_HINTS['svhn']}"
        )
    from scipy.io import loadmat  # scipy only needed for this format

    raw = loadmat(path)
    images = np.transpose(raw["X"], (3, 2, 0, 1))
    labels = raw["y"].reshape(-1).astype(np.int64) % 10  # digit "10" means 0
    return images, labels


_LOADERS = {"cifar10": _load_cifar10, "cifar100": _load_cifar100, "svhn": _load_svhn}


def load_dataset(name: str, data_dir: str | None = None) -> tuple[torch.Tensor, torch.Tensor]:
    """Images as standardized float tensors plus integer labels."""
    if name not in _LOADERS:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(_LOADERS)}")
    root = data_dir or os.environ.get(DATA_DIR_ENV) or os.path.join(os.getcwd(), "data")
    images, labels = _LOADERS[name](root)
    x = torch.from_numpy(np.ascontiguousarray(images)).float() / 255.0
    x = (x - x.mean(dim=(0, 2, 3), keepdim=True)) / (x.std(dim=(0, 2, 3), keepdim=True) + 1e-7)
    return x, torch.from_numpy(labels)


def smoke_train(architecture_path: str, dataset: str, steps: int, *,
                data_dir: str | None = None, batch_size: int = 32,
                seed: int = 0) -> list[float]:
    """Train for a handful of steps and return the loss trace.

    The trace has ``steps + 1`` entries; entry 0 is the loss of the untrained
    model on the first batch.  For any positive step count the final loss must
    come out below the initial loss, otherwise SmokeTrainError is raised.
    """
    if not 0 <= steps <= MAX_STEPS:
        raise ValueError(f"steps must lie in [0, {MAX_STEPS}]")
    arch = load_architecture(architecture_path)
    expected_classes = DATASET_CLASSES[dataset] if dataset in DATASET_CLASSES else None
    if expected_classes is None:
        raise ValueError(f"unknown dataset {dataset!r}")
    if arch["num_classes"] != expected_classes:
        raise ValueError(
            f"architecture has {arch['num_classes']} classes but {dataset} "
            f"has {expected_classes}"
        )
    images, labels = load_dataset(dataset, data_dir)
    if arch["input_resolution"] != images.shape[-1]:
        raise ValueError(
            f"architecture expects {arch['input_resolution']}x"
            f"{arch['input_resolution']} inputs but {dataset} provides "
            f"{images.shape[-1]}x{images.shape[-1]}"
        )

    torch.manual_seed(seed)
    model = DenseBackbone(arch)
    optimizer = torch.optim.SGD(model.parameters(), lr=0.1, momentum=0.9,
                                weight_decay=5e-4)
    generator = torch.Generator().manual_seed(seed)
    order = torch.randperm(len(images), generator=generator)

    def batch(step: int) -> tuple[torch.Tensor, torch.Tensor]:
        idx = [order[(step * batch_size + i) % len(images)] for i in range(batch_size)]
        idx = torch.stack(idx)
        return images[idx], labels[idx]

    model.train()
    x, y = batch(0)
    with torch.no_grad():
        trace = [float(F.cross_entropy(model(x), y))]
    for step in range(steps):
        x, y = batch(step)
        optimizer.zero_grad()
        loss = F.cross_entropy(model(x), y)
        loss.backward()
        optimizer.step()
        trace.append(loss.item())
    if steps > 0 and trace[-1] >= trace[0]:
        raise SmokeTrainError(
            f"loss did not improve: {trace[0]:.4f} -> {trace[-1]:.4f} over {steps} steps"
        )
    return trace
