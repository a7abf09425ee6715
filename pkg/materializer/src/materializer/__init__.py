"""Rebuild exported dense architecture JSON as PyTorch models and verify them."""

from .build import (
    EngineNotFoundError,
    MaterializedReport,
    ShapeMismatchError,
    build_and_verify,
    derived_schedule,
    estimator_param_count,
    load_architecture,
)
from .model import DenseBackbone, SchemaError, check_schema
from .train import DatasetMissingError, SmokeTrainError, load_dataset, smoke_train

__version__ = "0.1.0"

__all__ = [
    "DatasetMissingError",
    "DenseBackbone",
    "EngineNotFoundError",
    "MaterializedReport",
    "SchemaError",
    "ShapeMismatchError",
    "SmokeTrainError",
    "build_and_verify",
    "check_schema",
    "derived_schedule",
    "estimator_param_count",
    "load_architecture",
    "load_dataset",
    "smoke_train",
]
