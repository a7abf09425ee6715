"""Dense backbone construction from an architecture descriptor dict.

The module structure mirrors the search engine's counting convention exactly:
normalization lives only inside dense layers (pre-activation BN-ReLU before
each conv), convolutions are bias-free, transitions are a bare 1x1 conv plus
2x average pooling, and the classifier is a biased linear map after global
pooling.  Parameter counts therefore match the engine's estimator one for one
when its batch-norm flag is on.
"""
from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F
from torch import Tensor

SCHEMA_VERSION = 1
IMAGE_CHANNELS = 3

_TOP_KEYS = {
    "schema_version", "stem_width", "transition_compression", "input_resolution",
    "num_classes", "bottleneck_multiplier", "count_batchnorm_params", "stages",
}
_STAGE_KEYS = {"num_layers", "growth_rate", "kernel_size", "in_width", "in_resolution"}


class SchemaError(ValueError):
    """Raised when an architecture document does not match schema version 1."""


def check_schema(arch: dict) -> dict:
    """Validate an architecture dict against schema version 1 and return it."""
    if not isinstance(arch, dict):
        raise SchemaError("architecture document must be a JSON object")
    if arch.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version: {arch.get('schema_version')!r}")
    unknown = sorted(set(arch) - _TOP_KEYS)
    if unknown:
        raise SchemaError(f"unknown key: {unknown[0]!r}")
    missing = sorted(_TOP_KEYS - set(arch))
    if missing:
        raise SchemaError(f"missing key: {missing[0]!r}")
    if not arch["stages"]:
        raise SchemaError("at least one stage is required")
    for i, stage in enumerate(arch["stages"]):
        bad = sorted(set(stage) - _STAGE_KEYS)
        if bad:
            raise SchemaError(f"unknown key: {bad[0]!r} (stage {i})")
        lost = sorted(_STAGE_KEYS - set(stage))
        if lost:
            raise SchemaError(f"missing key: {lost[0]!r} (stage {i})")
    return arch


class DenseLayer(nn.Module):
    """Pre-activation bottleneck layer: BN-ReLU-1x1 then BN-ReLU-kxk."""

    def __init__(self, in_channels: int, growth_rate: int, kernel_size: int,
                 bottleneck_multiplier: int) -> None:
        super().__init__()
        inter = bottleneck_multiplier * growth_rate
        self.norm1 = nn.BatchNorm2d(in_channels)
        self.conv1 = nn.Conv2d(in_channels, inter, kernel_size=1, bias=False)
        self.norm2 = nn.BatchNorm2d(inter)
        self.conv2 = nn.Conv2d(inter, growth_rate, kernel_size=kernel_size,
                               padding=kernel_size // 2, bias=False)

    def forward(self, x: Tensor) -> Tensor:
        out = self.conv1(F.relu(self.norm1(x)))
        out = self.conv2(F.relu(self.norm2(out)))
        return out


class DenseStage(nn.Module):
    """A block of dense layers; each consumes the concatenation of all inputs."""

    def __init__(self, num_layers: int, in_channels: int, growth_rate: int,
                 kernel_size: int, bottleneck_multiplier: int) -> None:
        super().__init__()
        self.layers = nn.ModuleList([
            DenseLayer(in_channels + i * growth_rate, growth_rate, kernel_size,
                       bottleneck_multiplier)
            for i in range(num_layers)
        ])

    def forward(self, x: Tensor) -> Tensor:
        features = [x]
        for layer in self.layers:
            features.append(layer(torch.cat(features, dim=1)))
        return torch.cat(features, dim=1)


class Transition(nn.Module):
    """Channel compression by 1x1 conv followed by 2x average pooling."""

    def __init__(self, in_channels: int, out_channels: int) -> None:
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size=1, bias=False)
        self.pool = nn.AvgPool2d(kernel_size=2, stride=2)

    def forward(self, x: Tensor) -> Tensor:
        return self.pool(self.conv(x))


class DenseBackbone(nn.Module):
    """Stem, dense stages with transitions, global pool, linear classifier."""

    def __init__(self, arch: dict) -> None:
        super().__init__()
        check_schema(arch)
        self.arch = arch
        theta = arch["transition_compression"]
        mult = arch["bottleneck_multiplier"]
        self.stem = nn.Conv2d(IMAGE_CHANNELS, arch["stem_width"], kernel_size=3,
                              padding=1, bias=False)
        self.stages = nn.ModuleList()
        self.transitions = nn.ModuleList()
        stages = arch["stages"]
        for i, stage in enumerate(stages):
            self.stages.append(DenseStage(
                stage["num_layers"], stage["in_width"], stage["growth_rate"],
                stage["kernel_size"], mult,
            ))
            out_width = stage["in_width"] + stage["num_layers"] * stage["growth_rate"]
            if i < len(stages) - 1:
                self.transitions.append(
                    Transition(out_width, math.floor(theta * out_width))
                )
        final_width = (stages[-1]["in_width"]
                       + stages[-1]["num_layers"] * stages[-1]["growth_rate"])
        self.classifier = nn.Linear(final_width, arch["num_classes"], bias=True)

    def forward(self, x: Tensor) -> Tensor:
        x, _ = self.forward_with_trace(x)
        return x

    def forward_with_trace(self, x: Tensor) -> tuple[Tensor, list[tuple[int, int, int]]]:
        """Forward pass returning logits plus each stage's (C, H, W) output."""
        x = self.stem(x)
        trace: list[tuple[int, int, int]] = []
        for i, stage in enumerate(self.stages):
            x = stage(x)
            trace.append((x.shape[1], x.shape[2], x.shape[3]))
            if i < len(self.transitions):
                x = self.transitions[i](x)
        x = F.adaptive_avg_pool2d(x, 1).flatten(1)
        return self.classifier(x), trace


def expected_param_breakdown(arch: dict) -> dict[str, int]:
    """Per-component parameter counts implied by the schema's convention.

    Used to attribute any disagreement with the framework count to specific
    components; batch-norm entries are included only when the document's
    counting flag is set.
    """
    check_schema(arch)
    theta = arch["transition_compression"]
    mult = arch["bottleneck_multiplier"]
    bn = arch["count_batchnorm_params"]
    out: dict[str, int] = {"stem": IMAGE_CHANNELS * arch["stem_width"] * 9}
    stages = arch["stages"]
    for i, stage in enumerate(stages):
        K = stage["growth_rate"]
        inter = mult * K
        k2 = stage["kernel_size"] ** 2
        for j in range(stage["num_layers"]):
            c = stage["in_width"] + j * K
            count = c * inter + inter * K * k2
            if bn:
                count += 2 * c + 2 * inter
            out[f"stage{i}.layer{j}"] = count
        out_width = stage["in_width"] + stage["num_layers"] * K
        if i < len(stages) - 1:
            out[f"transition{i}"] = out_width * math.floor(theta * out_width)
    final_width = (stages[-1]["in_width"]
                   + stages[-1]["num_layers"] * stages[-1]["growth_rate"])
    out["classifier"] = final_width * arch["num_classes"] + arch["num_classes"]
    return out


def framework_param_breakdown(model: DenseBackbone) -> dict[str, int]:
    """Trainable parameter counts grouped to match expected_param_breakdown."""
    out: dict[str, int] = {
        "stem": sum(p.numel() for p in model.stem.parameters()),
        "classifier": sum(p.numel() for p in model.classifier.parameters()),
    }
    for i, stage in enumerate(model.stages):
        for j, layer in enumerate(stage.layers):
            out[f"stage{i}.layer{j}"] = sum(p.numel() for p in layer.parameters())
    for i, transition in enumerate(model.transitions):
        out[f"transition{i}"] = sum(p.numel() for p in transition.parameters())
    return out
