"""Architecture descriptors, the discrete search space, and resource estimators.

A network is a stem convolution, a chain of dense stages separated by
compressing transitions, and a pooled linear classifier.  Stage layout
follows the dense-BC convention: every layer is a 1x1 bottleneck conv to
``bottleneck_multiplier * growth_rate`` channels followed by a k x k conv
producing ``growth_rate`` channels that are concatenated onto the running
feature map.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

IMAGE_CHANNELS = 3
STEM_KERNEL = 3
SCHEMA_VERSION = 1

# Counts above this are treated as nonsense input rather than real designs.
_COUNT_LIMIT = 2 ** 63


class ResourceOverflowError(OverflowError):
    """Raised when a parameter or FLOP count exceeds the representable range."""


@dataclass(frozen=True)
class StageConfig:
    """One dense stage: ``num_layers`` layers of growth ``growth_rate``.

    ``in_width`` is the channel count entering the stage and ``in_resolution``
    the (square) feature-map side length, constant within the stage.
    """

    num_layers: int
    growth_rate: int
    kernel_size: int
    in_width: int
    in_resolution: int

    def __post_init__(self) -> None:
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.growth_rate < 1:
            raise ValueError("growth_rate must be >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be an odd positive integer")
        if self.in_width < 1:
            raise ValueError("in_width must be >= 1")
        if self.in_resolution < 1:
            raise ValueError("in_resolution must be >= 1")

    @property
    def out_width(self) -> int:
        return self.in_width + self.num_layers * self.growth_rate

    def layer_in_widths(self) -> list[int]:
        """Concatenated input width seen by each layer, in order."""
        return [self.in_width + i * self.growth_rate for i in range(self.num_layers)]


@dataclass(frozen=True)
class DenseNetConfig:
    """Full architecture descriptor (immutable value object)."""

    stem_width: int
    stages: tuple[StageConfig, ...]
    transition_compression: float = 0.5
    input_resolution: int = 32
    num_classes: int = 100
    bottleneck_multiplier: int = 4
    count_batchnorm_params: bool = True

    def __post_init__(self) -> None:
        if self.stem_width < 1:
            raise ValueError("stem_width must be >= 1")
        if not self.stages:
            raise ValueError("at least one stage is required")
        object.__setattr__(self, "stages", tuple(self.stages))
        if not 0.0 < self.transition_compression <= 1.0:
            raise ValueError("transition_compression must lie in (0, 1]")
        if self.input_resolution < 1:
            raise ValueError("input_resolution must be >= 1")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if self.bottleneck_multiplier < 1:
            raise ValueError("bottleneck_multiplier must be >= 1")

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    @property
    def total_layers(self) -> int:
        return sum(s.num_layers for s in self.stages)

    @property
    def final_width(self) -> int:
        return self.stages[-1].out_width

    @property
    def final_resolution(self) -> int:
        return self.stages[-1].in_resolution

    @classmethod
    def from_plan(
        cls,
        stem_width: int,
        num_layers: list[int] | tuple[int, ...],
        growth_rates: list[int] | tuple[int, ...],
        kernel_sizes: list[int] | tuple[int, ...],
        *,
        transition_compression: float = 0.5,
        input_resolution: int = 32,
        num_classes: int = 100,
        bottleneck_multiplier: int = 4,
        count_batchnorm_params: bool = True,
    ) -> "DenseNetConfig":
        """Build a config from per-stage plans, deriving widths and resolutions.

        Stage 1 enters at ``stem_width`` channels and ``input_resolution``
        pixels; each transition compresses channels by the floor of the
        compression ratio and halves (floor) the resolution.
        """
        if not len(num_layers) == len(growth_rates) == len(kernel_sizes):
            raise ValueError("per-stage plans must have equal length")
        stages = []
        width, resolution = stem_width, input_resolution
        for L, K, k in zip(num_layers, growth_rates, kernel_sizes):
            stages.append(StageConfig(L, K, k, width, resolution))
            width = math.floor(transition_compression * (width + L * K))
            resolution = resolution // 2
        return cls(
            stem_width=stem_width,
            stages=tuple(stages),
            transition_compression=transition_compression,
            input_resolution=input_resolution,
            num_classes=num_classes,
            bottleneck_multiplier=bottleneck_multiplier,
            count_batchnorm_params=count_batchnorm_params,
        )

    def to_dict(self) -> dict:
        """Canonical dict form; key order is part of the file format."""
        return {
            "schema_version": SCHEMA_VERSION,
            "stem_width": self.stem_width,
            "transition_compression": self.transition_compression,
            "input_resolution": self.input_resolution,
            "num_classes": self.num_classes,
            "bottleneck_multiplier": self.bottleneck_multiplier,
            "count_batchnorm_params": self.count_batchnorm_params,
            "stages": [
                {
                    "num_layers": s.num_layers,
                    "growth_rate": s.growth_rate,
                    "kernel_size": s.kernel_size,
                    "in_width": s.in_width,
                    "in_resolution": s.in_resolution,
                }
                for s in self.stages
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "DenseNetConfig":
        if not isinstance(data, dict):
            raise ValueError("architecture document must be a JSON object")
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version: {version!r}")
        known = {
            "schema_version", "stem_width", "transition_compression",
            "input_resolution", "num_classes", "bottleneck_multiplier",
            "count_batchnorm_params", "stages",
        }
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown key: {unknown[0]!r}")
        missing = sorted(known - set(data))
        if missing:
            raise ValueError(f"missing key: {missing[0]!r}")
        stage_keys = {"num_layers", "growth_rate", "kernel_size", "in_width", "in_resolution"}
        stages = []
        for i, raw in enumerate(data["stages"]):
            bad = sorted(set(raw) - stage_keys)
            if bad:
                raise ValueError(f"unknown key: {bad[0]!r} (stage {i})")
            lost = sorted(stage_keys - set(raw))
            if lost:
                raise ValueError(f"missing key: {lost[0]!r} (stage {i})")
            stages.append(StageConfig(**raw))
        return cls(
            stem_width=data["stem_width"],
            stages=tuple(stages),
            transition_compression=data["transition_compression"],
            input_resolution=data["input_resolution"],
            num_classes=data["num_classes"],
            bottleneck_multiplier=data["bottleneck_multiplier"],
            count_batchnorm_params=data["count_batchnorm_params"],
        )

    @classmethod
    def from_json(cls, text: str) -> "DenseNetConfig":
        return cls.from_dict(json.loads(text))


def densenet121_config(num_classes: int = 100, input_resolution: int = 32) -> DenseNetConfig:
    """The classic 4-stage [6, 12, 24, 16] / growth-32 baseline descriptor."""
    return DenseNetConfig.from_plan(
        64, [6, 12, 24, 16], [32, 32, 32, 32], [3, 3, 3, 3],
        num_classes=num_classes, input_resolution=input_resolution,
    )


def _as_sorted_tuple(values) -> tuple[int, ...]:
    return tuple(sorted(set(int(v) for v in values)))


@dataclass(frozen=True)
class SearchSpace:
    """Candidate sets and bounds for every mutable structural coordinate.

    ``layers_min`` / ``layers_max`` are per-stage inclusive ranges.  Kernel
    and stem choices are global; growth choices are global by default but may
    be narrowed per stage by the search-space pruning step, in which case
    ``stage_growth_choices`` carries the narrowed view.
    """

    num_stages: int
    kernel_choices: tuple[int, ...]
    growth_choices: tuple[int, ...]
    layers_min: tuple[int, ...]
    layers_max: tuple[int, ...]
    stem_choices: tuple[int, ...]
    depth_budget: int
    stage_growth_choices: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.num_stages < 1:
            raise ValueError("num_stages must be >= 1")
        object.__setattr__(self, "kernel_choices", _as_sorted_tuple(self.kernel_choices))
        object.__setattr__(self, "growth_choices", _as_sorted_tuple(self.growth_choices))
        object.__setattr__(self, "stem_choices", _as_sorted_tuple(self.stem_choices))
        object.__setattr__(self, "layers_min", tuple(int(v) for v in self.layers_min))
        object.__setattr__(self, "layers_max", tuple(int(v) for v in self.layers_max))
        for name in ("kernel_choices", "growth_choices", "stem_choices"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if any(k % 2 == 0 or k < 1 for k in self.kernel_choices):
            raise ValueError("kernel_choices must be odd positive integers")
        if any(v < 1 for v in self.growth_choices + self.stem_choices):
            raise ValueError("growth and stem choices must be positive")
        if len(self.layers_min) != self.num_stages or len(self.layers_max) != self.num_stages:
            raise ValueError("per-stage layer ranges must match num_stages")
        if any(lo < 1 or lo > hi for lo, hi in zip(self.layers_min, self.layers_max)):
            raise ValueError("layer ranges must satisfy 1 <= layers_min <= layers_max")
        if self.depth_budget < sum(self.layers_min):
            raise ValueError("depth_budget cannot be below the minimal total depth")
        if self.stage_growth_choices is not None:
            views = tuple(_as_sorted_tuple(v) for v in self.stage_growth_choices)
            if len(views) != self.num_stages or any(not v for v in views):
                raise ValueError("stage_growth_choices must be non-empty per stage")
            object.__setattr__(self, "stage_growth_choices", views)

    def growth_choices_for(self, stage: int) -> tuple[int, ...]:
        if self.stage_growth_choices is not None:
            return self.stage_growth_choices[stage]
        return self.growth_choices

    def layer_range_for(self, stage: int) -> tuple[int, int]:
        return self.layers_min[stage], self.layers_max[stage]

    def to_dict(self) -> dict:
        out = {
            "num_stages": self.num_stages,
            "kernel_choices": list(self.kernel_choices),
            "growth_choices": list(self.growth_choices),
            "layers_min": list(self.layers_min),
            "layers_max": list(self.layers_max),
            "stem_choices": list(self.stem_choices),
            "depth_budget": self.depth_budget,
        }
        if self.stage_growth_choices is not None:
            out["stage_growth_choices"] = [list(v) for v in self.stage_growth_choices]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SearchSpace":
        if not isinstance(data, dict):
            raise ValueError("search space must be a JSON object")
        known = {
            "num_stages", "kernel_choices", "growth_choices", "layers_min",
            "layers_max", "stem_choices", "depth_budget", "stage_growth_choices",
        }
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown key: {unknown[0]!r} (space)")
        required = known - {"stage_growth_choices"}
        missing = sorted(required - set(data))
        if missing:
            raise ValueError(f"missing key: {missing[0]!r} (space)")
        num_stages = data["num_stages"]
        lmin, lmax = data["layers_min"], data["layers_max"]
        if isinstance(lmin, int):
            lmin = [lmin] * num_stages
        if isinstance(lmax, int):
            lmax = [lmax] * num_stages
        raw_views = data.get("stage_growth_choices")
        views = tuple(tuple(v) for v in raw_views) if raw_views is not None else None
        return cls(
            num_stages=num_stages,
            kernel_choices=tuple(data["kernel_choices"]),
            growth_choices=tuple(data["growth_choices"]),
            layers_min=tuple(lmin),
            layers_max=tuple(lmax),
            stem_choices=tuple(data["stem_choices"]),
            depth_budget=data["depth_budget"],
            stage_growth_choices=views,
        )


def validate_config(config: DenseNetConfig, space: SearchSpace) -> list[str]:
    """Check a config against the space and its own structural invariants.

    Returns an empty list when the config is valid, otherwise one message per
    violated rule.  Violations are data, not failures.
    """
    violations: list[str] = []
    if config.num_stages != space.num_stages:
        violations.append(
            f"stage count {config.num_stages} does not match space ({space.num_stages})"
        )
        return violations
    if config.stem_width not in space.stem_choices:
        violations.append(f"stem width {config.stem_width} not in {set(space.stem_choices)}")
    for i, stage in enumerate(config.stages):
        if stage.kernel_size not in space.kernel_choices:
            violations.append(
                f"stage {i}: kernel {stage.kernel_size} not in {set(space.kernel_choices)}"
            )
        choices = space.growth_choices_for(i)
        if stage.growth_rate not in choices:
            violations.append(
                f"stage {i}: growth {stage.growth_rate} not in {set(choices)}"
            )
        lo, hi = space.layer_range_for(i)
        if not lo <= stage.num_layers <= hi:
            violations.append(
                f"stage {i}: layers {stage.num_layers} outside [{lo}, {hi}]"
            )
    if config.total_layers > space.depth_budget:
        violations.append(
            f"depth budget exceeded: {config.total_layers} > {space.depth_budget}"
        )
    first = config.stages[0]
    if first.in_width != config.stem_width:
        violations.append(
            f"stage 0: in_width {first.in_width} does not equal stem width {config.stem_width}"
        )
    if first.in_resolution != config.input_resolution:
        violations.append(
            f"stage 0: in_resolution {first.in_resolution} does not equal "
            f"input resolution {config.input_resolution}"
        )
    theta = config.transition_compression
    for i in range(1, config.num_stages):
        prev, cur = config.stages[i - 1], config.stages[i]
        want_w = math.floor(theta * prev.out_width)
        if cur.in_width != want_w:
            violations.append(
                f"stage {i}: in_width {cur.in_width} != floor(theta * out_width) = {want_w}"
            )
        want_r = prev.in_resolution // 2
        if cur.in_resolution != want_r:
            violations.append(
                f"stage {i}: in_resolution {cur.in_resolution} != {want_r}"
            )
        if cur.in_width < prev.in_width:
            violations.append(
                f"stage {i}: in_width {cur.in_width} decreases from {prev.in_width}"
            )
    return violations


@dataclass(frozen=True)
class ResourceEstimate:
    params: int
    flops: int

    def __post_init__(self) -> None:
        if self.params < 0 or self.flops < 0:
            raise ValueError("counts must be non-negative")


def estimate_resources(
    config: DenseNetConfig,
    *,
    include_stem: bool = True,
    include_classifier: bool = True,
) -> ResourceEstimate:
    """Exact parameter and FLOP counts under the documented convention.

    Convention: convolutions are bias-free; a dense-BC layer is a 1x1 conv to
    ``bottleneck_multiplier * K`` channels plus a k x k conv to K channels,
    each with a preceding batch-norm stage worth 2 params per channel (counted
    only when ``config.count_batchnorm_params``); a transition is a 1x1 conv
    to ``floor(theta * c)`` channels followed by 2x downsampling; the
    classifier is a global pool plus an affine map with bias.  FLOPs are
    2 x (params x output positions) per parameterized op, i.e. 2 x MACs for
    convolutions, with the classifier counted at the final feature resolution.
    """
    params = 0
    flops = 0

    def add(p: int, positions: int) -> None:
        nonlocal params, flops
        params += p
        flops += 2 * p * positions

    if include_stem:
        add(IMAGE_CHANNELS * config.stem_width * STEM_KERNEL ** 2,
            config.input_resolution ** 2)
    bn = config.count_batchnorm_params
    mult = config.bottleneck_multiplier
    theta = config.transition_compression
    for i, stage in enumerate(config.stages):
        positions = stage.in_resolution ** 2
        bottleneck = mult * stage.growth_rate
        k2 = stage.kernel_size ** 2
        for c in stage.layer_in_widths():
            if bn:
                add(2 * c, positions)
            add(c * bottleneck, positions)
            if bn:
                add(2 * bottleneck, positions)
            add(bottleneck * stage.growth_rate * k2, positions)
        if i < config.num_stages - 1:
            out = stage.out_width
            add(out * math.floor(theta * out), positions)
    if include_classifier:
        add(config.final_width * config.num_classes + config.num_classes,
            config.final_resolution ** 2)
    if params >= _COUNT_LIMIT or flops >= _COUNT_LIMIT:
        raise ResourceOverflowError(
            f"resource counts exceed representable range: params={params}, flops={flops}"
        )
    return ResourceEstimate(params=params, flops=flops)
