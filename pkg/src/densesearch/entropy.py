"""Structural information entropy of dense stages and related width metrics.

The entropy of a stage is a closed-form upper bound computed from widths,
kernel sizes, layer count, and feature resolution alone; no activations or
weights are involved.  All logarithms are natural, so values are in nats.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

from .arch import DenseNetConfig, StageConfig

ENTROPY_REPORT_COLUMNS = (
    "stage_index", "num_layers", "in_width", "growth_rate", "kernel",
    "entropy_nats", "effectiveness", "cumulative_entropy_nats",
)


class EntropyDomainError(ValueError):
    """Raised when entropy inputs leave the formula's domain."""


def mlp_entropy_bound(widths: Sequence[int]) -> float:
    """Entropy upper bound of a plain L-layer perceptron stack.

    Computed as ``w_L * (L * log(w_0) + logGamma(L + 1))``, the log-domain
    form of ``w_L * log(w_0^L * L!)``; ``w_0`` and ``w_L`` are the first and
    last widths.
    """
    if not widths:
        raise EntropyDomainError("widths must be non-empty")
    if any(w <= 0 for w in widths):
        raise EntropyDomainError("widths must be positive")
    L = len(widths)
    return widths[-1] * (L * math.log(widths[0]) + math.lgamma(L + 1))


@dataclass(frozen=True)
class StageEntropy:
    """Entropy of one dense stage plus its trainability metrics.

    ``cumulative_sequence[j - 1]`` is the entropy of the stage truncated
    after layer j; ``value`` equals the final entry.  ``effectiveness`` is
    the depth-to-width ratio L / w_0 and ``average_width`` the w_0 + K/2
    approximation of the stage's mean concatenated width.
    """

    value: float
    cumulative_sequence: tuple[float, ...]
    effectiveness: float
    average_width: float


def stage_entropy(stage: StageConfig) -> StageEntropy:
    """Entropy of a dense stage with per-layer truncations.

    The j-th truncation is ``log(r^2 * c_{j+1}) * (sum_{i<=j} log(c_i k^2)
    + logGamma(j + 1))`` where ``c_i`` is the concatenated width entering
    layer i and r the stage resolution.
    """
    k2 = stage.kernel_size ** 2
    r2 = stage.in_resolution ** 2
    inner = 0.0
    sequence = []
    for j in range(1, stage.num_layers + 1):
        c_j = stage.in_width + (j - 1) * stage.growth_rate
        width_term = c_j * k2
        if width_term < 1:
            raise EntropyDomainError(f"layer {j}: projected width {width_term} below 1")
        inner += math.log(width_term)
        c_next = stage.in_width + j * stage.growth_rate
        sequence.append(math.log(r2 * c_next) * (inner + math.lgamma(j + 1)))
    return StageEntropy(
        value=sequence[-1],
        cumulative_sequence=tuple(sequence),
        effectiveness=stage.num_layers / stage.in_width,
        average_width=stage.in_width + stage.growth_rate / 2,
    )


def effectiveness(stage: StageConfig) -> float:
    """Depth-to-width ratio L / w_0 gating trainability."""
    return stage.num_layers / stage.in_width


def average_width(widths: Sequence[int]) -> float:
    """Geometric mean of a width list."""
    if not widths:
        raise EntropyDomainError("widths must be non-empty")
    if any(w <= 0 for w in widths):
        raise EntropyDomainError("widths must be positive")
    return math.exp(sum(math.log(w) for w in widths) / len(widths))


def stage_entropies(config: DenseNetConfig) -> list[StageEntropy]:
    return [stage_entropy(s) for s in config.stages]


def entropy_profile(config: DenseNetConfig) -> list[float]:
    """Network entropy distribution across stages: running totals of stage values.

    Entry i is the entropy of the network truncated after stage i (stages are
    independent subsystems, so truncation entropy is the sum of completed
    stage entropies).  This increasing sequence is what the power-law fit and
    the search-space scaling consume.
    """
    profile = []
    total = 0.0
    for report in stage_entropies(config):
        total += report.value
        profile.append(total)
    return profile


def entropy_report_rows(config: DenseNetConfig) -> list[dict]:
    """One report row per stage, matching ENTROPY_REPORT_COLUMNS."""
    rows = []
    total = 0.0
    for i, (stage, report) in enumerate(zip(config.stages, stage_entropies(config))):
        total += report.value
        rows.append({
            "stage_index": i,
            "num_layers": stage.num_layers,
            "in_width": stage.in_width,
            "growth_rate": stage.growth_rate,
            "kernel": stage.kernel_size,
            "entropy_nats": repr(report.value),
            "effectiveness": repr(report.effectiveness),
            "cumulative_entropy_nats": repr(total),
        })
    return rows


def write_entropy_report(stream: TextIO, config: DenseNetConfig) -> None:
    writer = csv.DictWriter(stream, fieldnames=ENTROPY_REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(entropy_report_rows(config))


def read_entropy_values(stream: Iterable[str], column: str | None = None) -> list[float]:
    """Extract fit input values from an entropy report CSV.

    Defaults to the cumulative column when present, else ``entropy_nats``.
    Raises ValueError on malformed input.
    """
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise ValueError("empty CSV")
    if column is None:
        column = ("cumulative_entropy_nats"
                  if "cumulative_entropy_nats" in reader.fieldnames else "entropy_nats")
    if column not in reader.fieldnames:
        raise ValueError(f"missing column {column!r}")
    values = []
    for row in reader:
        cell = row.get(column)
        if cell is None or cell == "":
            raise ValueError(f"missing value in column {column!r}")
        values.append(float(cell))
    return values
