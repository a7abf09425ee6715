"""Build a model from an architecture JSON and verify it against the engine.

The engine is consumed strictly through its external interfaces: the
architecture JSON schema and the ``densesearch score --json`` command line,
which supplies the independent parameter count this module checks the real
model against.
"""
from __future__ import annotations

import json
import shutil
import subprocess
from dataclasses import dataclass, field

import torch

from .model import DenseBackbone, check_schema, expected_param_breakdown, framework_param_breakdown


class ShapeMismatchError(RuntimeError):
    """Raised when a stage's output diverges from the derived schedule."""


class EngineNotFoundError(RuntimeError):
    """Raised when the search engine CLI is not on PATH."""


@dataclass
class MaterializedReport:
    framework_param_count: int
    estimator_param_count: int
    per_stage_shapes: list[tuple[int, int, int]]
    forward_ok: bool
    params_match: bool
    per_layer_delta: dict[str, int] = field(default_factory=dict)
    loss_trace: list[float] | None = None

    def to_dict(self) -> dict:
        out = {
            "framework_params": self.framework_param_count,
            "estimator_params": self.estimator_param_count,
            "shapes": [list(s) for s in self.per_stage_shapes],
            "forward_ok": self.forward_ok,
            "params_match": self.params_match,
        }
        if self.per_layer_delta:
            out["per_layer_delta"] = dict(self.per_layer_delta)
        if self.loss_trace is not None:
            out["loss_trace"] = list(self.loss_trace)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def load_architecture(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return check_schema(json.load(fh))


def estimator_param_count(path: str) -> int:
    """Parameter count reported by the search engine CLI for this JSON."""
    exe = shutil.which("densesearch")
    if exe is None:
        raise EngineNotFoundError("densesearch CLI not found on PATH")
    proc = subprocess.run(
        [exe, "score", path, "--json"], capture_output=True, text=True
    )
    # Exit 1 means infeasible under the default objective; the report is still
    # printed and the count is valid.
    if proc.returncode not in (0, 1):
        raise RuntimeError(
            f"densesearch score failed (exit {proc.returncode}): {proc.stderr.strip()}"
        )
    return int(json.loads(proc.stdout)["params"])


def derived_schedule(arch: dict) -> list[tuple[int, int, int]]:
    """Expected (channels, height, width) of every stage output."""
    schedule = []
    for stage in arch["stages"]:
        out_width = stage["in_width"] + stage["num_layers"] * stage["growth_rate"]
        schedule.append((out_width, stage["in_resolution"], stage["in_resolution"]))
    return schedule


def build_and_verify(path: str, *, batch_size: int = 2, seed: int = 0) -> MaterializedReport:
    """Construct the network, run a forward pass, and reconcile the counts.

    The framework count must equal the engine's estimate exactly whenever the
    document's batch-norm counting flag is on (the real model always carries
    batch norm); otherwise the per-component deltas are listed.  A stage
    output that diverges from the derived width/resolution schedule raises
    ShapeMismatchError naming the stage.
    """
    arch = load_architecture(path)
    torch.manual_seed(seed)
    model = DenseBackbone(arch)
    model.eval()

    framework_params = sum(p.numel() for p in model.parameters() if p.requires_grad)
    estimator_params = estimator_param_count(path)

    resolution = arch["input_resolution"]
    batch = torch.randn(batch_size, 3, resolution, resolution)
    with torch.no_grad():
        logits, trace = model.forward_with_trace(batch)
    expected = derived_schedule(arch)
    for i, (got, want) in enumerate(zip(trace, expected)):
        if got != want:
            raise ShapeMismatchError(
                f"stage {i}: output {got} diverges from derived schedule {want}"
            )
    forward_ok = (
        logits.shape == (batch_size, arch["num_classes"])
        and bool(torch.isfinite(logits).all())
    )

    match = framework_params == estimator_params
    delta: dict[str, int] = {}
    if not match:
        want = expected_param_breakdown(arch)
        got = framework_param_breakdown(model)
        delta = {name: got[name] - want.get(name, 0)
                 for name in got if got[name] != want.get(name, 0)}
    return MaterializedReport(
        framework_param_count=framework_params,
        estimator_param_count=estimator_params,
        per_stage_shapes=trace,
        forward_ok=forward_ok,
        params_match=match,
        per_layer_delta=delta,
    )
