"""Command line: verify an exported architecture or run a smoke train."""
from __future__ import annotations

import argparse
import sys

from .build import EngineNotFoundError, ShapeMismatchError, build_and_verify
from .model import SchemaError
from .train import DatasetMissingError, SmokeTrainError, smoke_train


def cmd_verify(args: argparse.Namespace) -> int:
    report = build_and_verify(args.architecture)
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    print(f"framework params: {report.framework_param_count}")
    print(f"estimator params: {report.estimator_param_count}")
    print(f"params_match: {report.params_match}  forward_ok: {report.forward_ok}")
    if report.per_layer_delta:
        for name, delta in report.per_layer_delta.items():
            print(f"  delta {name}: {delta:+d}")
    return 0 if report.params_match and report.forward_ok else 1


def cmd_smoke_train(args: argparse.Namespace) -> int:
    trace = smoke_train(args.architecture, args.dataset, args.steps,
                        data_dir=args.data_dir, batch_size=args.batch_size,
                        seed=args.seed)
    print(f"loss: {trace[0]:.4f} -> {trace[-1]:.4f} over {len(trace) - 1} steps")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dense-materializer",
        description="Rebuild exported architectures as real models and verify them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="build, forward, and reconcile parameter counts")
    p.add_argument("architecture", help="architecture JSON path")
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("smoke-train", help="run a short training sanity check")
    p.add_argument("architecture", help="architecture JSON path")
    p.add_argument("--dataset", default="cifar10",
                   choices=("cifar10", "cifar100", "svhn"))
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--data-dir", default=None, dest="data_dir")
    p.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_smoke_train)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ShapeMismatchError, EngineNotFoundError,
            DatasetMissingError, SmokeTrainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
