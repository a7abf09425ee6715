"""Command-line surface: search runs, config scoring, and fit reports.

Exit codes: 0 success, 1 infeasible architecture (score), 2 parse or schema
failure, 3 infeasible initial structure (search), 4 too few rows for a fit
comparison.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import dataclass, field

from .arch import DenseNetConfig, SearchSpace, estimate_resources, validate_config
from .entropy import entropy_profile, read_entropy_values, write_entropy_report
from .optimizer import (
    InfeasibleSeedError,
    ObjectiveSpec,
    SearchParams,
    feasible,
    objective,
    search,
    write_trajectory,
)
from .powerlaw import (
    DegenerateFitError,
    FamilyFit,
    fit_compare,
    fit_power,
    write_fit_report,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_PARSE = 2
EXIT_BAD_SEED = 3
EXIT_TOO_FEW_ROWS = 4

_HUGE_BUDGET = 2 ** 62


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunManifest:
    """Resolved invocation: inputs are checked to exist before any work runs."""

    command: str
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    seed_override: int | None = None
    verbose: bool = False
    force: bool = False

    def check_inputs(self) -> None:
        for path in self.inputs:
            if not os.path.isfile(path):
                raise CliError(f"input file not found: {path}", EXIT_PARSE)

    def check_outputs(self) -> None:
        for path in self.outputs:
            if os.path.exists(path) and not self.force:
                raise CliError(
                    f"refusing to overwrite {path} (use --force)", EXIT_PARSE
                )


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {what} {path}: {exc}", EXIT_PARSE)
    except json.JSONDecodeError as exc:
        raise CliError(
            f"{what} {path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            EXIT_PARSE,
        )


def _load_architecture(path: str) -> DenseNetConfig:
    data = _load_json(path, "architecture")
    try:
        return DenseNetConfig.from_dict(data)
    except (ValueError, TypeError) as exc:
        raise CliError(f"architecture {path}: {exc}", EXIT_PARSE)


def _parse_run_config(data: dict) -> tuple[SearchSpace, ObjectiveSpec, SearchParams,
                                           DenseNetConfig]:
    if not isinstance(data, dict):
        raise ValueError("run config must be a JSON object")
    known = {"space", "objective", "search", "initial"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown key: {unknown[0]!r}")
    missing = sorted({"space", "objective", "search"} - set(data))
    if missing:
        raise ValueError(f"missing key: {missing[0]!r}")
    space = SearchSpace.from_dict(data["space"])
    spec = ObjectiveSpec.from_dict(data["objective"])
    if len(spec.alphas) != space.num_stages:
        raise ValueError(
            f"alphas length {len(spec.alphas)} does not match num_stages {space.num_stages}"
        )
    params = SearchParams.from_dict(data["search"])
    if "initial" in data:
        initial = DenseNetConfig.from_dict(data["initial"])
    else:
        initial = _default_initial(space)
    return space, spec, params, initial


def _default_initial(space: SearchSpace) -> DenseNetConfig:
    """Deterministic small valid member of the space, scanned low to high.

    Minimal layer counts with minimal growth can violate the non-decreasing
    width rule under strong compression, so growth and depth are raised
    stepwise until the chain validates.
    """
    for g_idx in range(len(space.growth_choices)):
        for extra in range(max(space.layers_max) + 1):
            layers = [min(space.layers_min[i] + extra, space.layers_max[i])
                      for i in range(space.num_stages)]
            growths = []
            for i in range(space.num_stages):
                choices = space.growth_choices_for(i)
                growths.append(choices[min(g_idx, len(choices) - 1)])
            candidate = DenseNetConfig.from_plan(
                space.stem_choices[0], layers, growths,
                [space.kernel_choices[0]] * space.num_stages,
            )
            if not validate_config(candidate, space):
                return candidate
    raise ValueError("no valid default initial structure; supply an 'initial' entry")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _fit_report_text(profile: list[float]) -> str:
    """Four-family report when possible, power-only otherwise."""
    buf = io.StringIO()
    if len(profile) >= 4:
        write_fit_report(buf, fit_compare(profile))
    elif len(profile) >= 2:
        fit = fit_power(profile)
        write_fit_report(buf, [FamilyFit("power", (fit.a, fit.b), fit.diagnostics)])
    else:
        buf.write(",".join(
            ("family", "a_or_coeffs", "sse", "r_square", "adjusted_r_square", "rmse")
        ) + "\n")
    return buf.getvalue()


def cmd_search(args: argparse.Namespace) -> int:
    manifest = RunManifest(
        command="search", inputs=[args.config],
        seed_override=args.seed, verbose=args.verbose, force=args.force,
    )
    manifest.check_inputs()
    data = _load_json(args.config, "run config")
    try:
        space, spec, params, initial = _parse_run_config(data)
    except (ValueError, TypeError) as exc:
        raise CliError(f"run config {args.config}: {exc}", EXIT_PARSE)
    if args.seed is not None:
        params = SearchParams.from_dict({**params.to_dict(), "seed": args.seed})
    if args.log_stride is not None:
        params = SearchParams.from_dict({**params.to_dict(), "log_stride": args.log_stride})

    os.makedirs(args.out, exist_ok=True)
    paths = {name: os.path.join(args.out, name) for name in (
        "best_architecture.json", "trajectory.csv", "entropy_report.csv", "fit_report.csv",
    )}
    manifest.outputs = list(paths.values())
    manifest.check_outputs()

    try:
        trajectory = search(space, spec, params, initial)
    except InfeasibleSeedError as exc:
        raise CliError(str(exc), EXIT_BAD_SEED)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_BAD_SEED)

    best = trajectory.final_best
    _write_text(paths["best_architecture.json"], best.config.to_json())
    buf = io.StringIO()
    write_trajectory(buf, trajectory)
    _write_text(paths["trajectory.csv"], buf.getvalue())
    buf = io.StringIO()
    write_entropy_report(buf, best.config)
    _write_text(paths["entropy_report.csv"], buf.getvalue())
    _write_text(paths["fit_report.csv"], _fit_report_text(list(best.entropy_profile)))

    resources = estimate_resources(best.config)
    print(f"final objective: {best.objective_value!r}")
    print(f"params: {resources.params}  flops: {resources.flops}")
    print(f"evaluations: {trajectory.evaluations}  prunes: {trajectory.prunes_applied}  "
          f"wall_time_s: {trajectory.wall_time:.2f}")
    if args.verbose:
        print(f"accepted candidates: {len(trajectory.accepted)}", file=sys.stderr)
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    manifest = RunManifest(
        command="score",
        inputs=[args.architecture] + ([args.objective] if args.objective else []),
    )
    manifest.check_inputs()
    config = _load_architecture(args.architecture)
    if args.objective:
        raw = _load_json(args.objective, "objective")
        try:
            spec = ObjectiveSpec.from_dict(raw)
        except (ValueError, TypeError) as exc:
            raise CliError(f"objective {args.objective}: {exc}", EXIT_PARSE)
    else:
        spec = ObjectiveSpec.default_for(
            config.num_stages, flops_budget=_HUGE_BUDGET, params_budget=_HUGE_BUDGET
        )
    try:
        result = objective(config, spec)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE)
    verdict = feasible(config, spec)
    resources = estimate_resources(config)
    report = {
        "objective_value": result.value,
        "stage_entropies": list(result.stage_values),
        "entropy_profile": entropy_profile(config),
        "power_fit": None if result.fit is None else {
            "a": result.fit.a, "b": result.fit.b, "s_score": result.fit.s_score,
        },
        "params": resources.params,
        "flops": resources.flops,
        "feasible": verdict.ok,
        "violations": list(verdict.violations),
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"objective value: {result.value!r}")
        for i, h in enumerate(result.stage_values):
            print(f"stage {i}: H = {h!r}")
        if result.fit is not None:
            print(f"power fit: a = {result.fit.a!r}  b = {result.fit.b!r}  "
                  f"S = {result.fit.s_score!r}")
        print(f"params: {resources.params}  flops: {resources.flops}")
        print(f"feasible: {'yes' if verdict.ok else 'no'}")
        for violation in verdict.violations:
            print(f"  violation: {violation}")
    return EXIT_OK if verdict.ok else EXIT_INFEASIBLE


def cmd_fit_report(args: argparse.Namespace) -> int:
    manifest = RunManifest(command="fit-report", inputs=[args.architecture],
                           force=args.force)
    manifest.check_inputs()
    config = _load_architecture(args.architecture)
    os.makedirs(args.out, exist_ok=True)
    entropy_path = os.path.join(args.out, "entropy_report.csv")
    fit_path = os.path.join(args.out, "fit_report.csv")
    manifest.outputs = [entropy_path, fit_path]
    manifest.check_outputs()
    buf = io.StringIO()
    write_entropy_report(buf, config)
    _write_text(entropy_path, buf.getvalue())
    profile = entropy_profile(config)
    _write_text(fit_path, _fit_report_text(profile))
    if len(profile) >= 2:
        fit = fit_power(profile)
        print(f"power fit: a = {fit.a!r}  b = {fit.b!r}  S = {fit.s_score!r}")
    print(f"wrote {entropy_path} and {fit_path}")
    return EXIT_OK


def cmd_compare_fits(args: argparse.Namespace) -> int:
    manifest = RunManifest(command="compare-fits", inputs=[args.entropy_csv],
                           force=args.force)
    manifest.check_inputs()
    try:
        with open(args.entropy_csv, "r", encoding="utf-8") as fh:
            values = read_entropy_values(fh, column=args.column)
    except (ValueError, OSError) as exc:
        raise CliError(f"entropy CSV {args.entropy_csv}: {exc}", EXIT_PARSE)
    if len(values) < 4:
        raise CliError(
            f"need at least 4 stage rows for a fit comparison, got {len(values)}",
            EXIT_TOO_FEW_ROWS,
        )
    try:
        ranked = fit_compare(values)
    except DegenerateFitError as exc:
        raise CliError(str(exc), EXIT_PARSE)
    if args.out:
        manifest.outputs = [args.out]
        manifest.check_outputs()
        buf = io.StringIO()
        write_fit_report(buf, ranked)
        _write_text(args.out, buf.getvalue())
    for rank, fit in enumerate(ranked, start=1):
        print(f"{rank}. {fit.family}: rmse = {fit.diagnostics.rmse!r}  "
              f"r_square = {fit.diagnostics.r_square!r}")
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    manifest = RunManifest(command="export", inputs=[args.architecture], force=args.force)
    manifest.check_inputs()
    config = _load_architecture(args.architecture)
    text = config.to_json()
    if args.out:
        manifest.outputs = [args.out]
        manifest.check_outputs()
        _write_text(args.out, text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densesearch",
        description="Training-free structural search for dense convolutional networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run a structural search from a config file")
    p.add_argument("--config", required=True, help="run config JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="scoring workers; results are identical for any count")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.add_argument("--log-stride", type=int, default=None, dest="log_stride",
                   help="record the trajectory every N iterations")
    p.add_argument("--verbose", "-v", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("score", help="score one architecture against an objective")
    p.add_argument("architecture", help="architecture JSON path")
    p.add_argument("objective", nargs="?", default=None, help="objective JSON path")
    p.add_argument("--json", action="store_true", help="emit a JSON report")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("fit-report", help="write entropy and fit reports for an architecture")
    p.add_argument("architecture", help="architecture JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_fit_report)

    p = sub.add_parser("compare-fits", help="rank fit families over an entropy report CSV")
    p.add_argument("entropy_csv", help="entropy report CSV path")
    p.add_argument("--column", default=None, help="value column to fit")
    p.add_argument("--out", default=None, help="write the fit report CSV here")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_compare_fits)

    p = sub.add_parser("export", help="validate and canonically re-emit an architecture")
    p.add_argument("architecture", help="architecture JSON path")
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
