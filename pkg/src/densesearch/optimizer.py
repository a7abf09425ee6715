"""Objective assembly, feasibility checks, and the structural search loop.

The search is an elitist steady-state loop: mutate a uniformly chosen parent,
keep the child if feasible, evict the worst member when the population
overflows, and periodically shrink the per-stage search ranges toward the
entropy profile an ideal power-law network would exhibit.  All randomness
flows from one seeded generator, so runs are reproducible bit for bit.
"""
from __future__ import annotations

import csv
import random
import time
from dataclasses import dataclass
from typing import NamedTuple, Sequence, TextIO

from .arch import DenseNetConfig, SearchSpace, estimate_resources, validate_config
from .entropy import StageEntropy, stage_entropies, stage_entropy
from .powerlaw import PowerFit, fit_power, ideal_entropy_targets

TRAJECTORY_COLUMNS = ("iteration", "best_objective", "population_size", "prunes_applied")

DEFAULT_PRUNE_TOLERANCE = 0.25
_MUTATE_RESAMPLES = 32


class InfeasibleSeedError(RuntimeError):
    """Raised when the initial structure violates the feasibility constraints."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """Weights and budgets of the scoring problem."""

    alphas: tuple[float, ...]
    flops_budget: int
    params_budget: int
    beta: float = 0.1
    rho_max: float = 20.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not self.alphas or any(a < 0 for a in self.alphas):
            raise ValueError("alphas must be non-empty and non-negative")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if not 0 < self.rho_max <= 100:
            raise ValueError("rho_max must lie in (0, 100]")
        if self.flops_budget <= 0 or self.params_budget <= 0:
            raise ValueError("budgets must be positive")

    @classmethod
    def default_for(cls, num_stages: int, *, flops_budget: int, params_budget: int,
                    beta: float = 0.1, rho_max: float = 20.0) -> "ObjectiveSpec":
        return cls(alphas=(1.0,) * num_stages, flops_budget=flops_budget,
                   params_budget=params_budget, beta=beta, rho_max=rho_max)

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "beta": self.beta,
            "rho_max": self.rho_max,
            "flops_budget": self.flops_budget,
            "params_budget": self.params_budget,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ObjectiveSpec":
        if not isinstance(data, dict):
            raise ValueError("objective must be a JSON object")
        known = {"alphas", "beta", "rho_max", "flops_budget", "params_budget"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown key: {unknown[0]!r} (objective)")
        missing = sorted({"alphas", "flops_budget", "params_budget"} - set(data))
        if missing:
            raise ValueError(f"missing key: {missing[0]!r} (objective)")
        return cls(
            alphas=tuple(data["alphas"]),
            flops_budget=data["flops_budget"],
            params_budget=data["params_budget"],
            beta=data.get("beta", 0.1),
            rho_max=data.get("rho_max", 20.0),
        )


class ObjectiveResult(NamedTuple):
    value: float
    stage_values: tuple[float, ...]
    fit: PowerFit | None


def entropy_profile_from_values(stage_values: Sequence[float]) -> list[float]:
    """Running totals, the fit input shared by scoring and pruning."""
    profile = []
    total = 0.0
    for v in stage_values:
        total += v
        profile.append(total)
    return profile


def objective(config: DenseNetConfig, spec: ObjectiveSpec) -> ObjectiveResult:
    """Weighted entropy sum plus the beta-scaled power-law score.

    The power fit runs over the network's cumulative entropy profile at stage
    indices 1..M.  With fewer than two stages no fit exists and the score
    term is dropped.
    """
    if len(spec.alphas) != config.num_stages:
        raise ValueError(
            f"alphas length {len(spec.alphas)} does not match stage count {config.num_stages}"
        )
    stage_values = tuple(r.value for r in stage_entropies(config))
    weighted = sum(a * h for a, h in zip(spec.alphas, stage_values))
    if config.num_stages < 2:
        return ObjectiveResult(value=weighted, stage_values=stage_values, fit=None)
    fit = fit_power(entropy_profile_from_values(stage_values))
    return ObjectiveResult(value=weighted + spec.beta * fit.s_score,
                           stage_values=stage_values, fit=fit)


class FeasibilityResult(NamedTuple):
    ok: bool
    violations: tuple[str, ...]


def feasible(config: DenseNetConfig, spec: ObjectiveSpec) -> FeasibilityResult:
    """All four scoring constraints, reported together."""
    violations: list[str] = []
    for i, stage in enumerate(config.stages):
        rho = stage.num_layers / stage.in_width
        if rho > spec.rho_max:
            violations.append(f"stage {i}: effectiveness {rho:g} > {spec.rho_max:g}")
    resources = estimate_resources(config)
    if resources.flops > spec.flops_budget:
        violations.append(f"flops {resources.flops} > budget {spec.flops_budget}")
    if resources.params > spec.params_budget:
        violations.append(f"params {resources.params} > budget {spec.params_budget}")
    widths = [s.in_width for s in config.stages]
    for i in range(1, len(widths)):
        if widths[i] < widths[i - 1]:
            violations.append(
                f"stage {i}: in_width {widths[i]} decreases from {widths[i - 1]}"
            )
    return FeasibilityResult(ok=not violations, violations=tuple(violations))


@dataclass(frozen=True)
class Candidate:
    config: DenseNetConfig
    objective_value: float
    entropy_report: tuple[StageEntropy, ...]
    power_fit: PowerFit | None
    feasible: bool

    @property
    def entropy_profile(self) -> tuple[float, ...]:
        return tuple(entropy_profile_from_values([r.value for r in self.entropy_report]))


def score_candidate(config: DenseNetConfig, spec: ObjectiveSpec) -> Candidate:
    """Pure scoring: objective, per-stage entropies, and feasibility verdict."""
    result = objective(config, spec)
    verdict = feasible(config, spec)
    return Candidate(
        config=config,
        objective_value=result.value,
        entropy_report=tuple(stage_entropies(config)),
        power_fit=result.fit,
        feasible=verdict.ok,
    )


@dataclass(frozen=True)
class SearchParams:
    """Knobs of the search loop; the seed fixes the whole trajectory."""

    population_size: int = 256
    iterations: int = 10000
    prune_period: int = 1000
    seed: int = 0
    population_cap: int | None = None
    log_stride: int = 1
    prune_tolerance: float = DEFAULT_PRUNE_TOLERANCE

    def __post_init__(self) -> None:
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.prune_period < 1:
            raise ValueError("prune_period must be >= 1")
        if self.iterations > 0 and self.prune_period > self.iterations:
            raise ValueError("prune_period must not exceed iterations")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.population_cap is not None and self.population_cap < 1:
            raise ValueError("population_cap must be >= 1")
        if self.log_stride < 1:
            raise ValueError("log_stride must be >= 1")
        if not 0 < self.prune_tolerance <= 1:
            raise ValueError("prune_tolerance must lie in (0, 1]")

    @property
    def effective_cap(self) -> int:
        return self.population_cap if self.population_cap is not None else self.population_size

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "iterations": self.iterations,
            "prune_period": self.prune_period,
            "population_cap": self.effective_cap,
            "seed": self.seed,
            "log_stride": self.log_stride,
            "prune_tolerance": self.prune_tolerance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SearchParams":
        if not isinstance(data, dict):
            raise ValueError("search params must be a JSON object")
        known = {"population_size", "iterations", "prune_period", "population_cap",
                 "seed", "log_stride", "prune_tolerance"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown key: {unknown[0]!r} (search)")
        return cls(
            population_size=data.get("population_size", 256),
            iterations=data.get("iterations", 10000),
            prune_period=data.get("prune_period", 1000),
            seed=data.get("seed", 0),
            population_cap=data.get("population_cap"),
            log_stride=data.get("log_stride", 1),
            prune_tolerance=data.get("prune_tolerance", DEFAULT_PRUNE_TOLERANCE),
        )


@dataclass(frozen=True)
class SearchTrajectory:
    best_per_iteration: tuple[float, ...]
    final_best: Candidate
    evaluations: int
    wall_time: float
    accepted: tuple[Candidate, ...]
    log_rows: tuple[tuple[int, float, int, int], ...]
    prunes_applied: int


def _rebuild_plan(config: DenseNetConfig, stem: int, layers: list[int],
                  growths: list[int], kernels: list[int]) -> DenseNetConfig:
    return DenseNetConfig.from_plan(
        stem, layers, growths, kernels,
        transition_compression=config.transition_compression,
        input_resolution=config.input_resolution,
        num_classes=config.num_classes,
        bottleneck_multiplier=config.bottleneck_multiplier,
        count_batchnorm_params=config.count_batchnorm_params,
    )


def _adjacent(choices: Sequence[int], current: int, step: int) -> int | None:
    if current not in choices:
        return None
    i = choices.index(current) + step
    if 0 <= i < len(choices):
        return choices[i]
    return None


def mutate(config: DenseNetConfig, space: SearchSpace, rng: random.Random,
           stage: int | None = None) -> DenseNetConfig:
    """Perturb one structural coordinate and re-derive the downstream chain.

    Coordinates are per-stage layer count (+/-1 within range), growth rate and
    kernel size (adjacent candidate), and the stem width (adjacent candidate).
    Invalid children are resampled up to a fixed cap, after which the input is
    returned unchanged.  Restricting to ``stage`` limits the draw to that
    stage's coordinates.
    """
    if stage is None:
        coordinates = [(kind, s) for s in range(config.num_stages)
                       for kind in ("layers", "growth", "kernel")]
        coordinates.append(("stem", -1))
    else:
        coordinates = [(kind, stage) for kind in ("layers", "growth", "kernel")]
    for _ in range(_MUTATE_RESAMPLES):
        kind, s = coordinates[rng.randrange(len(coordinates))]
        step = rng.choice((-1, 1))
        stem = config.stem_width
        layers = [st.num_layers for st in config.stages]
        growths = [st.growth_rate for st in config.stages]
        kernels = [st.kernel_size for st in config.stages]
        if kind == "stem":
            new = _adjacent(space.stem_choices, stem, step)
            if new is None:
                continue
            stem = new
        elif kind == "layers":
            lo, hi = space.layer_range_for(s)
            new = layers[s] + step
            if not lo <= new <= hi:
                continue
            layers[s] = new
        elif kind == "growth":
            new = _adjacent(space.growth_choices_for(s), growths[s], step)
            if new is None:
                continue
            growths[s] = new
        else:
            new = _adjacent(space.kernel_choices, kernels[s], step)
            if new is None:
                continue
            kernels[s] = new
        child = _rebuild_plan(config, stem, layers, growths, kernels)
        if not validate_config(child, space):
            return child
    return config


def _relative_deviation(value: float, target: float) -> float:
    """Symmetric relative gap in [0, 1]; a tolerance of 1.0 can never trip."""
    denom = max(abs(value), abs(target))
    if denom == 0.0:
        return 0.0
    return abs(value - target) / denom


def most_deviant_stage(profile: Sequence[float], targets: Sequence[float]) -> int:
    """Index of the stage whose profile entry strays furthest from its target."""
    deviations = [_relative_deviation(v, t) for v, t in zip(profile, targets)]
    return max(range(len(deviations)), key=lambda i: deviations[i])


def _stage_entropy_bound(best: Candidate, stage_idx: int, num_layers: int,
                         growth: int, kernel: int) -> float:
    """Optimistic network entropy through ``stage_idx`` with the stage rebuilt."""
    stage = best.config.stages[stage_idx]
    probe = stage_entropy(
        type(stage)(
            num_layers=num_layers,
            growth_rate=growth,
            kernel_size=kernel,
            in_width=stage.in_width,
            in_resolution=stage.in_resolution,
        )
    )
    prefix = best.entropy_profile[stage_idx] - best.entropy_report[stage_idx].value
    return prefix + probe.value


def prune_space(space: SearchSpace, best: Candidate, targets: Sequence[float],
                tolerance: float) -> SearchSpace:
    """Shrink the most-deviant stage's layer/growth ranges toward its target.

    A boundary candidate is dropped when even its best-achievable entropy
    (all other local coordinates at their maximum) misses the stage target by
    more than ``tolerance`` relative deviation.  The incumbent's own values
    are never dropped and no range is ever emptied.
    """
    if space.num_stages < 2:
        return space
    if len(targets) != space.num_stages:
        raise ValueError("targets length must match num_stages")
    if not 0 < tolerance <= 1:
        raise ValueError("tolerance must lie in (0, 1]")
    profile = best.entropy_profile
    s = most_deviant_stage(profile, targets)
    target = targets[s]
    stage = best.config.stages[s]
    lo, hi = space.layer_range_for(s)
    growths = list(space.growth_choices_for(s))
    kmax = space.kernel_choices[-1]

    def off_target(num_layers: int, growth: int) -> bool:
        bound = _stage_entropy_bound(best, s, num_layers, growth, kmax)
        return _relative_deviation(bound, target) > tolerance

    if hi > lo and stage.num_layers != hi and off_target(hi, growths[-1]):
        hi -= 1
    if hi > lo and stage.num_layers != lo and off_target(lo, growths[-1]):
        lo += 1
    if len(growths) > 1 and stage.growth_rate != growths[-1] and off_target(hi, growths[-1]):
        growths.pop()
    if len(growths) > 1 and stage.growth_rate != growths[0] and off_target(hi, growths[0]):
        growths.pop(0)

    views = list(space.stage_growth_choices
                 or (space.growth_choices,) * space.num_stages)
    views[s] = tuple(growths)
    layers_min = list(space.layers_min)
    layers_max = list(space.layers_max)
    layers_min[s], layers_max[s] = lo, hi
    return SearchSpace(
        num_stages=space.num_stages,
        kernel_choices=space.kernel_choices,
        growth_choices=space.growth_choices,
        layers_min=tuple(layers_min),
        layers_max=tuple(layers_max),
        stem_choices=space.stem_choices,
        depth_budget=space.depth_budget,
        stage_growth_choices=tuple(views),
    )


def search(space: SearchSpace, spec: ObjectiveSpec, params: SearchParams,
           initial: DenseNetConfig) -> SearchTrajectory:
    """Run the elitist steady-state search from a feasible initial structure.

    Every ``prune_period`` iterations the incumbent's entropy profile is fit
    with the power law, ideal per-stage targets are derived, the search space
    is pruned around the most-deviant stage, and the following half period
    mutates only that stage's coordinates (the per-stage refinement burst).
    """
    problems = validate_config(initial, space)
    if problems:
        raise ValueError(f"initial structure invalid in space: {problems[0]}")
    verdict = feasible(initial, spec)
    if not verdict.ok:
        raise InfeasibleSeedError(
            "initial structure infeasible: " + "; ".join(verdict.violations)
        )
    started = time.perf_counter()
    rng = random.Random(params.seed)
    cap = params.effective_cap
    current_space = space
    best = score_candidate(initial, spec)
    population: list[Candidate] = [best]
    accepted: list[Candidate] = [best]
    best_log: list[float] = []
    log_rows: list[tuple[int, float, int, int]] = []
    evaluations = 0
    prunes = 0
    focus_stage: int | None = None
    focus_until = 0

    for t in range(1, params.iterations + 1):
        parent = population[rng.randrange(len(population))]
        restrict = focus_stage if t <= focus_until else None
        child_config = mutate(parent.config, current_space, rng, stage=restrict)
        child = score_candidate(child_config, spec)
        evaluations += 1
        if child.feasible:
            population.append(child)
            accepted.append(child)
            if child.objective_value > best.objective_value:
                best = child
            if len(population) > cap:
                worst = min(
                    (c for c in population if c is not best),
                    key=lambda c: c.objective_value,
                )
                population.remove(worst)
        if t % params.prune_period == 0 and space.num_stages >= 2:
            fit = fit_power(best.entropy_profile)
            targets = ideal_entropy_targets(fit, space.num_stages)
            focus_stage = most_deviant_stage(best.entropy_profile, targets)
            focus_until = t + params.prune_period // 2
            current_space = prune_space(current_space, best, targets, params.prune_tolerance)
            prunes += 1
        if t % params.log_stride == 0:
            best_log.append(best.objective_value)
            log_rows.append((t, best.objective_value, len(population), prunes))

    return SearchTrajectory(
        best_per_iteration=tuple(best_log),
        final_best=best,
        evaluations=evaluations,
        wall_time=time.perf_counter() - started,
        accepted=tuple(accepted),
        log_rows=tuple(log_rows),
        prunes_applied=prunes,
    )


def write_trajectory(stream: TextIO, trajectory: SearchTrajectory) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    for iteration, best_objective, pop, prunes in trajectory.log_rows:
        writer.writerow([iteration, repr(best_objective), pop, prunes])
