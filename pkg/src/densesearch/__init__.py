"""Training-free structural search for dense convolutional networks.

Scores architectures by a closed-form structural entropy bound, constrains
the entropy distribution across stages with a power law, and searches the
discrete design space under effectiveness, FLOPs, and parameter budgets.
"""

from .arch import (
    DenseNetConfig,
    ResourceEstimate,
    ResourceOverflowError,
    SearchSpace,
    StageConfig,
    densenet121_config,
    estimate_resources,
    validate_config,
)
from .entropy import (
    EntropyDomainError,
    StageEntropy,
    average_width,
    effectiveness,
    entropy_profile,
    mlp_entropy_bound,
    stage_entropies,
    stage_entropy,
)
from .optimizer import (
    Candidate,
    FeasibilityResult,
    InfeasibleSeedError,
    ObjectiveSpec,
    SearchParams,
    SearchTrajectory,
    feasible,
    mutate,
    objective,
    prune_space,
    score_candidate,
    search,
)
from .powerlaw import (
    DegenerateFitError,
    FamilyFit,
    FitDiagnostics,
    PowerFit,
    fit_compare,
    fit_power,
    ideal_entropy_targets,
    log_domain_r_square,
)

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "DegenerateFitError",
    "DenseNetConfig",
    "EntropyDomainError",
    "FamilyFit",
    "FeasibilityResult",
    "FitDiagnostics",
    "InfeasibleSeedError",
    "ObjectiveSpec",
    "PowerFit",
    "ResourceEstimate",
    "ResourceOverflowError",
    "SearchParams",
    "SearchSpace",
    "SearchTrajectory",
    "StageConfig",
    "StageEntropy",
    "average_width",
    "densenet121_config",
    "effectiveness",
    "entropy_profile",
    "estimate_resources",
    "feasible",
    "fit_compare",
    "fit_power",
    "ideal_entropy_targets",
    "log_domain_r_square",
    "mlp_entropy_bound",
    "mutate",
    "objective",
    "prune_space",
    "score_candidate",
    "search",
    "stage_entropies",
    "stage_entropy",
    "validate_config",
]
