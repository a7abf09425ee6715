import pytest

from densesearch import DenseNetConfig, ObjectiveSpec, SearchSpace, densenet121_config, estimate_resources


@pytest.fixture
def baseline121() -> DenseNetConfig:
    return densenet121_config(num_classes=100, input_resolution=32)


@pytest.fixture
def cifar_space() -> SearchSpace:
    """CIFAR-scale space: kernels [3,5,7], growth choices up to 40, depth 130.

    Growth 32 is included so the classic baseline is a valid member.
    """
    return SearchSpace(
        num_stages=4,
        kernel_choices=(3, 5, 7),
        growth_choices=(12, 24, 32, 40),
        layers_min=(2, 2, 2, 2),
        layers_max=(40, 40, 40, 40),
        stem_choices=(16, 24, 32, 48, 64),
        depth_budget=130,
    )


@pytest.fixture
def tiny_space() -> SearchSpace:
    """Exhaustively enumerable space: 2 stages, tiny candidate sets."""
    return SearchSpace(
        num_stages=2,
        kernel_choices=(3,),
        growth_choices=(2, 4),
        layers_min=(2, 2),
        layers_max=(4, 4),
        stem_choices=(8,),
        depth_budget=8,
    )


@pytest.fixture
def generous_objective(baseline121) -> ObjectiveSpec:
    res = estimate_resources(baseline121)
    return ObjectiveSpec.default_for(
        4, flops_budget=res.flops * 10, params_budget=res.params * 10
    )
