"""Transfer-aware scaling laws and data-mixture allocation."""

__version__ = "0.1.0"

from .model import (
    DomainCatalog,
    FitDiagnostics,
    FittedModel,
    LossObservation,
    MixtureWeights,
    ScalingParams,
    TargetWeights,
    TransferMatrix,
    validate_catalog,
)
from .fitting import FitConfig, fit_all, fit_self, fit_transfer
from .surrogate import (
    TRANSFER_AWARE,
    TRANSFER_NAIVE,
    LawVariant,
    effective_budget,
    objective,
    predict_all_losses,
    predict_gradient,
    predict_loss,
)
from .optimizer import (
    AllocationResult,
    OptimizerConfig,
    heuristic_mixture,
    optimize_mixture,
    optimize_over_budgets,
)
from .analysis import (
    budget_loss_correlation,
    classify_domains,
    compare_strategies,
    decompose,
    extrapolate,
    floor_sweep,
)
from .synth import (
    GroundTruthWorld,
    NoiseModel,
    ParameterRanges,
    generate_world,
    sample_observations,
)
from .estimator import TransferScalingLaw

__all__ = [
    "DomainCatalog",
    "FitDiagnostics",
    "FittedModel",
    "LossObservation",
    "MixtureWeights",
    "ScalingParams",
    "TargetWeights",
    "TransferMatrix",
    "validate_catalog",
    "FitConfig",
    "fit_all",
    "fit_self",
    "fit_transfer",
    "LawVariant",
    "TRANSFER_AWARE",
    "TRANSFER_NAIVE",
    "effective_budget",
    "predict_loss",
    "predict_all_losses",
    "predict_gradient",
    "objective",
    "AllocationResult",
    "OptimizerConfig",
    "heuristic_mixture",
    "optimize_mixture",
    "optimize_over_budgets",
    "decompose",
    "classify_domains",
    "extrapolate",
    "budget_loss_correlation",
    "floor_sweep",
    "compare_strategies",
    "GroundTruthWorld",
    "NoiseModel",
    "ParameterRanges",
    "generate_world",
    "sample_observations",
    "TransferScalingLaw",
]
