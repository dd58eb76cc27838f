"""Scikit-learn style facade over the two-stage fit and the surrogate.

``TransferScalingLaw`` wraps :func:`transfermix.fitting.fit_all` and the
closed-form law behind the familiar ``fit`` / ``predict`` / ``get_params``
estimator surface, so the model composes with sklearn tooling (cloning,
grid search over fit settings, pipelines that carry configuration).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .fitting import DEFAULT_MULTISTART_BETAS, FitConfig, fit_all
from .model import DomainCatalog, FittedModel, LossObservation, MixtureWeights, TargetWeights
from .optimizer import AllocationResult, OptimizerConfig, optimize_mixture
from .surrogate import TRANSFER_AWARE, LawVariant, predict_all_losses


class TransferScalingLaw(BaseEstimator):
    """Transfer-aware scaling-law estimator.

    Parameters mirror the fitting and optimizer configuration; ``fit``
    consumes proxy-run loss observations and a domain catalog, after which
    ``predict`` evaluates per-domain losses for arbitrary mixtures and
    budgets and ``optimal_mixture`` solves the allocation problem.
    """

    def __init__(
        self,
        beta_bounds: tuple[float, float] = (0.01, 2.0),
        tau_bounds: tuple[float, float] = (1e-6, 1.0),
        multistart_betas: Sequence[float] = DEFAULT_MULTISTART_BETAS,
        max_iterations: int = 500,
        floor: float = 0.05,
        restarts: int = 100,
        rng_seed: int = 0,
    ):
        self.beta_bounds = beta_bounds
        self.tau_bounds = tau_bounds
        self.multistart_betas = multistart_betas
        self.max_iterations = max_iterations
        self.floor = floor
        self.restarts = restarts
        self.rng_seed = rng_seed

    def _fit_config(self) -> FitConfig:
        return FitConfig(
            beta_bounds=tuple(self.beta_bounds),
            tau_bounds=tuple(self.tau_bounds),
            multistart_betas=tuple(self.multistart_betas),
            max_iterations=self.max_iterations,
        )

    def _optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            floor=self.floor, restarts=self.restarts, rng_seed=self.rng_seed
        )

    def fit(self, X: Sequence[LossObservation], y=None, *, catalog: DomainCatalog):
        """Fit self-domain laws and transfer coefficients from observations."""
        self.model_ = fit_all(list(X), catalog, self._fit_config())
        self.catalog_ = catalog
        return self

    def predict(
        self,
        h,
        T: float,
        variant: LawVariant = TRANSFER_AWARE,
    ) -> np.ndarray:
        """Per-domain predicted losses for mixture ``h`` at budget ``T``."""
        check_is_fitted(self, "model_")
        if not isinstance(h, MixtureWeights):
            h = MixtureWeights(np.asarray(h, dtype=float))
        return predict_all_losses(self.model_, h, T, variant)

    def optimal_mixture(
        self,
        T: float,
        w: Optional[TargetWeights] = None,
        variant: LawVariant = TRANSFER_AWARE,
    ) -> AllocationResult:
        """Solve for the loss-minimizing mixture at budget ``T``."""
        check_is_fitted(self, "model_")
        w = w if w is not None else TargetWeights.equal(self.model_.size)
        return optimize_mixture(self.model_, T, w, self._optimizer_config(), variant)

    @property
    def fitted_model(self) -> FittedModel:
        check_is_fitted(self, "model_")
        return self.model_
