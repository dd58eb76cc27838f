"""Closed-form loss law evaluation: effective budgets, per-target predicted
loss under each law variant, and the analytic gradient in the mixture."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (
    BETA_HI,
    BETA_LO,
    FittedModel,
    MixtureLawError,
    MixtureWeights,
    TargetWeights,
)


class ZeroBudgetError(MixtureLawError):
    """The evaluated law would divide by a zero effective budget."""


@dataclass(frozen=True)
class LawVariant:
    """Which special case of the mixture law to evaluate.

    ``aware`` uses the full transfer matrix; ``naive`` disables transfer
    (identity tau); ``shared`` additionally replaces every domain's exponent
    with one common beta.
    """

    kind: str
    beta_shared: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("aware", "naive", "shared"):
            raise ValueError(f"unknown law variant {self.kind!r}")
        if self.kind == "shared":
            if self.beta_shared is None or not (BETA_LO <= self.beta_shared <= BETA_HI):
                raise ValueError("shared variant needs beta_shared in [0.01, 2.0]")

    @classmethod
    def aware(cls) -> "LawVariant":
        return cls("aware")

    @classmethod
    def naive(cls) -> "LawVariant":
        return cls("naive")

    @classmethod
    def shared(cls, beta: float) -> "LawVariant":
        return cls("shared", beta_shared=beta)


TRANSFER_AWARE = LawVariant.aware()
TRANSFER_NAIVE = LawVariant.naive()


def _pow(base: np.ndarray | float, exponent: np.ndarray | float):
    """exp(b * ln(x)) on strictly positive arguments."""
    base = np.asarray(base, dtype=float)
    if np.any(base <= 0):
        raise ZeroBudgetError("power law evaluated at nonpositive budget")
    return np.exp(np.asarray(exponent, dtype=float) * np.log(base))


def effective_budget(model: FittedModel, h: MixtureWeights, T: float, target: int) -> float:
    """Transfer-discounted budget reaching the target: sum_j tau[i,j]*h[j]*T."""
    if T <= 0:
        raise ValueError(f"budget must be positive, got {T}")
    contributions = model.tau.tau[target] * h.h * T
    return float(contributions.sum())


def _effective_budgets(model: FittedModel, h: np.ndarray, T: float, variant: LawVariant) -> np.ndarray:
    if variant.kind == "naive":
        return h * T
    # same elementwise path as effective_budget / decompose row sums
    return (model.tau.tau * h * T).sum(axis=1)


def predict_loss(
    model: FittedModel,
    h: MixtureWeights,
    T: float,
    target: int,
    variant: LawVariant = TRANSFER_AWARE,
) -> float:
    """Predicted loss for one target under the given law variant."""
    if T <= 0:
        raise ValueError(f"budget must be positive, got {T}")
    p = model.params[target]
    if variant.kind == "naive":
        teff = h.h[target] * T
        if teff <= 0:
            raise ZeroBudgetError(
                f"transfer-naive law undefined: h[{target}] = {h.h[target]} allocates no budget"
            )
    else:
        teff = effective_budget(model, h, T, target)
    beta = p.beta if variant.kind != "shared" else variant.beta_shared
    return p.E + p.C / float(_pow(teff, beta))


def losses_raw(
    model: FittedModel, h: np.ndarray, T: float, variant: LawVariant = TRANSFER_AWARE
) -> np.ndarray:
    """Per-target predicted losses for a raw (unvalidated) weight vector."""
    teff = _effective_budgets(model, h, T, variant)
    if variant.kind == "naive" and np.any(teff <= 0):
        bad = int(np.argmin(teff))
        raise ZeroBudgetError(
            f"transfer-naive law undefined: h[{bad}] = {h[bad]} allocates no budget"
        )
    beta = model.exponents() if variant.kind != "shared" else np.full(model.size, variant.beta_shared)
    return model.floors() + model.coefficients() / _pow(teff, beta)


def predict_all_losses(
    model: FittedModel, h: MixtureWeights, T: float, variant: LawVariant = TRANSFER_AWARE
) -> np.ndarray:
    """Vector of predicted losses, one per target domain."""
    return losses_raw(model, h.h, T, variant)


def predict_gradient(
    model: FittedModel,
    h: MixtureWeights,
    T: float,
    target: int,
    variant: LawVariant = TRANSFER_AWARE,
) -> np.ndarray:
    """d(predicted loss)/dh for one target: -beta*C*tau[i,j]*T / T_eff**(beta+1)."""
    p = model.params[target]
    beta = p.beta if variant.kind != "shared" else variant.beta_shared
    if variant.kind == "naive":
        teff = h.h[target] * T
        if teff <= 0:
            raise ZeroBudgetError("transfer-naive gradient undefined at zero allocation")
        grad = np.zeros(model.size)
        grad[target] = -beta * p.C * T / float(_pow(teff, beta + 1.0))
        return grad
    teff = effective_budget(model, h, T, target)
    if teff <= 0:
        raise ZeroBudgetError("effective budget must be positive")
    return -beta * p.C * model.tau.tau[target] * T / float(_pow(teff, beta + 1.0))


def objective_raw(
    model: FittedModel,
    h: np.ndarray,
    T: float,
    w: TargetWeights,
    variant: LawVariant = TRANSFER_AWARE,
) -> tuple[float, np.ndarray]:
    """Weighted objective and gradient for a raw weight vector."""
    losses = losses_raw(model, h, T, variant)
    value = float(w.w @ losses)
    teff = _effective_budgets(model, h, T, variant)
    beta = model.exponents() if variant.kind != "shared" else np.full(model.size, variant.beta_shared)
    scale = w.w * beta * model.coefficients() / _pow(teff, beta + 1.0)
    if variant.kind == "naive":
        grad = -scale * T
    else:
        grad = -(scale @ (model.tau.tau * T))
    return value, grad


def objective_hessian_raw(
    model: FittedModel,
    h: np.ndarray,
    T: float,
    w: TargetWeights,
    variant: LawVariant = TRANSFER_AWARE,
) -> np.ndarray:
    """K x K Hessian of the weighted objective in h (positive semidefinite)."""
    teff = _effective_budgets(model, h, T, variant)
    beta = model.exponents() if variant.kind != "shared" else np.full(model.size, variant.beta_shared)
    coeff = w.w * beta * (beta + 1.0) * model.coefficients() / _pow(teff, beta + 2.0)
    if variant.kind == "naive":
        return np.diag(coeff * T * T)
    rows = model.tau.tau * T
    return (rows.T * coeff) @ rows


def objective(
    model: FittedModel,
    h: MixtureWeights,
    T: float,
    w: TargetWeights,
    variant: LawVariant = TRANSFER_AWARE,
) -> tuple[float, np.ndarray]:
    """Weighted sum of predicted losses across targets, with its gradient."""
    return objective_raw(model, h.h, T, w, variant)
