"""Interpretive analyses over a fitted model: effective-budget
decomposition, hub/island domain roles, extrapolation validation,
budget/loss ratio correlation, floor sweeps, and strategy comparison."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    ConfigurationError,
    FittedModel,
    LossObservation,
    MixtureWeights,
    TargetWeights,
)
from .optimizer import AllocationResult, OptimizerConfig, heuristic_mixture, optimize_mixture
from .surrogate import TRANSFER_AWARE, TRANSFER_NAIVE, LawVariant, predict_all_losses


@dataclass(frozen=True)
class DecompositionTable:
    """Per-target rows of per-source effective-sample contributions."""

    domain_names: tuple[str, ...]
    contributions: np.ndarray  # K x K, contributions[i, j] = tau[i,j]*h[j]*T
    totals: np.ndarray  # row sums (effective budgets)
    amplification: np.ndarray  # totals / (h*T)


@dataclass(frozen=True)
class DomainRoles:
    domain_names: tuple[str, ...]
    tau_out: np.ndarray  # column means excluding the diagonal
    tau_in: np.ndarray  # row means excluding the diagonal
    roles: tuple[str, ...]


@dataclass(frozen=True)
class ExtrapolationReport:
    held_out_budget: float
    domain_names: tuple[str, ...]
    predicted: np.ndarray
    observed: np.ndarray
    relative_errors: np.ndarray
    mean_relative_error: float
    pearson_r: Optional[float]
    missing_domains: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class RatioCorrelation:
    domain_names: tuple[str, ...]
    budget_ratios: np.ndarray
    loss_ratios: np.ndarray
    pearson_r: Optional[float]
    excluded: tuple[str, ...] = ()
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class FloorSweepEntry:
    floor: float
    result: AllocationResult
    mean_predicted_loss: float


@dataclass(frozen=True)
class StrategyRow:
    strategy: str
    mixture: MixtureWeights
    per_target_losses: np.ndarray
    mean_loss: float


def pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    """Sample Pearson correlation; None when undefined (zero variance)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.sum(dx * dy) / (sx * sy))


def decompose(model: FittedModel, h: MixtureWeights, T: float) -> DecompositionTable:
    """K x K contribution matrix with row totals and amplification factors."""
    contributions = model.tau.tau * h.h * T
    totals = contributions.sum(axis=1)
    direct = h.h * T
    with np.errstate(divide="ignore"):
        amplification = np.where(direct > 0, totals / direct, np.inf)
    return DecompositionTable(
        domain_names=model.catalog.names,
        contributions=contributions,
        totals=totals,
        amplification=amplification,
    )


def classify_domains(
    model: FittedModel, island_max: float = 0.15, hub_min: float = 0.25
) -> DomainRoles:
    """Label each domain from the off-diagonal transfer means.

    Island: negligible transfer in both directions.  Hub: the (unique,
    lowest-index on ties) domain with maximal mean outgoing transfer above
    ``hub_min``.  Easy: scaling exponent in the lowest quartile.
    """
    tau = model.tau.tau
    k = model.size
    off = ~np.eye(k, dtype=bool)
    tau_out = np.array([tau[:, j][off[:, j]].mean() for j in range(k)])
    tau_in = np.array([tau[i][off[i]].mean() for i in range(k)])
    betas = model.exponents()
    beta_q1 = float(np.percentile(betas, 25))
    hub_idx = int(np.argmax(tau_out))
    roles = []
    for i in range(k):
        if max(tau_out[i], tau_in[i]) <= island_max:
            roles.append("Island")
        elif i == hub_idx and tau_out[i] >= hub_min:
            roles.append("Hub")
        elif betas[i] <= beta_q1:
            roles.append("Easy")
        else:
            roles.append("Unlabeled")
    return DomainRoles(
        domain_names=model.catalog.names,
        tau_out=tau_out,
        tau_in=tau_in,
        roles=tuple(roles),
    )


def extrapolate(
    model: FittedModel,
    held_out: list[LossObservation],
    h: MixtureWeights,
) -> ExtrapolationReport:
    """Predicted vs observed loss per domain at one held-out budget."""
    if not held_out:
        raise ValueError("held-out observation list is empty")
    budgets = {obs.budget for obs in held_out}
    if len(budgets) != 1:
        raise ValueError(f"held-out set must use a single budget, got {sorted(budgets)}")
    t_held = budgets.pop()
    k = model.size
    observed_groups: dict[int, list[float]] = {}
    for obs in held_out:
        observed_groups.setdefault(obs.target, []).append(obs.loss)

    predicted_all = predict_all_losses(model, h, t_held, TRANSFER_AWARE)
    present = sorted(observed_groups)
    missing = tuple(model.catalog.names[i] for i in range(k) if i not in observed_groups)
    predicted = np.array([predicted_all[i] for i in present])
    observed = np.array([np.mean(sorted(observed_groups[i])) for i in present])
    rel = np.abs(predicted - observed) / observed
    r = pearson(predicted, observed)
    flags = []
    if missing:
        flags.append("missing-domains")
    if r is None:
        flags.append("correlation-undefined")
    return ExtrapolationReport(
        held_out_budget=t_held,
        domain_names=tuple(model.catalog.names[i] for i in present),
        predicted=predicted,
        observed=observed,
        relative_errors=rel,
        mean_relative_error=float(rel.mean()),
        pearson_r=r,
        missing_domains=missing,
        flags=tuple(flags),
    )


def budget_loss_correlation(
    decomp_a: DecompositionTable,
    decomp_b: DecompositionTable,
    losses_a: np.ndarray,
    losses_b: np.ndarray,
) -> RatioCorrelation:
    """Correlate per-domain effective-budget ratios (A/B) with loss ratios
    (B/A) across the shared domains."""
    if decomp_a.domain_names != decomp_b.domain_names:
        raise ValueError("decompositions cover different domains")
    names = decomp_a.domain_names
    losses_a = np.asarray(losses_a, dtype=float)
    losses_b = np.asarray(losses_b, dtype=float)
    keep = (decomp_b.totals != 0) & (losses_a != 0)
    excluded = tuple(n for n, k_ in zip(names, keep) if not k_)
    budget_ratios = decomp_a.totals[keep] / decomp_b.totals[keep]
    loss_ratios = losses_b[keep] / losses_a[keep]
    r = pearson(budget_ratios, loss_ratios)
    flags = []
    if excluded:
        flags.append("excluded-domains")
    if r is None:
        flags.append("correlation-undefined")
    return RatioCorrelation(
        domain_names=tuple(n for n, k_ in zip(names, keep) if k_),
        budget_ratios=budget_ratios,
        loss_ratios=loss_ratios,
        pearson_r=r,
        excluded=excluded,
        flags=tuple(flags),
    )


def floor_sweep(
    model: FittedModel,
    T: float,
    w: TargetWeights,
    floors: Sequence[float],
    config: OptimizerConfig = OptimizerConfig(),
    variant: LawVariant = TRANSFER_AWARE,
) -> list[FloorSweepEntry]:
    """Re-optimize the mixture at each floor value; infeasible floors are
    rejected individually."""
    entries = []
    for eps in floors:
        if eps * model.size >= 1.0:
            raise ConfigurationError(f"infeasible floor {eps} for K={model.size}")
        cfg = OptimizerConfig(
            floor=eps,
            restarts=config.restarts,
            max_iterations=config.max_iterations,
            convergence_tolerance=config.convergence_tolerance,
            constraint_tolerance=config.constraint_tolerance,
            rng_seed=config.rng_seed,
        )
        result = optimize_mixture(model, T, w, cfg, variant)
        entries.append(
            FloorSweepEntry(
                floor=eps,
                result=result,
                mean_predicted_loss=float(result.per_target_losses.mean()),
            )
        )
    return entries


STRATEGIES = ("transfer-aware", "transfer-naive", "uniform", "data-proportional")


def compare_strategies(
    model: FittedModel,
    T: float,
    strategies: Sequence[str] = STRATEGIES,
    w: Optional[TargetWeights] = None,
    config: OptimizerConfig = OptimizerConfig(),
) -> list[StrategyRow]:
    """Evaluate the transfer-aware surrogate under each strategy's mixture.

    Optimized strategies (transfer-aware, transfer-naive) come from the
    mixture optimizer; the heuristics use uniform / volume-proportional
    weights.  All rows are scored with the transfer-aware law so that
    differences reflect allocation quality only.
    """
    w = w if w is not None else TargetWeights.equal(model.size)
    rows = []
    for strategy in strategies:
        if strategy == "transfer-aware":
            h = optimize_mixture(model, T, w, config, TRANSFER_AWARE).h_star
        elif strategy == "transfer-naive":
            h = optimize_mixture(model, T, w, config, TRANSFER_NAIVE).h_star
        elif strategy in ("uniform", "data-proportional"):
            h = heuristic_mixture(model.catalog, strategy, config.floor)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        losses = predict_all_losses(model, h, T, TRANSFER_AWARE)
        rows.append(
            StrategyRow(
                strategy=strategy,
                mixture=h,
                per_target_losses=losses,
                mean_loss=float(losses.mean()),
            )
        )
    return rows
