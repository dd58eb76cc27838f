"""Ground-truth world generator and noisy observation sampler.

This module is the independent oracle for recovery and end-to-end tests:
observations are produced directly from known parameters, so any fitting or
optimization result can be checked against the generating truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import (
    BETA_HI,
    BETA_LO,
    DomainCatalog,
    FittedModel,
    LossObservation,
    MixtureWeights,
    ScalingParams,
    TransferMatrix,
)

LOSS_CLAMP = 1e-9


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative (loss * (1 + eta)) or additive (loss + eta) Gaussian
    perturbation.  Multiplicative is the default because losses span orders
    of magnitude across domains."""

    kind: str = "multiplicative"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("multiplicative", "additive"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def apply(self, loss: float, rng: np.random.Generator) -> float:
        if self.sigma == 0.0:
            return max(loss, LOSS_CLAMP)
        eta = rng.normal(0.0, self.sigma)
        out = loss * (1.0 + eta) if self.kind == "multiplicative" else loss + eta
        return float(max(out, LOSS_CLAMP))


@dataclass(frozen=True)
class ParameterRanges:
    e_range: tuple[float, float] = (0.002, 0.02)
    # reducible loss at the low anchor budget; C is back-computed from it
    reducible_range: tuple[float, float] = (0.05, 0.5)
    anchor_budget: float = 10_000.0
    beta_range: tuple[float, float] = (0.2, 0.8)
    tau_range: tuple[float, float] = (0.05, 0.9)

    def __post_init__(self):
        for name, (lo, hi) in (
            ("e_range", self.e_range),
            ("reducible_range", self.reducible_range),
            ("beta_range", self.beta_range),
            ("tau_range", self.tau_range),
        ):
            if lo > hi:
                raise ValueError(f"{name} is not ordered: {(lo, hi)}")
        if not (BETA_LO <= self.beta_range[0] and self.beta_range[1] <= BETA_HI):
            raise ValueError(f"beta_range must lie within [{BETA_LO}, {BETA_HI}]")
        if not (0.0 <= self.tau_range[0] and self.tau_range[1] <= 1.0):
            raise ValueError("tau_range must lie within [0, 1]")
        if self.e_range[0] < 0 or self.reducible_range[0] <= 0:
            raise ValueError("loss ranges must be positive")


@dataclass(frozen=True)
class GroundTruthWorld:
    catalog: DomainCatalog
    params: tuple[ScalingParams, ...]
    tau: TransferMatrix
    noise: NoiseModel = field(default_factory=NoiseModel)
    rng_seed: int = 0

    def as_model(self) -> FittedModel:
        """The true world viewed as a (perfectly) fitted model."""
        return FittedModel(catalog=self.catalog, params=self.params, tau=self.tau)

    def true_loss(self, target: int, source: int, budget: float) -> float:
        p = self.params[target]
        teff = self.tau.tau[target, source] * budget
        return float(p.E + p.C / teff**p.beta)

    def mixture_loss(self, target: int, h: MixtureWeights, budget: float) -> float:
        p = self.params[target]
        teff = float((self.tau.tau[target] * h.h * budget).sum())
        return p.E + p.C / teff**p.beta


# default hub/island tau bands; chosen so role classification on the true
# matrix labels exactly one hub and one island at the default thresholds
_HUB_OUT = (0.4, 0.7)
_ISLAND_CAP = (0.01, 0.06)
_BASELINE = (0.12, 0.35)


def generate_world(
    k: int,
    ranges: ParameterRanges = ParameterRanges(),
    structure: str = "random",
    rng_seed: int = 0,
    noise: NoiseModel = NoiseModel(),
    names: Optional[list[str]] = None,
) -> GroundTruthWorld:
    """Sample a ground-truth world with K domains.

    ``random`` samples every parameter uniformly in its range; ``hub_island``
    additionally designates one high-outgoing-transfer hub and one
    low-transfer island.
    """
    if k < 2:
        raise ValueError("worlds need at least 2 domains")
    if structure not in ("random", "hub_island"):
        raise ValueError(f"unknown structure {structure!r}")
    rng = np.random.default_rng([rng_seed, 2024])
    params = []
    for _ in range(k):
        e = rng.uniform(*ranges.e_range)
        beta = rng.uniform(*ranges.beta_range)
        reducible = rng.uniform(*ranges.reducible_range)
        c = reducible * ranges.anchor_budget**beta
        params.append(ScalingParams(E=float(e), C=float(c), beta=float(beta)))

    tau = np.eye(k)
    off = ~np.eye(k, dtype=bool)
    if structure == "random":
        tau[off] = rng.uniform(ranges.tau_range[0], ranges.tau_range[1], size=k * (k - 1))
    else:
        tau[off] = rng.uniform(_BASELINE[0], _BASELINE[1], size=k * (k - 1))
        hub, island = rng.choice(k, size=2, replace=False)
        for i in range(k):
            if i != hub:
                tau[i, hub] = rng.uniform(*_HUB_OUT)
        for j in range(k):
            if j != island:
                tau[island, j] = rng.uniform(*_ISLAND_CAP)
                tau[j, island] = rng.uniform(*_ISLAND_CAP)

    catalog = DomainCatalog(
        names if names is not None else [f"D{i:02d}" for i in range(k)],
        volume_counts=list(rng.integers(100, 1000, size=k)),
    )
    return GroundTruthWorld(
        catalog=catalog,
        params=tuple(params),
        tau=TransferMatrix(tau),
        noise=noise,
        rng_seed=rng_seed,
    )


def sample_observations(
    world: GroundTruthWorld,
    budgets: list[float],
    seeds_per_budget: int = 1,
    configurations: str = "all_pairs",
) -> list[LossObservation]:
    """Emit noisy pure-configuration observations from the true law.

    Each (target, source) configuration uses its own derived RNG stream, so
    the output is independent of sampling order.
    """
    if seeds_per_budget < 1:
        raise ValueError("seeds_per_budget must be >= 1")
    if any(d <= 0 for d in budgets):
        raise ValueError("budgets must be positive")
    if configurations not in ("self_only", "all_pairs"):
        raise ValueError(f"unknown configurations {configurations!r}")
    k = world.catalog.size
    out: list[LossObservation] = []
    for i in range(k):
        for j in range(k):
            if configurations == "self_only" and i != j:
                continue
            rng = np.random.default_rng([world.rng_seed, 7, i, j])
            for d in budgets:
                for e in range(seeds_per_budget):
                    loss = world.noise.apply(world.true_loss(i, j, d), rng)
                    out.append(LossObservation(target=i, source=j, budget=float(d), seed=e, loss=loss))
    return out


def sample_mixture_observations(
    world: GroundTruthWorld,
    h: MixtureWeights,
    budgets: list[float],
    seeds_per_budget: int = 1,
) -> list[LossObservation]:
    """Emit noisy per-target observations from mixture training runs.

    Mixture runs have no single source domain; rows carry target == source
    by convention (consumers only read target, budget, loss).
    """
    if seeds_per_budget < 1:
        raise ValueError("seeds_per_budget must be >= 1")
    out: list[LossObservation] = []
    for i in range(world.catalog.size):
        rng = np.random.default_rng([world.rng_seed, 11, i])
        for d in budgets:
            for e in range(seeds_per_budget):
                loss = world.noise.apply(world.mixture_loss(i, h, d), rng)
                out.append(LossObservation(target=i, source=i, budget=float(d), seed=e, loss=loss))
    return out
