"""Constrained mixture optimization over the floored simplex, plus the
heuristic baseline mixtures (uniform and data-proportional).

The weighted surrogate is minimized with SLSQP (equality constraint
sum(h) = 1, per-component bounds h_j >= floor) from many independent
Dirichlet-sampled starting points.  The reduction over restarts is
deterministic given the seed: strictly better objectives win, ties within
1e-12 keep the lowest restart index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .model import (
    ConfigurationError,
    DomainCatalog,
    FittedModel,
    MixtureWeights,
    TargetWeights,
    require_valid_catalog,
)
from .surrogate import (
    TRANSFER_AWARE,
    LawVariant,
    objective_hessian_raw,
    objective_raw,
    predict_all_losses,
)


@dataclass(frozen=True)
class OptimizerConfig:
    floor: float = 0.05
    restarts: int = 100
    max_iterations: int = 1000
    convergence_tolerance: float = 1e-12
    constraint_tolerance: float = 1e-9
    rng_seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.floor < 0:
            raise ValueError("floor must be nonnegative")


@dataclass(frozen=True)
class RestartStatistics:
    best: float
    median: float
    worst: float


@dataclass(frozen=True)
class AllocationResult:
    h_star: MixtureWeights
    objective_value: float
    per_target_losses: np.ndarray
    active_floor_set: tuple[int, ...]
    restart_statistics: RestartStatistics
    stationary: bool
    projected_gradient_norm: float
    iteration_capped: bool = False


def _kkt_residual(grad: np.ndarray, h: np.ndarray, floor: float, tol: float) -> float:
    """Inf-norm KKT residual on the floored simplex.

    Free components must share a common multiplier; components at the floor
    may only have a larger (less negative) gradient.
    """
    active = h <= floor + tol
    free = ~active
    if free.any():
        lam = float(np.mean(grad[free]))
    else:
        lam = float(np.max(grad))
    r_free = float(np.max(np.abs(grad[free] - lam))) if free.any() else 0.0
    r_active = float(np.max(np.maximum(lam - grad[active], 0.0))) if active.any() else 0.0
    return max(r_free, r_active)


def _clean_point(x: np.ndarray, floor: float) -> np.ndarray:
    """Snap solver output back onto the floored simplex (1e-9 scale fixes)."""
    k = x.size
    x = np.maximum(x, floor)
    excess = x - floor
    total = excess.sum()
    if total <= 0:
        return np.full(k, 1.0 / k)
    return floor + excess * (1.0 - k * floor) / total


def _polish(
    model: FittedModel,
    x: np.ndarray,
    T: float,
    w: TargetWeights,
    variant: LawVariant,
    eps: float,
    tol: float = 1e-9,
    max_rounds: int = 50,
) -> np.ndarray:
    """Active-set Newton refinement of an SLSQP solution.

    SLSQP stops on objective decrease, which can leave the stationarity
    residual around 1e-7; a few equality-constrained Newton steps on the
    free coordinates (the objective is smooth and convex) push it to
    solver-independent precision.
    """
    x = x.copy()
    k = x.size
    boundary = eps + 1e-12
    for _ in range(max_rounds):
        value, grad = objective_raw(model, x, T, w, variant)
        free = x > boundary
        # floored coordinates whose gradient undercuts the shared multiplier
        # want to leave the floor
        lam = float(np.mean(grad[free])) if free.any() else float(np.max(grad))
        free |= (~free) & (grad < lam - tol)
        if _kkt_residual(grad, x, eps, 1e-12) <= tol:
            break
        n = int(free.sum())
        if n == 0:
            break
        hess = objective_hessian_raw(model, x, T, w, variant)
        kkt = np.zeros((n + 1, n + 1))
        kkt[:n, :n] = hess[np.ix_(free, free)]
        kkt[:n, n] = 1.0
        kkt[n, :n] = 1.0
        rhs = np.concatenate([-grad[free], [0.0]])
        try:
            step = np.linalg.solve(kkt, rhs)[:n]
        except np.linalg.LinAlgError:
            break
        dx = np.zeros(k)
        dx[free] = step
        if not np.all(np.isfinite(dx)) or np.abs(dx).max() < 1e-16:
            break
        # largest feasible step before a free coordinate hits the floor
        shrinking = dx < 0
        alpha = 1.0
        if shrinking.any():
            alpha = min(1.0, float(np.min((x[shrinking] - eps) / -dx[shrinking])))
        for _ in range(40):
            candidate = np.maximum(x + alpha * dx, eps)
            new_value, _ = objective_raw(model, candidate, T, w, variant)
            if new_value <= value + 1e-15:
                break
            alpha *= 0.5
        else:
            break
        x = candidate
    return x


def optimize_mixture(
    model: FittedModel,
    T: float,
    w: TargetWeights,
    config: OptimizerConfig = OptimizerConfig(),
    variant: LawVariant = TRANSFER_AWARE,
) -> AllocationResult:
    """Best feasible mixture over all restarts for one budget."""
    k = model.size
    eps = config.floor
    if eps * k >= 1.0:
        raise ConfigurationError(f"infeasible floor: {eps} * {k} >= 1")
    if T <= 0:
        raise ValueError(f"budget must be positive, got {T}")

    eval_floor = max(eps, 1e-12)

    def fun(x):
        return objective_raw(model, np.clip(x, eval_floor, 1.0), T, w, variant)

    bounds = [(eps, 1.0)] * k
    constraints = [{"type": "eq", "fun": lambda x: x.sum() - 1.0, "jac": lambda x: np.ones(k)}]

    best_x = None
    best_val = np.inf
    best_capped = False
    finals = []
    for r in range(config.restarts):
        # nested per-restart seeds: the first n starts are identical for any
        # total restart count, making best-over-restarts monotone in restarts
        rng = np.random.default_rng([config.rng_seed, r])
        s = rng.dirichlet(np.ones(k))
        x0 = eps + (1.0 - k * eps) * s
        with warnings.catch_warnings():
            # line-search iterates may stray outside the bounds; fun() clips,
            # so scipy's bound-clipping warning is expected and harmless
            warnings.filterwarnings(
                "ignore", message="Values in x were outside bounds", category=RuntimeWarning
            )
            res = minimize(
                fun,
                x0,
                jac=True,
                method="SLSQP",
                bounds=bounds,
                constraints=constraints,
                options={"maxiter": config.max_iterations, "ftol": config.convergence_tolerance},
            )
        x = _clean_point(res.x, eps)
        val, _ = fun(x)
        finals.append(val)
        if val < best_val - 1e-12:
            best_val = val
            best_x = x
            best_capped = res.status == 9 or res.nit >= config.max_iterations

    best_x = _polish(model, best_x, T, w, variant, eps)
    h_star = MixtureWeights(best_x, eps)
    value, grad = objective_raw(model, best_x, T, w, variant)
    pg = _kkt_residual(grad, best_x, eps, config.constraint_tolerance)
    stats = RestartStatistics(
        best=float(np.min(finals)), median=float(np.median(finals)), worst=float(np.max(finals))
    )
    active = tuple(int(j) for j in range(k) if best_x[j] <= eps + config.constraint_tolerance)
    return AllocationResult(
        h_star=h_star,
        objective_value=value,
        per_target_losses=predict_all_losses(model, h_star, T, variant),
        active_floor_set=active,
        restart_statistics=stats,
        stationary=pg <= 1e-7,
        projected_gradient_norm=pg,
        iteration_capped=best_capped,
    )


def project_to_floored_simplex(h: np.ndarray, floor: float) -> np.ndarray:
    """Raise below-floor entries to the floor, taking the deficit
    proportionally from the above-floor mass (iterated until stable)."""
    k = h.size
    if floor * k >= 1.0:
        raise ConfigurationError(f"infeasible floor: {floor} * {k} >= 1")
    h = np.asarray(h, dtype=float)
    total = h.sum()
    if total <= 0:
        raise ValueError("mixture mass must be positive")
    h = h / total
    fixed = np.zeros(k, dtype=bool)
    for _ in range(k):
        below = (h < floor) & ~fixed
        if not below.any():
            break
        fixed |= below
        h[fixed] = floor
        free = ~fixed
        remaining = 1.0 - floor * fixed.sum()
        h[free] = h[free] * remaining / h[free].sum()
    return h


def heuristic_mixture(
    catalog: DomainCatalog, strategy: str, floor: float = 0.0
) -> MixtureWeights:
    """Uniform or data-proportional baseline mixture.

    Returned as-is when already feasible at the requested floor, otherwise
    projected onto the floored simplex.
    """
    require_valid_catalog(catalog)
    k = catalog.size
    if strategy == "uniform":
        h = np.full(k, 1.0 / k)
    elif strategy == "data-proportional":
        if catalog.volume_counts is None:
            raise ConfigurationError("data-proportional mixture requires volume counts")
        counts = np.array(catalog.volume_counts, dtype=float)
        h = counts / counts.sum()
    else:
        raise ValueError(f"unknown heuristic strategy {strategy!r}")
    if np.any(h < floor):
        h = project_to_floored_simplex(h, floor)
    return MixtureWeights(h, floor)


def optimize_over_budgets(
    model: FittedModel,
    budgets: list[float],
    w: TargetWeights,
    config: OptimizerConfig = OptimizerConfig(),
    variant: LawVariant = TRANSFER_AWARE,
) -> list[AllocationResult]:
    """One allocation per budget; deterministic given the config seed."""
    if not budgets:
        raise ValueError("budgets must be nonempty")
    if any(t <= 0 for t in budgets):
        raise ValueError("all budgets must be positive")
    return [optimize_mixture(model, t, w, config, variant) for t in budgets]
