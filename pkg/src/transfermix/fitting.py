"""Two-stage estimation of the transfer-aware surrogate.

Stage 1 fits each target domain's (E, C, beta) by bounded nonlinear least
squares over budget-aggregated self-domain losses, multistarted over a grid
of initial exponents.  Stage 2 holds those parameters fixed and fits each
directed transfer coefficient independently as a one-dimensional bounded
minimization in log-space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .model import (
    BETA_HI,
    BETA_LO,
    DegenerateFitError,
    DomainCatalog,
    FitDiagnostics,
    FittedModel,
    InsufficientDataError,
    LossObservation,
    ScalingParams,
    TransferMatrix,
    diagnostics_key,
    require_valid_catalog,
)

DEFAULT_MULTISTART_BETAS = (0.1, 0.3, 0.5, 0.8, 1.2)


@dataclass(frozen=True)
class FitConfig:
    e_lower: float = 0.0
    c_lower: float = 1e-12
    beta_bounds: tuple[float, float] = (BETA_LO, BETA_HI)
    tau_bounds: tuple[float, float] = (1e-6, 1.0)
    max_iterations: int = 500
    gradient_tolerance: float = 1e-10
    step_tolerance: float = 1e-12
    multistart_betas: tuple[float, ...] = DEFAULT_MULTISTART_BETAS

    def __post_init__(self):
        if self.beta_bounds[0] >= self.beta_bounds[1]:
            raise ValueError("beta_bounds must be ordered")
        if self.tau_bounds[0] >= self.tau_bounds[1]:
            raise ValueError("tau_bounds must be ordered")
        if self.gradient_tolerance <= 0 or self.step_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def aggregate_by_budget(observations: list[LossObservation]) -> tuple[np.ndarray, np.ndarray]:
    """Mean loss over seeds at each distinct budget level.

    Each budget level contributes exactly one aggregated point regardless of
    how many seeds were run at it, so budget levels are weighted equally.
    Returns (budgets, mean_losses) sorted by budget.
    """
    groups: dict[float, list[float]] = {}
    for obs in observations:
        groups.setdefault(obs.budget, []).append(obs.loss)
    budgets = np.array(sorted(groups))
    losses = np.array([np.mean(sorted(groups[d])) for d in budgets])
    return budgets, losses


def fit_self(observations: list[LossObservation], config: FitConfig = FitConfig()) -> tuple[ScalingParams, FitDiagnostics]:
    """Fit (E, C, beta) to self-domain observations.

    Minimizes the mean squared residual of loss - E - C/d**beta over
    budget-aggregated points, best over all multistart initializations.
    """
    budgets, losses = aggregate_by_budget(observations)
    if budgets.size < 3:
        raise InsufficientDataError(
            f"self fit needs >= 3 distinct budget levels, got {budgets.size}"
        )
    if np.ptp(losses) == 0.0:
        raise DegenerateFitError("all aggregated losses identical; exponent unidentifiable")

    lo = np.array([config.e_lower, config.c_lower, config.beta_bounds[0]])
    hi = np.array([np.inf, np.inf, config.beta_bounds[1]])

    def residuals(theta):
        e, c, b = theta
        return losses - e - c * np.power(budgets, -b)

    e0 = max(config.e_lower, 0.9 * float(np.min(losses)))
    d_min = budgets[0]
    l_min = losses[0]

    best = None
    for b0 in config.multistart_betas:
        b0 = min(max(b0, config.beta_bounds[0]), config.beta_bounds[1])
        # anchor the initial curve to the smallest-budget aggregated point
        c0 = max((l_min - e0) * d_min**b0, config.c_lower)
        x0 = np.clip([e0, c0, b0], lo, hi)
        res = least_squares(
            residuals,
            x0,
            bounds=(lo, hi),
            method="trf",
            max_nfev=config.max_iterations * 10,
            gtol=config.gradient_tolerance,
            xtol=config.step_tolerance,
            ftol=None,
        )
        rss = float(np.sum(res.fun**2))
        if best is None or rss < best[0]:
            best = (rss, res)
    rss, res = best
    e, c, b = res.x
    params = ScalingParams(E=float(e), C=float(max(c, config.c_lower)), beta=float(b))
    diag = FitDiagnostics(rss=rss, converged=bool(res.status > 0))
    return params, diag


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section minimization of a unimodal scalar function on [lo, hi]."""
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    # keep exact bounds when the minimum sits on the boundary
    for edge in (lo, hi):
        if abs(x - edge) <= tol and f(edge) <= f(x):
            return edge
    return x


def fit_transfer(
    observations: list[LossObservation],
    target_params: ScalingParams,
    config: FitConfig = FitConfig(),
) -> tuple[float, FitDiagnostics]:
    """Fit one directed transfer coefficient with target params held fixed.

    Solves a bounded 1-D problem in log(tau): mean squared residual of
    loss - E - C/(tau*d)**beta over budget-aggregated points, refined to
    absolute tolerance 1e-8 in log-space.
    """
    if not observations:
        raise InsufficientDataError("transfer fit needs at least one observation")
    budgets, losses = aggregate_by_budget(observations)
    e, c, b = target_params.E, target_params.C, target_params.beta

    if np.all(losses <= e):
        # no reducible loss visible: transfer indistinguishable from self
        rss = float(np.sum((losses - e - c * np.power(budgets, -b)) ** 2) / budgets.size)
        return 1.0, FitDiagnostics(rss=rss, converged=True, flags=("saturated",))

    log_lo = math.log(config.tau_bounds[0])
    log_hi = math.log(config.tau_bounds[1])

    def mse(log_tau):
        tau = math.exp(log_tau)
        r = losses - e - c * np.power(tau * budgets, -b)
        return float(np.mean(r**2))

    x = _golden_section(mse, log_lo, log_hi, tol=1e-8)
    tau = min(math.exp(x), config.tau_bounds[1])
    flags = []
    if x >= log_hi - 1e-8:
        tau = config.tau_bounds[1]
        flags.append("upper-bound")
    elif x <= log_lo + 1e-8:
        tau = config.tau_bounds[0]
        flags.append("lower-bound")
    return tau, FitDiagnostics(rss=mse(math.log(tau)), converged=True, flags=tuple(flags))


def fit_all(
    observations: list[LossObservation],
    catalog: DomainCatalog,
    config: FitConfig = FitConfig(),
) -> FittedModel:
    """Fit all K self laws, then every available directed transfer
    coefficient independently.

    Missing (target, source) pairs fall back to the lower tau bound with a
    'missing-data' diagnostic.  A missing self-domain configuration is fatal
    because its parameters anchor every transfer fit in that row.
    """
    require_valid_catalog(catalog)
    k = catalog.size
    by_config: dict[tuple[int, int], list[LossObservation]] = {}
    for obs in observations:
        if obs.target >= k or obs.source >= k:
            raise ValueError(
                f"observation references domain index out of range: ({obs.target}, {obs.source})"
            )
        by_config.setdefault((obs.target, obs.source), []).append(obs)
    # observation order must not matter: sort within each configuration
    for group in by_config.values():
        group.sort(key=lambda o: (o.budget, o.seed, o.loss))

    diagnostics: dict[str, FitDiagnostics] = {}
    params: list[ScalingParams] = []
    for i in range(k):
        group = by_config.get((i, i))
        if not group:
            raise InsufficientDataError(
                f"missing self-domain observations for {catalog.names[i]!r}"
            )
        p, diag = fit_self(group, config)
        params.append(p)
        diagnostics[diagnostics_key(catalog, i, i)] = diag

    tau = np.eye(k)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            group = by_config.get((i, j))
            key = diagnostics_key(catalog, i, j)
            if not group:
                tau[i, j] = config.tau_bounds[0]
                diagnostics[key] = FitDiagnostics(
                    rss=float("nan"), converged=False, flags=("missing-data",)
                )
                continue
            tau[i, j], diagnostics[key] = fit_transfer(group, params[i], config)

    return FittedModel(
        catalog=catalog,
        params=tuple(params),
        tau=TransferMatrix(tau),
        fit_diagnostics=diagnostics,
    )
