"""Core domain types shared by every other module.

All types are immutable after construction (frozen dataclasses; ndarray
fields are marked read-only), so they can be shared freely across workers.
The domain order fixed by the catalog is the single source of truth for all
vector/matrix indexing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

SIMPLEX_ATOL = 1e-9


class MixtureLawError(Exception):
    """Base class for errors raised by this package."""


class InsufficientDataError(MixtureLawError):
    """Not enough observations to identify the requested parameters."""


class DegenerateFitError(MixtureLawError):
    """The data admits no meaningful fit (e.g. constant losses)."""


class ConfigurationError(MixtureLawError):
    """An infeasible or inconsistent configuration was supplied."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DomainCatalog:
    """Ordered registry of domains.

    ``names`` fixes index semantics everywhere; ``volume_counts`` is only
    used by the data-proportional heuristic.  Construction does not
    validate -- run :func:`validate_catalog` (module entry points do).
    """

    names: tuple[str, ...]
    volume_counts: Optional[tuple[int, ...]] = None

    def __init__(self, names: Sequence[str], volume_counts: Optional[Sequence[int]] = None):
        object.__setattr__(self, "names", tuple(names))
        object.__setattr__(
            self,
            "volume_counts",
            None if volume_counts is None else tuple(int(c) for c in volume_counts),
        )

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown domain name: {name!r}") from None


@dataclass(frozen=True)
class CatalogValidation:
    ok: bool
    errors: tuple[str, ...]


def validate_catalog(catalog: DomainCatalog) -> CatalogValidation:
    """Check every catalog invariant, enumerating all violations."""
    errors: list[str] = []
    names = catalog.names
    if len(names) == 0:
        errors.append("empty catalog: no domains defined")
    elif len(names) < 2:
        errors.append(f"catalog must contain at least 2 domains, got {len(names)}")
    seen: dict[str, int] = {}
    for i, name in enumerate(names):
        if not name:
            errors.append(f"empty domain name at index {i}")
        if name in seen:
            errors.append(f"duplicate domain name {name!r} at index {i} (first at {seen[name]})")
        else:
            seen[name] = i
    counts = catalog.volume_counts
    if counts is not None:
        if len(counts) != len(names):
            errors.append(
                f"volume_counts length {len(counts)} does not match {len(names)} domains"
            )
        for i, c in enumerate(counts):
            if c < 0:
                errors.append(f"negative volume count {c} at index {i}")
        if counts and all(c == 0 for c in counts):
            errors.append("all volume counts are zero")
    return CatalogValidation(ok=not errors, errors=tuple(errors))


def require_valid_catalog(catalog: DomainCatalog) -> None:
    result = validate_catalog(catalog)
    if not result.ok:
        raise ConfigurationError("invalid catalog: " + "; ".join(result.errors))


@dataclass(frozen=True)
class LossObservation:
    """One proxy-run measurement.

    ``target == source`` marks a self-domain run; otherwise a directed
    transfer run (trained on ``source``, evaluated on ``target``).
    """

    target: int
    source: int
    budget: float
    seed: int
    loss: float

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError(f"budget must be positive, got {self.budget}")
        if self.loss <= 0:
            raise ValueError(f"loss must be positive, got {self.loss}")
        if self.target < 0 or self.source < 0:
            raise ValueError("domain indices must be nonnegative")

    @property
    def is_self(self) -> bool:
        return self.target == self.source


BETA_LO = 0.01
BETA_HI = 2.0


@dataclass(frozen=True)
class ScalingParams:
    """Per-target power-law triple: loss = E + C / budget**beta."""

    E: float
    C: float
    beta: float

    def __post_init__(self):
        if self.E < 0:
            raise ValueError(f"E must be nonnegative, got {self.E}")
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not (BETA_LO <= self.beta <= BETA_HI):
            raise ValueError(f"beta must lie in [{BETA_LO}, {BETA_HI}], got {self.beta}")


@dataclass(frozen=True)
class TransferMatrix:
    """K x K directed transfer coefficients; tau[i, j] discounts source j
    budget into target i effective budget.  Unit diagonal, no symmetry."""

    tau: np.ndarray

    def __init__(self, tau):
        arr = _readonly(np.asarray(tau, dtype=float))
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"tau must be square, got shape {arr.shape}")
        diag = np.diagonal(arr)
        if not np.all(diag == 1.0):
            bad = int(np.argmax(diag != 1.0))
            raise ValueError(f"tau diagonal must be exactly 1; tau[{bad},{bad}] = {diag[bad]}")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("tau entries must lie in [0, 1]")
        object.__setattr__(self, "tau", arr)

    @property
    def size(self) -> int:
        return self.tau.shape[0]


@dataclass(frozen=True)
class MixtureWeights:
    """Point on the floored simplex: h[j] >= floor, sum(h) == 1."""

    h: np.ndarray
    floor: float = 0.0

    def __init__(self, h, floor: float = 0.0):
        arr = _readonly(np.asarray(h, dtype=float))
        if arr.ndim != 1:
            raise ValueError("h must be a 1-D vector")
        if floor < 0:
            raise ValueError(f"floor must be nonnegative, got {floor}")
        if floor * arr.size >= 1.0:
            raise ValueError(f"infeasible floor: {floor} * {arr.size} >= 1")
        lo = float(np.min(arr))
        if lo < floor - SIMPLEX_ATOL:
            j = int(np.argmin(arr))
            raise ValueError(
                f"floor constraint violated: h[{j}] = {arr[j]} < floor {floor}"
            )
        total = float(np.sum(arr))
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"simplex constraint violated: sum(h) = {total} != 1")
        object.__setattr__(self, "h", arr)
        object.__setattr__(self, "floor", float(floor))

    @property
    def size(self) -> int:
        return self.h.size


@dataclass(frozen=True)
class TargetWeights:
    """Nonnegative per-target importance weights, not all zero."""

    w: np.ndarray

    def __init__(self, w):
        arr = _readonly(np.asarray(w, dtype=float))
        if arr.ndim != 1:
            raise ValueError("w must be a 1-D vector")
        if np.any(arr < 0):
            raise ValueError("target weights must be nonnegative")
        if float(np.sum(arr)) <= 0:
            raise ValueError("target weights must not all be zero")
        object.__setattr__(self, "w", arr)

    @classmethod
    def equal(cls, k: int) -> "TargetWeights":
        return cls(np.full(k, 1.0 / k))


@dataclass(frozen=True)
class FitDiagnostics:
    """Per-configuration fit outcome: residual sum of squares over the
    budget-aggregated points, convergence flag, and any anomaly flags."""

    rss: float
    converged: bool
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class FittedModel:
    """Fitted surrogate: per-domain scaling params plus transfer matrix."""

    catalog: DomainCatalog
    params: tuple[ScalingParams, ...]
    tau: TransferMatrix
    fit_diagnostics: Mapping[str, FitDiagnostics] = field(default_factory=dict)

    def __post_init__(self):
        k = self.catalog.size
        if len(self.params) != k:
            raise ValueError(f"expected {k} parameter triples, got {len(self.params)}")
        if self.tau.size != k:
            raise ValueError(f"tau must be {k}x{k}, got {self.tau.size}x{self.tau.size}")
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "fit_diagnostics", dict(self.fit_diagnostics))

    @property
    def size(self) -> int:
        return self.catalog.size

    def floors(self) -> np.ndarray:
        return np.array([p.E for p in self.params])

    def coefficients(self) -> np.ndarray:
        return np.array([p.C for p in self.params])

    def exponents(self) -> np.ndarray:
        return np.array([p.beta for p in self.params])


def diagnostics_key(catalog: DomainCatalog, target: int, source: int) -> str:
    """Canonical key for per-configuration diagnostics: 'target<-source'."""
    return f"{catalog.names[target]}<-{catalog.names[source]}"
