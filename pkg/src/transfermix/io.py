"""File formats: observation/catalog ingestion and versioned JSON reports.

All reports are structured JSON with a schema version and a provenance
block (input digests, config, seed, tool version).  Writes are atomic
(write to a temp file, then rename), so partial outputs never appear.
Serialization uses Python's shortest round-trip float repr, which restores
every value bit-for-bit.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
import warnings
from typing import Any, Optional

import numpy as np

from . import __version__
from .model import (
    DomainCatalog,
    FitDiagnostics,
    FittedModel,
    LossObservation,
    MixtureLawError,
    ScalingParams,
    TransferMatrix,
)

SCHEMA_VERSION = 1

OBSERVATION_HEADER = ["target_domain", "source_domain", "budget", "seed", "loss"]
CATALOG_HEADER = ["name", "volume_count"]


class ParseError(MixtureLawError):
    """Malformed input file; message carries the offending line numbers."""


def file_digest(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def read_catalog(path: str) -> DomainCatalog:
    """Read the canonical-order domain listing: ``name,volume_count`` rows."""
    names: list[str] = []
    counts: list[int] = []
    errors: list[str] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != CATALOG_HEADER:
            raise ParseError(f"{path}: expected header {','.join(CATALOG_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                errors.append(f"line {lineno}: expected 2 fields, got {len(row)}")
                continue
            name, count = row[0].strip(), row[1].strip()
            try:
                counts.append(int(count))
            except ValueError:
                errors.append(f"line {lineno}: invalid volume count {count!r}")
                continue
            names.append(name)
    if errors:
        raise ParseError(f"{path}: " + "; ".join(errors))
    return DomainCatalog(names, counts)


def _parse_float(text: str) -> float:
    # locale-independent: decimal point only, no grouping separators
    text = text.strip()
    if "," in text:
        raise ValueError(f"invalid number {text!r}")
    return float(text)


def parse_observations(path: str, catalog: DomainCatalog) -> list[LossObservation]:
    """Parse the delimited observation table, resolving domain names to
    catalog indices.  All malformed rows are reported together, with line
    numbers."""
    observations: list[LossObservation] = []
    errors: list[str] = []
    seen: dict[tuple[int, int, float, int], int] = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != OBSERVATION_HEADER:
            raise ParseError(f"{path}: expected header {','.join(OBSERVATION_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                errors.append(f"line {lineno}: expected 5 fields, got {len(row)}")
                continue
            target_name, source_name, budget_s, seed_s, loss_s = (c.strip() for c in row)
            try:
                target = catalog.index(target_name)
            except KeyError:
                errors.append(f"line {lineno}: unknown domain name {target_name!r}")
                continue
            try:
                source = catalog.index(source_name)
            except KeyError:
                errors.append(f"line {lineno}: unknown domain name {source_name!r}")
                continue
            try:
                budget = _parse_float(budget_s)
                seed = int(seed_s)
                loss = _parse_float(loss_s)
            except ValueError as exc:
                errors.append(f"line {lineno}: {exc}")
                continue
            if budget <= 0:
                errors.append(f"line {lineno}: non-positive budget {budget}")
                continue
            if loss <= 0:
                errors.append(f"line {lineno}: non-positive loss {loss}")
                continue
            key = (target, source, budget, seed)
            if key in seen:
                errors.append(
                    f"line {lineno}: duplicate (target, source, budget, seed) tuple, "
                    f"first seen at line {seen[key]}"
                )
                continue
            seen[key] = lineno
            observations.append(
                LossObservation(target=target, source=source, budget=budget, seed=seed, loss=loss)
            )
    if errors:
        raise ParseError(f"{path}: " + "; ".join(errors))
    if not observations:
        warnings.warn(f"{path}: no observation rows found", stacklevel=2)
    return observations


def write_observations(path: str, observations: list[LossObservation], catalog: DomainCatalog) -> None:
    rows = [OBSERVATION_HEADER]
    for obs in observations:
        rows.append(
            [
                catalog.names[obs.target],
                catalog.names[obs.source],
                repr(float(obs.budget)),
                str(obs.seed),
                repr(float(obs.loss)),
            ]
        )
    text = "\n".join(",".join(r) for r in rows) + "\n"
    atomic_write_text(path, text)


def write_catalog(path: str, catalog: DomainCatalog) -> None:
    counts = catalog.volume_counts or [0] * catalog.size
    rows = [CATALOG_HEADER] + [[n, str(c)] for n, c in zip(catalog.names, counts)]
    text = "\n".join(",".join(r) for r in rows) + "\n"
    atomic_write_text(path, text)


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    return value


def provenance_block(
    inputs: dict[str, str], config: dict[str, Any], seed: Optional[int]
) -> dict[str, Any]:
    return {
        "tool_version": __version__,
        "input_digests": {name: file_digest(path) for name, path in sorted(inputs.items())},
        "config": _to_jsonable(config),
        "rng_seed": seed,
    }


def write_report(path: str, kind: str, body: dict[str, Any], provenance: dict[str, Any]) -> None:
    document = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "provenance": provenance,
    }
    document.update(_to_jsonable(body))
    atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")


def read_report(path: str, kind: Optional[str] = None) -> dict[str, Any]:
    with open(path) as f:
        document = json.load(f)
    if document.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(
            f"{path}: unsupported schema version {document.get('schema_version')!r}"
        )
    if kind is not None and document.get("kind") != kind:
        raise ParseError(f"{path}: expected a {kind!r} document, got {document.get('kind')!r}")
    return document


def model_to_dict(model: FittedModel) -> dict[str, Any]:
    return {
        "catalog": {
            "names": list(model.catalog.names),
            "volume_counts": (
                None if model.catalog.volume_counts is None else list(model.catalog.volume_counts)
            ),
        },
        "params": [{"E": p.E, "C": p.C, "beta": p.beta} for p in model.params],
        "tau": model.tau.tau.tolist(),
        "fit_diagnostics": {
            key: {"rss": d.rss, "converged": d.converged, "flags": list(d.flags)}
            for key, d in sorted(model.fit_diagnostics.items())
        },
    }


def model_from_dict(data: dict[str, Any]) -> FittedModel:
    catalog = DomainCatalog(
        data["catalog"]["names"], data["catalog"].get("volume_counts")
    )
    params = tuple(
        ScalingParams(E=p["E"], C=p["C"], beta=p["beta"]) for p in data["params"]
    )
    diagnostics = {
        key: FitDiagnostics(rss=d["rss"], converged=d["converged"], flags=tuple(d["flags"]))
        for key, d in data.get("fit_diagnostics", {}).items()
    }
    return FittedModel(
        catalog=catalog,
        params=params,
        tau=TransferMatrix(np.array(data["tau"], dtype=float)),
        fit_diagnostics=diagnostics,
    )


def write_model(path: str, model: FittedModel, provenance: dict[str, Any]) -> None:
    write_report(path, "fitted_model", model_to_dict(model), provenance)


def read_model(path: str) -> FittedModel:
    return model_from_dict(read_report(path, "fitted_model"))
