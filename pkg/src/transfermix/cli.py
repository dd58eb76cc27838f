"""Command-line front end.

Every command reads structured inputs, delegates to the library modules,
and writes a single versioned JSON report (atomically; partial outputs are
never left behind).  Identical inputs and seed produce byte-identical
reports.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Optional

import numpy as np

from . import analysis, io
from .fitting import FitConfig, fit_all
from .model import (
    DomainCatalog,
    FittedModel,
    MixtureLawError,
    MixtureWeights,
    TargetWeights,
    require_valid_catalog,
)
from .optimizer import OptimizerConfig, optimize_over_budgets
from .surrogate import LawVariant, predict_all_losses
from .synth import NoiseModel, generate_world, sample_observations


def _parse_variant(text: str) -> LawVariant:
    if text == "aware":
        return LawVariant.aware()
    if text == "naive":
        return LawVariant.naive()
    if text.startswith("shared:"):
        return LawVariant.shared(float(text.split(":", 1)[1]))
    raise argparse.ArgumentTypeError(
        f"invalid variant {text!r}: expected aware, naive, or shared:<beta>"
    )


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid comma-separated vector: {text!r}")


def _weights(args, k: int) -> TargetWeights:
    if getattr(args, "weights", None) is None:
        return TargetWeights.equal(k)
    return TargetWeights(args.weights)


def _optimizer_config(args, floor: Optional[float] = None) -> OptimizerConfig:
    return OptimizerConfig(
        floor=floor if floor is not None else args.floor,
        restarts=args.restarts,
        rng_seed=args.seed,
    )


def _load_model(args) -> tuple[FittedModel, dict[str, str]]:
    if args.model is not None:
        return io.read_model(args.model), {"model": args.model}
    if args.catalog is None or args.observations is None:
        raise MixtureLawError("either --model or both --catalog and --observations required")
    catalog = io.read_catalog(args.catalog)
    require_valid_catalog(catalog)
    observations = io.parse_observations(args.observations, catalog)
    model = fit_all(observations, catalog, FitConfig())
    return model, {"catalog": args.catalog, "observations": args.observations}


def _allocation_body(result) -> dict[str, Any]:
    return {
        "h": result.h_star.h,
        "floor": result.h_star.floor,
        "objective_value": result.objective_value,
        "per_target_losses": result.per_target_losses,
        "active_floor_set": list(result.active_floor_set),
        "restart_statistics": {
            "best": result.restart_statistics.best,
            "median": result.restart_statistics.median,
            "worst": result.restart_statistics.worst,
        },
        "stationary": result.stationary,
        "projected_gradient_norm": result.projected_gradient_norm,
        "iteration_capped": result.iteration_capped,
    }


def cmd_fit(args) -> None:
    catalog = io.read_catalog(args.catalog)
    require_valid_catalog(catalog)
    observations = io.parse_observations(args.observations, catalog)
    model = fit_all(observations, catalog, FitConfig())
    provenance = io.provenance_block(
        {"catalog": args.catalog, "observations": args.observations},
        {"command": "fit"},
        None,
    )
    io.write_model(args.out, model, provenance)


def cmd_optimize(args) -> None:
    model, inputs = _load_model(args)
    w = _weights(args, model.size)
    config = _optimizer_config(args)
    results = optimize_over_budgets(model, args.budget, w, config, args.variant)
    body = {
        "budgets": args.budget,
        "allocations": [_allocation_body(r) for r in results],
        "domain_names": list(model.catalog.names),
    }
    provenance = io.provenance_block(
        inputs,
        {
            "command": "optimize",
            "floor": config.floor,
            "restarts": config.restarts,
            "variant": args.variant.kind,
            "weights": w.w,
        },
        args.seed,
    )
    io.write_report(args.out, "allocation", body, provenance)


def cmd_predict(args) -> None:
    model, inputs = _load_model(args)
    h = MixtureWeights(args.mixture, args.floor)
    losses = {
        budget: predict_all_losses(model, h, budget, args.variant) for budget in args.budget
    }
    body = {
        "domain_names": list(model.catalog.names),
        "h": h.h,
        "predictions": [
            {
                "budget": budget,
                "per_target_losses": loss_vec,
                "mean_loss": float(loss_vec.mean()),
            }
            for budget, loss_vec in losses.items()
        ],
    }
    provenance = io.provenance_block(
        inputs, {"command": "predict", "variant": args.variant.kind}, None
    )
    io.write_report(args.out, "prediction", body, provenance)


def cmd_decompose(args) -> None:
    model, inputs = _load_model(args)
    h = MixtureWeights(args.mixture, args.floor)
    table = analysis.decompose(model, h, args.budget[0])
    body = {
        "domain_names": list(table.domain_names),
        "budget": args.budget[0],
        "h": h.h,
        "contributions": table.contributions,
        "T_eff": table.totals,
        "amplification": table.amplification,
    }
    provenance = io.provenance_block(inputs, {"command": "decompose"}, None)
    io.write_report(args.out, "decomposition", body, provenance)


def cmd_analyze(args) -> None:
    model, inputs = _load_model(args)
    roles = analysis.classify_domains(model, args.island_max, args.hub_min)
    body: dict[str, Any] = {
        "domain_roles": {
            "domain_names": list(roles.domain_names),
            "tau_out": roles.tau_out,
            "tau_in": roles.tau_in,
            "roles": list(roles.roles),
        }
    }
    if args.held_out is not None:
        if args.mixture is None:
            raise MixtureLawError("--held-out requires --mixture (the h used in those runs)")
        held_out = io.parse_observations(args.held_out, model.catalog)
        h = MixtureWeights(args.mixture, args.floor)
        report = analysis.extrapolate(model, held_out, h)
        inputs["held_out"] = args.held_out
        body["extrapolation"] = {
            "held_out_budget": report.held_out_budget,
            "domain_names": list(report.domain_names),
            "predicted": report.predicted,
            "observed": report.observed,
            "relative_errors": report.relative_errors,
            "mean_relative_error": report.mean_relative_error,
            "pearson_r": report.pearson_r,
            "missing_domains": list(report.missing_domains),
            "flags": list(report.flags),
        }
    if args.budget and model.catalog.volume_counts is not None:
        # effective-budget vs loss ratios: optimized mixture against the
        # data-proportional heuristic at the first budget
        from .optimizer import heuristic_mixture, optimize_mixture

        t = args.budget[0]
        w = _weights(args, model.size)
        config = _optimizer_config(args)
        h_opt = optimize_mixture(model, t, w, config).h_star
        h_dp = heuristic_mixture(model.catalog, "data-proportional", config.floor)
        corr = analysis.budget_loss_correlation(
            analysis.decompose(model, h_opt, t),
            analysis.decompose(model, h_dp, t),
            predict_all_losses(model, h_opt, t),
            predict_all_losses(model, h_dp, t),
        )
        body["budget_loss_correlation"] = {
            "budget": t,
            "domain_names": list(corr.domain_names),
            "budget_ratios": corr.budget_ratios,
            "loss_ratios": corr.loss_ratios,
            "pearson_r": corr.pearson_r,
            "excluded": list(corr.excluded),
            "flags": list(corr.flags),
        }
    provenance = io.provenance_block(
        inputs,
        {"command": "analyze", "island_max": args.island_max, "hub_min": args.hub_min},
        args.seed,
    )
    io.write_report(args.out, "analysis", body, provenance)


def cmd_sweep_floor(args) -> None:
    model, inputs = _load_model(args)
    w = _weights(args, model.size)
    config = _optimizer_config(args, floor=0.0)
    entries = analysis.floor_sweep(
        model, args.budget[0], w, args.floors, config, args.variant
    )
    body = {
        "budget": args.budget[0],
        "domain_names": list(model.catalog.names),
        "entries": [
            {
                "floor": e.floor,
                "mean_predicted_loss": e.mean_predicted_loss,
                "allocation": _allocation_body(e.result),
            }
            for e in entries
        ],
    }
    provenance = io.provenance_block(
        inputs, {"command": "sweep-floor", "floors": args.floors}, args.seed
    )
    io.write_report(args.out, "floor_sweep", body, provenance)


def cmd_compare(args) -> None:
    model, inputs = _load_model(args)
    w = _weights(args, model.size)
    config = _optimizer_config(args)
    strategies = args.strategies or list(analysis.STRATEGIES)
    if "data-proportional" in strategies and model.catalog.volume_counts is None:
        strategies = [s for s in strategies if s != "data-proportional"]
    rows = analysis.compare_strategies(model, args.budget[0], strategies, w, config)
    body = {
        "budget": args.budget[0],
        "domain_names": list(model.catalog.names),
        "strategies": [
            {
                "strategy": row.strategy,
                "h": row.mixture.h,
                "per_target_losses": row.per_target_losses,
                "mean_loss": row.mean_loss,
            }
            for row in rows
        ],
    }
    provenance = io.provenance_block(
        inputs, {"command": "compare", "floor": config.floor}, args.seed
    )
    io.write_report(args.out, "strategy_comparison", body, provenance)


def cmd_simulate(args) -> None:
    inputs = {}
    names = None
    k = args.domains
    if args.catalog is not None:
        catalog = io.read_catalog(args.catalog)
        require_valid_catalog(catalog)
        names = list(catalog.names)
        k = catalog.size
        inputs["catalog"] = args.catalog
    if k is None:
        raise MixtureLawError("simulate requires --catalog or --domains")
    noise = NoiseModel(kind=args.noise_kind, sigma=args.noise_sigma)
    world = generate_world(
        k, structure=args.structure, rng_seed=args.seed, noise=noise, names=names
    )
    observations = sample_observations(
        world, args.budget, args.seeds_per_budget, args.configurations
    )
    io.write_observations(args.out, observations, world.catalog)
    if args.world_out is not None:
        provenance = io.provenance_block(
            inputs,
            {
                "command": "simulate",
                "structure": args.structure,
                "noise": {"kind": noise.kind, "sigma": noise.sigma},
            },
            args.seed,
        )
        io.write_model(args.world_out, world.as_model(), provenance)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transfermix",
        description="Fit transfer-aware scaling laws and optimize data mixtures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, model_input=True):
        if model_input:
            p.add_argument("--model", help="fitted model JSON file")
            p.add_argument("--catalog", help="domain catalog CSV")
            p.add_argument("--observations", help="loss observation CSV")
        p.add_argument("--floor", type=float, default=0.05, help="simplex floor epsilon")
        p.add_argument(
            "--budget", type=float, action="append", default=None, help="training budget (repeatable)"
        )
        p.add_argument("--weights", type=_parse_vector, default=None, help="target weights w")
        p.add_argument(
            "--variant",
            type=_parse_variant,
            default=LawVariant.aware(),
            help="law variant: aware | naive | shared:<beta>",
        )
        p.add_argument("--restarts", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output report path")

    p = sub.add_parser("fit", help="fit the scaling-law surrogate from observations")
    p.add_argument("--catalog", required=True)
    p.add_argument("--observations", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("optimize", help="solve for the optimal mixture")
    add_common(p)
    p.set_defaults(func=cmd_optimize, _needs_budget=True)

    p = sub.add_parser("predict", help="evaluate the surrogate at a mixture")
    add_common(p)
    p.add_argument("--mixture", type=_parse_vector, required=True)
    p.set_defaults(func=cmd_predict, _needs_budget=True)

    p = sub.add_parser("decompose", help="effective-budget decomposition table")
    add_common(p)
    p.add_argument("--mixture", type=_parse_vector, required=True)
    p.set_defaults(func=cmd_decompose, _needs_budget=True)

    p = sub.add_parser("analyze", help="domain roles, extrapolation, correlation")
    add_common(p)
    p.add_argument("--mixture", type=_parse_vector, default=None)
    p.add_argument("--held-out", dest="held_out", help="held-out observation CSV")
    p.add_argument("--island-max", dest="island_max", type=float, default=0.15)
    p.add_argument("--hub-min", dest="hub_min", type=float, default=0.25)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep-floor", help="re-optimize across floor values")
    add_common(p)
    p.add_argument(
        "--floors", type=_parse_vector, required=True, help="comma-separated floor values"
    )
    p.set_defaults(func=cmd_sweep_floor, _needs_budget=True)

    p = sub.add_parser("compare", help="score mixture strategies on the surrogate")
    add_common(p)
    p.add_argument("--strategies", nargs="*", default=None)
    p.set_defaults(func=cmd_compare, _needs_budget=True)

    p = sub.add_parser("simulate", help="emit synthetic observations from a known world")
    p.add_argument("--catalog", default=None)
    p.add_argument("--domains", type=int, default=None)
    p.add_argument("--structure", choices=["random", "hub_island"], default="random")
    p.add_argument("--budget", type=float, action="append", required=True)
    p.add_argument("--seeds-per-budget", dest="seeds_per_budget", type=int, default=1)
    p.add_argument(
        "--configurations", choices=["self_only", "all_pairs"], default="all_pairs"
    )
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.0)
    p.add_argument(
        "--noise-kind",
        dest="noise_kind",
        choices=["multiplicative", "additive"],
        default="multiplicative",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--world-out", dest="world_out", default=None)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "_needs_budget", False) and not args.budget:
        _emit_error("ConfigurationError", f"{args.command} requires at least one --budget")
        return 2
    try:
        args.func(args)
    except (MixtureLawError, ValueError, OSError, KeyError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1
    return 0


def _emit_error(error_type: str, message: str) -> None:
    json.dump({"error": {"type": error_type, "message": message}}, sys.stderr)
    sys.stderr.write("\n")


if __name__ == "__main__":
    sys.exit(main())
