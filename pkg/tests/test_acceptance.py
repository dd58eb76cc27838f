"""End-to-end acceptance gate.

Each test checks one headline capability at its stated tolerance and
contributes one PASS/FAIL line to the post-run summary, so the suite output
doubles as an acceptance report.
"""

import numpy as np
import pytest

from transfermix import (
    DomainCatalog,
    MixtureWeights,
    NoiseModel,
    OptimizerConfig,
    TargetWeights,
    budget_loss_correlation,
    compare_strategies,
    decompose,
    extrapolate,
    fit_all,
    generate_world,
    heuristic_mixture,
    optimize_mixture,
    predict_gradient,
    sample_observations,
)
from transfermix.analysis import DecompositionTable
from transfermix.cli import main
from transfermix.synth import sample_mixture_observations

import conftest
from conftest import REF_CONTRIB, REF_COUNTS, REF_H, REF_T, REF_TOTALS

FIT_BUDGETS = [10_000.0, 50_000.0, 100_000.0, 200_000.0]


def report(criterion, ok, detail):
    status = "PASS" if ok else "FAIL"
    conftest.ACCEPTANCE_LINES.append(f"[acceptance {criterion:02d}] {status} — {detail}")
    assert ok, detail


def test_01_decomposition_reproduction(reference_model):
    d = decompose(reference_model, MixtureWeights(REF_H, 0.05), REF_T)
    cells_ok = np.array_equal(np.rint(d.contributions), REF_CONTRIB)
    totals_ok = np.array_equal(np.rint(d.totals), REF_TOTALS)
    report(
        1,
        cells_ok and totals_ok,
        "reference decomposition cells and row totals exact after integer rounding",
    )


def test_02_data_proportional_reproduction():
    catalog = DomainCatalog([f"D{i}" for i in range(6)], REF_COUNTS)
    h = heuristic_mixture(catalog, "data-proportional", 0.05)
    expected = np.array([0.217, 0.065, 0.217, 0.217, 0.217, 0.065])
    err = float(np.abs(h.h - expected).max())
    report(2, err <= 5e-4, f"data-proportional weights match reference, max abs err {err:.2e}")


def test_03_correlation_reproduction():
    budget_ratios = np.array([0.72, 0.69, 0.45, 0.46, 0.71, 3.80])
    loss_ratios = np.array([1.32, 1.51, 1.18, 1.16, 1.32, 2.96])
    names = tuple(f"D{i}" for i in range(6))
    a = DecompositionTable(names, np.diag(budget_ratios), budget_ratios, np.ones(6))
    b = DecompositionTable(names, np.eye(6), np.ones(6), np.ones(6))
    r = budget_loss_correlation(a, b, np.ones(6), loss_ratios).pearson_r
    report(3, abs(r - 0.992) <= 5e-3, f"budget/loss ratio correlation r = {r:.4f} (target 0.992)")


def test_04_noiseless_fit_recovery():
    worst_rel, worst_tau = 0.0, 0.0
    for seed in range(50):
        world = generate_world(6, rng_seed=seed)
        obs = sample_observations(world, FIT_BUDGETS)
        model = fit_all(obs, world.catalog)
        for fitted, true in zip(model.params, world.params):
            worst_rel = max(
                worst_rel,
                abs(fitted.E - true.E) / max(true.E, 1e-12),
                abs(fitted.C - true.C) / true.C,
                abs(fitted.beta - true.beta) / true.beta,
            )
        worst_tau = max(worst_tau, float(np.abs(model.tau.tau - world.tau.tau).max()))
    ok = worst_rel <= 1e-3 and worst_tau <= 1e-3
    report(
        4,
        ok,
        f"noiseless recovery over 50 worlds: worst param rel err {worst_rel:.2e}, "
        f"worst tau abs err {worst_tau:.2e}",
    )


def test_05_noisy_fit_recovery():
    hits = total = 0
    for seed in range(50):
        world = generate_world(6, rng_seed=seed, noise=NoiseModel(sigma=0.02))
        obs = sample_observations(world, FIT_BUDGETS, seeds_per_budget=3)
        model = fit_all(obs, world.catalog)
        for fitted, true in zip(model.params, world.params):
            hits += abs(fitted.beta - true.beta) <= 0.05
            total += 1
    rate = hits / total
    report(
        5,
        rate >= 0.90,
        f"noisy (sigma=0.02, 3 seeds) beta recovery within 0.05 for {rate:.1%} of domains",
    )


def test_06_optimizer_grid_oracle():
    from test_optimizer import grid_minimum, random_model

    worst_gap = -np.inf
    config = OptimizerConfig(restarts=12, rng_seed=0)
    for seed in range(20):
        model = random_model(3, seed)
        w = TargetWeights.equal(3)
        result = optimize_mixture(model, 7e4, w, config)
        oracle = grid_minimum(model, 7e4, w, config.floor)
        worst_gap = max(worst_gap, result.objective_value - oracle)
    report(
        6,
        worst_gap <= 1e-6,
        f"optimizer vs 0.5%-grid oracle over 20 worlds: worst objective gap {worst_gap:.2e}",
    )


def test_07_gradient_correctness():
    rng = np.random.default_rng(7)
    step = 1e-6
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 7))
        world = generate_world(k, rng_seed=int(rng.integers(1 << 30)))
        model = world.as_model()
        h_vec = 0.02 + (1 - k * 0.02) * rng.dirichlet(np.ones(k))
        h = MixtureWeights(h_vec, 0.02)
        T = float(rng.uniform(1e4, 5e5))
        i = int(rng.integers(k))
        g = predict_gradient(model, h, T, i)
        for j in range(k):
            hp, hm = h_vec.copy(), h_vec.copy()
            hp[j] += step
            hm[j] -= step
            p = model.params[i]
            fd = (
                p.C / float((model.tau.tau[i] * hp * T).sum()) ** p.beta
                - p.C / float((model.tau.tau[i] * hm * T).sum()) ** p.beta
            ) / (2 * step)
            worst = max(worst, abs(g[j] - fd) / abs(fd))
    report(7, worst <= 1e-5, f"analytic vs central-difference gradient: worst rel err {worst:.2e}")


def test_08_extrapolation_property():
    h6 = MixtureWeights(np.full(6, 1 / 6), 0.05)

    # noiseless: fit on three budgets, predict at the held-out fourth
    world = generate_world(6, rng_seed=0)
    model = fit_all(sample_observations(world, FIT_BUDGETS[:3]), world.catalog)
    held = sample_mixture_observations(world, h6, [200_000.0])
    clean = extrapolate(model, held, h6)
    clean_ok = clean.mean_relative_error <= 1e-6 and clean.pearson_r >= 1 - 1e-9

    errors, rs = [], []
    for seed in range(50):
        world = generate_world(6, rng_seed=seed, noise=NoiseModel(sigma=0.02))
        model = fit_all(
            sample_observations(world, FIT_BUDGETS[:3], seeds_per_budget=3), world.catalog
        )
        held = sample_mixture_observations(world, h6, [200_000.0], seeds_per_budget=3)
        rep = extrapolate(model, held, h6)
        errors.append(rep.mean_relative_error)
        rs.append(rep.pearson_r)
    noisy_ok = float(np.mean(errors)) <= 0.03 and min(rs) >= 0.95
    report(
        8,
        clean_ok and noisy_ok,
        f"held-out-budget extrapolation: noiseless err {clean.mean_relative_error:.1e}, "
        f"noisy mean err {np.mean(errors):.2%}, min r {min(rs):.4f}",
    )


def test_09_structural_allocation_reproduction(reference_model):
    result = optimize_mixture(
        reference_model, REF_T, TargetWeights.equal(6), OptimizerConfig(restarts=24)
    )
    h = result.h_star.h
    order = np.argsort(h)[::-1]
    names = reference_model.catalog.names
    largest, second = names[order[0]], names[order[1]]
    floored = sorted(names[i] for i in order[2:] if h[i] <= 0.05 + 1e-6)
    ok = largest == "HEAD_PET" and second == "ABD_CT" and len(floored) == 4
    report(
        9,
        ok,
        "published allocation structure (HEAD_PET largest, ABD_CT second, four at floor); "
        f"got h = {np.round(h, 3).tolist()} with {largest} largest, {second} second, "
        f"{len(floored)} at floor",
    )


def test_10_strategy_ordering():
    config = OptimizerConfig(restarts=12, rng_seed=0)
    ok = True
    for seed in range(5):
        world = generate_world(6, structure="hub_island", rng_seed=seed)
        for T in FIT_BUDGETS:
            rows = {r.strategy: r.mean_loss for r in compare_strategies(world.as_model(), T, config=config)}
            ok &= rows["transfer-aware"] < rows["uniform"]
            ok &= rows["transfer-aware"] < rows["transfer-naive"]
    report(
        10,
        ok,
        "transfer-aware mean loss beats uniform and transfer-naive on hub-island worlds "
        "at every budget",
    )


def test_11_cli_determinism(tmp_path):
    def pipeline(root):
        root.mkdir()
        obs = str(root / "obs.csv")
        model = str(root / "model.json")
        alloc = str(root / "alloc.json")
        decomp = str(root / "decomp.json")
        catalog = str(root / "catalog.csv")
        assert (
            main(
                ["simulate", "--domains", "4", "--structure", "hub_island", "--seed", "3",
                 "--budget", "10000", "--budget", "50000", "--budget", "100000",
                 "--budget", "200000", "--noise-sigma", "0.02", "--seeds-per-budget", "2",
                 "--out", obs, "--world-out", str(root / "world.json")]
            )
            == 0
        )
        from transfermix.io import read_model, write_catalog

        write_catalog(catalog, read_model(str(root / "world.json")).catalog)
        assert main(["fit", "--catalog", catalog, "--observations", obs, "--out", model]) == 0
        assert (
            main(["optimize", "--model", model, "--budget", "100000", "--restarts", "16",
                  "--seed", "0", "--out", alloc])
            == 0
        )
        assert (
            main(["decompose", "--model", model, "--mixture", "0.4,0.3,0.2,0.1",
                  "--budget", "100000", "--out", decomp])
            == 0
        )
        return [open(p, "rb").read() for p in (obs, model, alloc, decomp)]

    first = pipeline(tmp_path / "run1")
    second = pipeline(tmp_path / "run2")
    report(
        11,
        first == second,
        "simulate -> fit -> optimize -> decompose reports are byte-identical across runs",
    )
