import numpy as np
import pytest

from transfermix import (
    DomainCatalog,
    FittedModel,
    LossObservation,
    MixtureWeights,
    OptimizerConfig,
    ScalingParams,
    TargetWeights,
    TransferMatrix,
    budget_loss_correlation,
    classify_domains,
    compare_strategies,
    decompose,
    extrapolate,
    floor_sweep,
    generate_world,
)
from transfermix.analysis import DecompositionTable, pearson
from transfermix.model import ConfigurationError
from transfermix.surrogate import effective_budget, predict_all_losses

from conftest import (
    REF_CONTRIB,
    REF_H,
    REF_NAMES,
    REF_T,
    REF_TAU_IN,
    REF_TAU_OUT,
    REF_TOTALS,
)


def table(names, totals):
    k = len(names)
    totals = np.asarray(totals, dtype=float)
    return DecompositionTable(
        domain_names=tuple(names),
        contributions=np.diag(totals),
        totals=totals,
        amplification=np.ones(k),
    )


class TestPearson:
    def test_perfect_and_inverse(self):
        x = np.array([1.0, 2.0, 5.0])
        assert pearson(x, 3 * x + 1) == pytest.approx(1.0)
        assert pearson(x, -x) == pytest.approx(-1.0)

    def test_undefined_cases(self):
        assert pearson(np.array([1.0]), np.array([2.0])) is None
        assert pearson(np.array([1.0, 1.0]), np.array([0.3, 0.9])) is None


class TestDecompose:
    def test_reference_table_cells(self, reference_model):
        d = decompose(reference_model, MixtureWeights(REF_H, 0.05), REF_T)
        assert np.allclose(d.contributions, REF_CONTRIB, atol=1e-9)
        assert np.allclose(d.totals, REF_TOTALS, atol=1e-9)

    def test_reference_amplification(self, reference_model):
        d = decompose(reference_model, MixtureWeights(REF_H, 0.05), REF_T)
        # ABD_MRI: 20928 effective samples from 5000 direct ones
        assert d.amplification[1] == pytest.approx(20928 / 5000, rel=1e-6)

    def test_identity_tau(self):
        k = 4
        model = FittedModel(
            catalog=DomainCatalog([f"D{i}" for i in range(k)]),
            params=(ScalingParams(0.01, 1.0, 0.5),) * k,
            tau=TransferMatrix(np.eye(k)),
        )
        h = MixtureWeights(np.full(k, 0.25), 0.0)
        d = decompose(model, h, 1e4)
        assert np.array_equal(d.contributions, np.diag(h.h * 1e4))
        assert np.array_equal(d.amplification, np.ones(k))

    def test_totals_match_effective_budget_bitwise(self, reference_model):
        h = MixtureWeights(REF_H, 0.05)
        d = decompose(reference_model, h, REF_T)
        for i in range(6):
            assert d.totals[i] == effective_budget(reference_model, h, REF_T, i)

    def test_amplification_at_least_one(self):
        rng = np.random.default_rng(0)
        for seed in range(10):
            world = generate_world(4, rng_seed=seed)
            model = world.as_model()
            h = MixtureWeights(rng.dirichlet(np.ones(4)) * 0.8 + 0.05, 0.05)
            d = decompose(model, h, 5e4)
            assert np.all(d.amplification >= 1.0 - 1e-12)


class TestClassifyDomains:
    def test_reference_roles(self, reference_model):
        roles = classify_domains(reference_model)
        by_name = dict(zip(roles.domain_names, roles.roles))
        assert by_name["ABD_CT"] == "Hub"
        assert by_name["HEAD_PET"] == "Island"
        assert by_name["BRAIN_T1"] == "Easy"
        assert by_name["BRAIN_T2"] == "Easy"

    def test_reference_transfer_means(self, reference_model):
        roles = classify_domains(reference_model)
        assert np.allclose(roles.tau_out, REF_TAU_OUT, atol=0.01)
        assert np.allclose(roles.tau_in, REF_TAU_IN, atol=0.01)

    def test_identity_all_island(self):
        model = FittedModel(
            catalog=DomainCatalog(["a", "b", "c"]),
            params=(ScalingParams(0.0, 1.0, 0.5),) * 3,
            tau=TransferMatrix(np.eye(3)),
        )
        assert classify_domains(model).roles == ("Island",) * 3

    def test_uniform_tau_single_hub(self):
        k = 4
        tau = np.full((k, k), 0.5)
        np.fill_diagonal(tau, 1.0)
        model = FittedModel(
            catalog=DomainCatalog([f"D{i}" for i in range(k)]),
            params=tuple(ScalingParams(0.0, 1.0, b) for b in (0.5, 0.6, 0.7, 0.8)),
            tau=TransferMatrix(tau),
        )
        roles = classify_domains(model).roles
        assert roles.count("Hub") == 1
        assert roles[0] == "Hub"

    def test_reorder_invariance(self, reference_model):
        perm = [5, 2, 0, 4, 1, 3]
        tau = reference_model.tau.tau[np.ix_(perm, perm)]
        permuted = FittedModel(
            catalog=DomainCatalog([REF_NAMES[i] for i in perm]),
            params=tuple(reference_model.params[i] for i in perm),
            tau=TransferMatrix(tau),
        )
        base = dict(zip(REF_NAMES, classify_domains(reference_model).roles))
        moved = dict(zip(permuted.catalog.names, classify_domains(permuted).roles))
        assert base == moved


class TestExtrapolate:
    def world_and_mixture(self, seed=0, k=4):
        world = generate_world(k, rng_seed=seed)
        h = MixtureWeights(np.full(k, 1.0 / k), 0.05)
        return world, h

    def test_noiseless_zero_error(self):
        world, h = self.world_and_mixture()
        model = world.as_model()
        held = [
            LossObservation(i, i, 2e5, s, world.mixture_loss(i, h, 2e5))
            for i in range(4)
            for s in (0, 1)
        ]
        report = extrapolate(model, held, h)
        assert report.mean_relative_error < 1e-12
        assert report.pearson_r == pytest.approx(1.0, abs=1e-12)
        assert report.flags == ()

    def test_extrapolates_far_beyond_fit_range(self):
        world, h = self.world_and_mixture(seed=1)
        model = world.as_model()
        held = [LossObservation(i, i, 5e6, 0, world.mixture_loss(i, h, 5e6)) for i in range(4)]
        report = extrapolate(model, held, h)
        assert report.mean_relative_error < 1e-12

    def test_missing_domain_flagged(self):
        world, h = self.world_and_mixture(seed=2)
        model = world.as_model()
        held = [LossObservation(i, i, 2e5, 0, world.mixture_loss(i, h, 2e5)) for i in range(3)]
        report = extrapolate(model, held, h)
        assert report.missing_domains == (world.catalog.names[3],)
        assert "missing-domains" in report.flags

    def test_single_domain_correlation_undefined(self):
        world, h = self.world_and_mixture(seed=3)
        model = world.as_model()
        held = [LossObservation(0, 0, 2e5, 0, world.mixture_loss(0, h, 2e5))]
        report = extrapolate(model, held, h)
        assert report.pearson_r is None
        assert "correlation-undefined" in report.flags
        assert report.relative_errors.size == 1

    def test_rejects_mixed_budgets_and_empty(self):
        world, h = self.world_and_mixture(seed=4)
        model = world.as_model()
        with pytest.raises(ValueError):
            extrapolate(model, [], h)
        mixed = [
            LossObservation(0, 0, 1e5, 0, 0.1),
            LossObservation(1, 1, 2e5, 0, 0.1),
        ]
        with pytest.raises(ValueError):
            extrapolate(model, mixed, h)


class TestBudgetLossCorrelation:
    NAMES = REF_NAMES
    BUDGET_RATIOS = np.array([0.72, 0.69, 0.45, 0.46, 0.71, 3.80])
    LOSS_RATIOS = np.array([1.32, 1.51, 1.18, 1.16, 1.32, 2.96])

    def test_reference_correlation(self):
        a = table(self.NAMES, self.BUDGET_RATIOS)
        b = table(self.NAMES, np.ones(6))
        result = budget_loss_correlation(a, b, np.ones(6), self.LOSS_RATIOS)
        assert np.array_equal(result.budget_ratios, self.BUDGET_RATIOS)
        assert np.array_equal(result.loss_ratios, self.LOSS_RATIOS)
        assert result.pearson_r == pytest.approx(0.992, abs=5e-3)

    def test_identical_inputs_undefined(self):
        a = table(["x", "y", "z"], [1e4, 2e4, 3e4])
        result = budget_loss_correlation(a, a, np.ones(3), np.ones(3))
        assert result.pearson_r is None
        assert "correlation-undefined" in result.flags

    def test_proportional_ratios_perfect(self):
        a = table(["x", "y", "z"], [2e4, 4e4, 8e4])
        b = table(["x", "y", "z"], [1e4, 1e4, 1e4])
        losses_a = np.ones(3)
        losses_b = np.array([2.0, 4.0, 8.0])
        result = budget_loss_correlation(a, b, losses_a, losses_b)
        assert result.pearson_r == pytest.approx(1.0, abs=1e-12)

    def test_zero_denominator_excluded(self):
        a = table(["x", "y", "z"], [1e4, 2e4, 3e4])
        b = table(["x", "y", "z"], [1e4, 0.0, 3e4])
        result = budget_loss_correlation(a, b, np.ones(3), np.ones(3))
        assert result.excluded == ("y",)
        assert "excluded-domains" in result.flags

    def test_mismatched_domains_rejected(self):
        a = table(["x", "y"], [1e4, 2e4])
        b = table(["x", "z"], [1e4, 2e4])
        with pytest.raises(ValueError):
            budget_loss_correlation(a, b, np.ones(2), np.ones(2))


FAST = OptimizerConfig(restarts=8, rng_seed=0)


class TestFloorSweep:
    def test_mean_loss_weakly_increases(self):
        world = generate_world(4, structure="hub_island", rng_seed=5)
        model = world.as_model()
        entries = floor_sweep(
            model, 5e4, TargetWeights.equal(4), [0.025, 0.05, 0.075, 0.10, 0.125], FAST
        )
        objectives = [e.result.objective_value for e in entries]
        assert all(b >= a - 1e-10 for a, b in zip(objectives, objectives[1:]))
        assert [e.floor for e in entries] == [0.025, 0.05, 0.075, 0.10, 0.125]

    def test_infeasible_floor_rejected(self, reference_model):
        with pytest.raises(ConfigurationError):
            floor_sweep(reference_model, 1e5, TargetWeights.equal(6), [0.05, 0.2], FAST)

    def test_zero_floor_allowed(self):
        world = generate_world(3, rng_seed=6)
        entries = floor_sweep(world.as_model(), 5e4, TargetWeights.equal(3), [0.0], FAST)
        assert entries[0].result.h_star.floor == 0.0


class TestCompareStrategies:
    def test_transfer_aware_dominates(self):
        for seed in range(5):
            world = generate_world(4, structure="hub_island", rng_seed=seed)
            rows = compare_strategies(world.as_model(), 5e4, config=FAST)
            by_name = {r.strategy: r.mean_loss for r in rows}
            assert len(rows) == 4
            for name, mean in by_name.items():
                assert by_name["transfer-aware"] <= mean + 1e-10, name

    def test_all_rows_scored_with_same_law(self, reference_model):
        rows = compare_strategies(
            reference_model, 1e5, strategies=("uniform",), config=FAST
        )
        expected = predict_all_losses(reference_model, rows[0].mixture, 1e5)
        assert np.array_equal(rows[0].per_target_losses, expected)
        assert rows[0].mean_loss == pytest.approx(float(expected.mean()))

    def test_unknown_strategy_rejected(self, reference_model):
        with pytest.raises(ValueError):
            compare_strategies(reference_model, 1e5, strategies=("greedy",), config=FAST)
