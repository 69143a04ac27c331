import numpy as np
import pytest

from core.domain.assoc_model import MixedModelMode
from core.domain.exceptions import KinwardValidationError, NumericalError
from core.domain.genotype_model import GenotypeMatrix
from core.domain.kinship_model import KinshipMatrix, KinshipMethod
from core.domain.sim_model import IslandPlan, SimScenario
from core.domain.structure_model import MixedModelFit
from core.services.kinship_service import estimate_kinship
from core.services.simulation_service import simulate_panel, true_kinship
from core.services.structure_service import (
    H2_GRID,
    MixedModel,
    PcAdjuster,
    eigendecompose,
    fit_mixed_null,
    grammar_residuals,
    grammar_scan,
    grammar_test,
    ld_prune,
    mm_test,
    pc_adjusted_test,
    principal_components,
)


def _related_kinship(rng, n, groups=4):
    """Block-structured kinship: relatives share a block with coefficient 1/8."""
    labels = rng.integers(0, groups, size=n)
    K = np.where(labels[:, None] == labels[None, :], 0.125, 0.0)
    np.fill_diagonal(K, 0.5)
    return KinshipMatrix(K=K)


def _family_kinship(families, size, coefficient):
    """Block-diagonal kinship of outbred families: 0.25 for full sibs, 0.5 for MZ twins."""
    block = np.full((size, size), coefficient)
    np.fill_diagonal(block, 0.5)
    return np.kron(np.eye(families), block)


def _sibship_genotypes(rng, families, size, n_snps):
    """Allele counts of full sibships dropped from random-mating parents, families contiguous."""
    p = rng.uniform(0.1, 0.5, size=n_snps)
    parents = (rng.random((families, 4, n_snps)) < p).astype(int)
    paternal = np.take_along_axis(parents, rng.integers(0, 2, (families, size, n_snps)), axis=1)
    maternal = np.take_along_axis(parents, rng.integers(2, 4, (families, size, n_snps)), axis=1)
    return (paternal + maternal).reshape(families * size, n_snps).astype(float)


def _family_phenotype(rng, families, size, coefficient, h2):
    """y ~ N(0, h2 2K + (1 - h2) I) for ``_family_kinship`` with the same arguments."""
    shared = 2.0 * coefficient
    family = np.repeat(rng.normal(size=families), size)
    own = rng.normal(size=families * size)
    genetic = np.sqrt(shared) * family + np.sqrt(1.0 - shared) * own
    return np.sqrt(h2) * genetic + np.sqrt(1.0 - h2) * rng.normal(size=families * size)


def _squared_correlation(x, y):
    return np.corrcoef(x, y)[0, 1] ** 2


class TestPrincipalComponents:
    def test_values_are_sorted_and_oriented(self, rng):
        A = rng.normal(size=(12, 5))
        eig = principal_components(A @ A.T, 3)
        assert eig.k == 3
        assert np.all(np.diff(eig.values) <= 0)
        for column in eig.vectors.T:
            assert column[np.argmax(np.abs(column))] > 0

    def test_full_decomposition_reconstructs(self, rng):
        A = rng.normal(size=(6, 6))
        M = A @ A.T
        np.testing.assert_allclose(eigendecompose(M).reconstruct(), M, atol=1e-10)
        assert principal_components(M, 5).vectors.shape == (6, 5)

    @pytest.mark.parametrize("k", [0, 10])
    def test_number_of_components_is_bounded(self, k):
        with pytest.raises(KinwardValidationError):
            principal_components(np.eye(10), k)

    def test_top_components_separate_islands(self):
        scenario = SimScenario(
            islands=3,
            fst=0.1,
            n_snps=2000,
            n_causal=0,
            population_size=900,
            plan=IslandPlan(cases=(100,), controls=(100,)),
            seed=29,
        )
        panel = simulate_panel(scenario)
        K, _ = estimate_kinship(panel.genotypes, KinshipMethod.CORRELATION)
        scores = principal_components(K, 2).vectors
        centroids = np.array([scores[panel.labels == s].mean(axis=0) for s in range(3)])
        distances = np.linalg.norm(scores[:, None, :] - centroids[None, :, :], axis=2)
        assert np.mean(np.argmin(distances, axis=1) == panel.labels) >= 0.99


class TestPcAdjustment:
    def test_no_components_is_correlation_test(self, rng):
        x = rng.binomial(2, 0.3, size=50).astype(float)
        y = rng.normal(size=50)
        result = pc_adjusted_test(x, y, None)
        assert result.statistic == pytest.approx(49 * _squared_correlation(x, y))

    def test_invariant_to_component_scaling(self, rng):
        x = rng.binomial(2, 0.3, size=40).astype(float)
        y = rng.normal(size=40)
        pcs = rng.normal(size=(40, 3))
        a = pc_adjusted_test(x, y, pcs).statistic
        b = pc_adjusted_test(x, y, -3.0 * pcs).statistic
        assert a == pytest.approx(b)

    def test_degrees_of_freedom_follow_components(self, rng):
        x = rng.binomial(2, 0.3, size=40).astype(float)
        y = rng.normal(size=40)
        pc = rng.normal(size=40)
        pc -= pc.mean()
        basis = np.column_stack([np.ones(40), pc])
        rx = x - basis @ np.linalg.lstsq(basis, x, rcond=None)[0]
        ry = y - basis @ np.linalg.lstsq(basis, y, rcond=None)[0]
        expected = 38 * _squared_correlation(rx, ry)
        assert pc_adjusted_test(x, y, pc[:, None]).statistic == pytest.approx(expected)

    def test_phenotype_explained_by_components(self, rng):
        pc = rng.normal(size=30)
        x = rng.binomial(2, 0.4, size=30).astype(float)
        result = pc_adjusted_test(x, 2.0 * pc + 1.0, pc[:, None])
        assert result.statistic == 0.0
        assert result.flag == "phenotype_explained"

    def test_genotype_explained_by_components_is_na(self, rng):
        pc = rng.normal(size=30)
        result = pc_adjusted_test(3.0 * pc, rng.normal(size=30), pc[:, None])
        assert result.is_na

    def test_invariant_to_adding_components(self, rng):
        x = rng.binomial(2, 0.3, size=40).astype(float)
        y = rng.normal(size=40)
        pcs = rng.normal(size=(40, 3))
        base = pc_adjusted_test(x, y, pcs).statistic
        shifted_x = pc_adjusted_test(x + pcs @ [0.5, -2.0, 1.0] + 3.0, y, pcs).statistic
        shifted_y = pc_adjusted_test(x, y + pcs @ [-1.0, 0.2, 4.0], pcs).statistic
        assert shifted_x == pytest.approx(base)
        assert shifted_y == pytest.approx(base)

    def test_redundant_components_do_not_cost_degrees_of_freedom(self, rng):
        x = rng.binomial(2, 0.3, size=40).astype(float)
        y = rng.normal(size=40)
        pc = rng.normal(size=40)
        single = pc_adjusted_test(x, y, pc[:, None]).statistic
        assert pc_adjusted_test(x, y, np.column_stack([pc, -2.0 * pc])).statistic == pytest.approx(
            single
        )

    def test_island_components_spanning_the_constant(self, rng):
        labels = np.repeat([0, 1, 2], 20)
        islands = np.eye(3)[labels]
        pcs = principal_components(true_kinship(islands, 0.1), 3)
        x = rng.binomial(2, 0.3, size=60).astype(float)
        y = rng.normal(size=60)
        rx = x - islands @ np.linalg.lstsq(islands, x, rcond=None)[0]
        ry = y - islands @ np.linalg.lstsq(islands, y, rcond=None)[0]
        # [1, PC1..PC3] has rank 3, so 57 residual degrees of freedom
        expected = 57 * _squared_correlation(rx, ry)
        assert pc_adjusted_test(x, y, pcs).statistic == pytest.approx(expected)

    def test_too_many_components(self, rng):
        with pytest.raises(KinwardValidationError):
            PcAdjuster(rng.normal(size=5), rng.normal(size=(5, 3)))


class TestLdPrune:
    def test_duplicates_and_monomorphic_columns_are_dropped(self, rng):
        base = rng.binomial(2, 0.4, size=200)
        other = rng.binomial(2, 0.3, size=200)
        counts = np.column_stack([base, base, np.zeros(200, dtype=int), other])
        g = GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, bool))
        np.testing.assert_array_equal(ld_prune(g, 0.8), [0, 3])

    def test_threshold_range(self, unrelated_panel):
        g, _, _ = unrelated_panel
        with pytest.raises(KinwardValidationError):
            ld_prune(g, 0.0)


class TestMixedModel:
    def test_unrelated_score_is_n_r_squared(self, identity_kinship, rng):
        x = rng.binomial(2, 0.3, size=60).astype(float)
        y = rng.normal(size=60)
        result = mm_test(x, y, identity_kinship(60), mode=MixedModelMode.SCORE)
        assert result.statistic == pytest.approx(60 * _squared_correlation(x, y), rel=1e-6)

    def test_unrelated_lrt_matches_regression(self, identity_kinship, rng):
        x = rng.binomial(2, 0.3, size=60).astype(float)
        y = 0.3 * x + rng.normal(size=60)
        model = MixedModel(y, identity_kinship(60))
        expected = -60 * np.log(1.0 - _squared_correlation(x, y))
        assert model.lrt(x).statistic == pytest.approx(expected, rel=1e-6)
        ll_gap = model.log_likelihood(0.0, x) - model.log_likelihood(0.0)
        assert 2.0 * ll_gap == pytest.approx(expected, rel=1e-6)

    def test_lrt_is_non_negative(self, rng):
        K = _related_kinship(rng, 80)
        y = rng.normal(size=80)
        model = MixedModel(y, K)
        X = rng.binomial(2, 0.25, size=(80, 15)).astype(float)
        for result in model.scan(X, n_jobs=1):
            assert result.statistic >= 0.0

    def test_optimum_beats_the_grid(self, rng):
        K = _related_kinship(rng, 80)
        y = rng.normal(size=80)
        model = MixedModel(y, K)
        best_on_grid = max(model.log_likelihood(h) for h in H2_GRID)
        assert model.fit_null().log_likelihood >= best_on_grid - 1e-9

    def test_threaded_scan_matches_serial(self, rng):
        K = _related_kinship(rng, 50)
        model = MixedModel(rng.normal(size=50), K)
        X = rng.binomial(2, 0.3, size=(50, 6)).astype(float)
        serial = model.scan(X, mode=MixedModelMode.SCORE, n_jobs=1)
        threaded = model.scan(X, mode=MixedModelMode.SCORE, n_jobs=2)
        for a, b in zip(serial, threaded):
            assert a.statistic == pytest.approx(b.statistic)

    def test_approximate_lrt_keeps_null_heritability(self, rng):
        K = _related_kinship(rng, 60)
        y = rng.normal(size=60)
        x = rng.binomial(2, 0.3, size=60).astype(float)
        model = MixedModel(y, K)
        h2 = model.fit_null().h2
        expected = 2.0 * (model.log_likelihood(h2, x) - model.fit_null().log_likelihood)
        assert model.lrt(x, approximate=True).statistic == pytest.approx(max(expected, 0.0))

    def test_noise_has_near_zero_heritability(self, rng):
        K = _family_kinship(100, 20, 0.25)
        fit = fit_mixed_null(rng.normal(size=2000), K)
        assert fit.h2 < 0.05

    def test_recovers_high_heritability(self, rng):
        K = _family_kinship(1000, 2, 0.5)
        y = _family_phenotype(rng, 1000, 2, 0.5, h2=0.8)
        assert 0.7 <= fit_mixed_null(y, K).h2 <= 0.9

    def test_score_tracks_lrt_for_weak_effects(self, rng):
        K = _family_kinship(40, 10, 0.25)
        X = _sibship_genotypes(rng, 40, 10, 5)
        y = 0.15 * (X - X.mean(axis=0)).sum(axis=1) + _family_phenotype(rng, 40, 10, 0.25, h2=0.5)
        model = MixedModel(y, K)
        lrt = model.scan(X, MixedModelMode.LRT, n_jobs=1)
        score = model.scan(X, MixedModelMode.SCORE, n_jobs=1)
        for a, b in zip(lrt, score):
            assert abs(a.statistic - b.statistic) <= 0.15 * max(a.statistic, 1.0)

    def test_constant_genotype_is_na(self, identity_kinship, rng):
        assert mm_test(np.ones(10), rng.normal(size=10), identity_kinship(10)).is_na

    def test_failed_alternative_falls_back_to_score(self, rng):
        K = _related_kinship(rng, 40)
        model = MixedModel(rng.normal(size=40), K)
        x = rng.binomial(2, 0.3, size=40).astype(float)
        maximize = model._maximize

        def failing(Ct, start=None):
            if start is not None:
                raise NumericalError("no convergence")
            return maximize(Ct)

        model._maximize = failing
        result = model.lrt(x)
        assert result.flag == "score_fallback"
        assert result.statistic == pytest.approx(model.score(x).statistic)

    def test_indefinite_kinship_is_rejected(self):
        K = np.array([[0.5, 0.9, 0.0], [0.9, 0.5, 0.0], [0.0, 0.0, 0.5]])
        with pytest.raises(NumericalError):
            MixedModel(np.array([0.1, 0.5, 0.9]), K)

    def test_needs_three_individuals(self):
        with pytest.raises(KinwardValidationError):
            MixedModel(np.array([0.0, 1.0]), np.eye(2) / 2)


class TestGrammar:
    def test_blup_matches_explicit_formula(self, rng):
        A = rng.normal(size=(4, 4))
        K = 0.1 * A @ A.T + 0.5 * np.eye(4)
        y = rng.normal(size=4)
        fit = MixedModelFit(h2=0.4, sigma2=1.0, alpha=0.3, beta=0.0, log_likelihood=0.0)
        G = 2.0 * 0.4 * K
        expected = G @ np.linalg.solve(G + 0.6 * np.eye(4), y - 0.3)
        np.testing.assert_allclose(MixedModel(y, K).blup(fit), expected, atol=1e-10)
        np.testing.assert_allclose(grammar_residuals(y, fit, K), y - 0.3 - expected, atol=1e-10)

    def test_zero_heritability_is_regression(self, rng):
        n = 50
        K = _related_kinship(rng, n)
        x = rng.binomial(2, 0.3, size=n).astype(float)
        y = rng.normal(size=n)
        fit = MixedModelFit(h2=0.0, sigma2=1.0, alpha=float(y.mean()), beta=0.0, log_likelihood=0.0)
        r2 = _squared_correlation(x, y)
        result = grammar_test(x, y, fit, K)
        assert result.statistic == pytest.approx((n - 2) * r2 / (1.0 - r2))

    def test_no_less_conservative_than_mixed_model(self, rng):
        K = _family_kinship(40, 10, 0.25)
        X = _sibship_genotypes(rng, 40, 10, 400)
        y = _family_phenotype(rng, 40, 10, 0.25, h2=0.6)
        model = MixedModel(y, K)
        mm = np.array([r.statistic for r in model.scan(X, n_jobs=1)])
        residuals = grammar_residuals(y, model.fit_null(), model)
        grammar = np.array([r.statistic for r in grammar_scan(residuals, X)])
        assert grammar.mean() <= mm.mean()

    def test_scan_flags_constant_genotype(self, rng):
        results = grammar_scan(rng.normal(size=10), np.column_stack([np.ones(10), np.arange(10.0)]))
        assert results[0].flag == "constant"
        assert not results[1].is_na
