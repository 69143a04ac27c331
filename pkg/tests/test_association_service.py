import itertools

import numpy as np
import pytest
from scipy import special, stats

from adapters.storage.memory_store import MemoryStore
from core.domain.assoc_model import AssociationRequest, Method, TestResult, TrioSet
from core.domain.exceptions import AssociationError
from core.domain.genotype_model import GenotypeMatrix, Pedigree, Phenotype, PhenotypeKind
from core.domain.kinship_model import KinshipMatrix
from core.services.association_service import (
    AssociationDomainService,
    McpScorer,
    ScanOptions,
    affected_trios,
    armitage,
    armitage_scan,
    association_scan,
    count_transmissions,
    mcp_score,
    tdt,
    tdt_scan,
    trio_rows,
    trios_from_pedigree,
)
from core.services.evaluation_service import type1_error
from core.services.kinship_service import pedigree_kinship


def _phenotype(*values):
    return Phenotype(values=np.array(values, dtype=float))


class TestResultModel:
    def test_p_value_matches_incomplete_gamma(self):
        result = TestResult.chi2(0, "armitage", 3.84)
        assert result.p_value == pytest.approx(special.gammaincc(0.5, 1.92), abs=1e-12)

    def test_na_result(self):
        result = TestResult.na(4, Method.MCP, flag="degenerate")
        assert result.is_na
        assert np.isnan(result.p_value)
        assert result.method == "mcp"

    def test_negative_statistic_is_rejected(self):
        with pytest.raises(ValueError):
            TestResult(snp_index=0, method="x", statistic=-1.0)


class TestArmitage:
    def test_hand_computed_example(self):
        result = armitage([2, 2, 0, 0], _phenotype(1, 1, 0, 0))
        assert result.statistic == pytest.approx(4.0)
        assert result.df == 1

    def test_equal_allele_fractions_give_zero(self):
        result = armitage([0, 1, 2, 2, 1, 0], _phenotype(1, 1, 1, 0, 0, 0))
        assert result.statistic == pytest.approx(0.0)
        assert result.p_value == pytest.approx(1.0)

    def test_swapping_cases_and_controls_is_invariant(self, rng):
        x = rng.binomial(2, 0.3, size=40).astype(float)
        y = np.r_[np.ones(15), np.zeros(25)]
        a = armitage(x, Phenotype(values=y)).statistic
        b = armitage(x, Phenotype(values=1.0 - y)).statistic
        assert a == pytest.approx(b)

    def test_equals_n_times_squared_correlation(self, rng):
        x = rng.binomial(2, 0.4, size=60).astype(float)
        y = (rng.random(60) < 0.5).astype(float)
        y[:2] = (0.0, 1.0)
        r = np.corrcoef(x, y)[0, 1]
        assert armitage(x, Phenotype(values=y)).statistic == pytest.approx(60 * r ** 2)

    def test_constant_genotype_is_na(self):
        result = armitage([1, 1, 1, 1], _phenotype(1, 0, 1, 0))
        assert result.is_na
        assert result.flag == "constant"

    def test_missing_genotypes_are_dropped(self):
        with_missing = armitage([2, 2, np.nan, 0, 0], _phenotype(1, 1, 1, 0, 0))
        assert with_missing.statistic == pytest.approx(4.0)

    def test_quantitative_phenotype_is_rejected(self):
        y = Phenotype(values=np.array([0.1, 2.0, 3.0]), kind="quantitative")
        with pytest.raises(AssociationError):
            armitage([0, 1, 2], y)

    def test_scan_matches_single_snp(self, unrelated_panel):
        g, y, _ = unrelated_panel
        scanned = armitage_scan(g, y)
        for col in (0, 17, 399):
            single = armitage(g.counts[:, col], y, snp_index=col)
            assert scanned[col].statistic == pytest.approx(single.statistic)

    def test_null_median_matches_chi_square(self):
        rng = np.random.default_rng(5)
        p = rng.uniform(0.05, 0.5, size=20_000)
        counts = rng.binomial(2, np.broadcast_to(p, (300, 20_000)))
        g = GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, bool))
        y = Phenotype(values=np.r_[np.ones(150), np.zeros(150)])
        chi2 = np.array([r.statistic for r in armitage_scan(g, y)])
        assert 0.43 <= np.nanmedian(chi2) <= 0.48


class TestTdt:
    def test_balanced_transmission(self):
        trios = TrioSet(trios=((1, 0, 1), (1, 0, 0)))
        assert tdt(trios).statistic == 0.0

    def test_sixty_forty(self):
        trios = TrioSet(trios=((1, 0, 1),) * 40 + ((1, 0, 0),) * 60)
        assert count_transmissions(trios) == (60, 40)
        result = tdt(trios)
        assert result.statistic == pytest.approx(4.0)
        assert result.exact_p_value == pytest.approx(0.0569, abs=5e-4)

    def test_heterozygote_by_homozygote_transmits_one_allele(self):
        assert count_transmissions(TrioSet(trios=((1, 2, 2),))) == (0, 1)
        assert count_transmissions(TrioSet(trios=((1, 2, 1),))) == (1, 0)

    def test_enumeration_over_mendelian_outcomes(self):
        gametes = {0: (0,), 1: (0, 1), 2: (1,)}
        for father, mother in itertools.product(range(3), repeat=2):
            for a, b in itertools.product(gametes[father], gametes[mother]):
                n_a, n_A = count_transmissions(TrioSet(trios=((father, mother, a + b),)))
                expected_A = (a if father == 1 else 0) + (b if mother == 1 else 0)
                hets = (father == 1) + (mother == 1)
                assert n_A == expected_A
                assert n_a == hets - expected_A

    def test_mendelian_error_is_rejected(self):
        with pytest.raises(ValueError):
            TrioSet(trios=((0, 0, 2),))

    def test_no_informative_parent(self):
        with pytest.raises(AssociationError):
            tdt(TrioSet(trios=((0, 2, 1),)))

    def test_scan_flags_uninformative_and_skips_errors(self):
        counts = np.array(
            [
                [1, 0, 0],
                [0, 0, 0],
                [1, 0, 2],
                [1, 2, 2],
                [0, 2, 2],
                [0, 2, 2],
            ]
        )
        g = GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, bool))
        results = tdt_scan(g, [(0, 1, 2), (3, 4, 5)])
        assert results[0].statistic == pytest.approx(0.0)
        assert results[1].flag == "uninformative"
        # trio 1 is a Mendelian error at SNP 2; trio 2 is uninformative there
        assert results[2].flag == "uninformative"

    def test_trio_ids_map_to_rows(self):
        rows = trio_rows([("f", "m", "c")], ("c", "m", "f"))
        assert rows == [(2, 1, 0)]
        with pytest.raises(AssociationError):
            trio_rows([("f", "m", "x")], ("c", "m", "f"))

    def test_trios_from_pedigree_lists_non_founders(self, nuclear_family):
        assert trios_from_pedigree(nuclear_family) == [
            ("dad", "mum", "sib1"),
            ("dad", "mum", "sib2"),
            ("sib1", "spouse", "kid"),
        ]

    def test_affected_trios_keep_case_children(self):
        y = Phenotype(values=np.array([0, 0, 1, 0]), ids=("f", "m", "c1", "c2"))
        trios = [("f", "m", "c1"), ("f", "m", "c2"), ("f", "m", "c3")]
        assert affected_trios(trios, y) == [("f", "m", "c1")]

    def test_affected_trios_need_a_case_child(self):
        y = Phenotype(values=np.array([1, 1, 0]), ids=("f", "m", "c"))
        with pytest.raises(AssociationError):
            affected_trios([("f", "m", "c")], y)

    def test_quantitative_phenotype_keeps_all_trios(self):
        y = Phenotype(
            values=np.array([0.3, -1.2, 0.8]), kind=PhenotypeKind.QUANTITATIVE, ids=("f", "m", "c")
        )
        assert affected_trios([("f", "m", "c")], y) == [("f", "m", "c")]


class TestMcp:
    def test_projection_annihilates_constants(self, rng):
        K = KinshipMatrix(K=np.eye(6) / 2.0 + 0.05)
        scorer = McpScorer(K)
        np.testing.assert_allclose(scorer.P @ np.ones(6), 0.0, atol=1e-12)
        T, _ = scorer.components(np.full(6, 2.0), rng.random(6))
        assert T == pytest.approx(0.0, abs=1e-12)

    def test_constant_genotype_is_na(self, identity_kinship):
        result = mcp_score(np.ones(4), _phenotype(1, 0, 1, 0), identity_kinship(4))
        assert result.is_na

    def test_identity_kinship_is_mean_difference(self, identity_kinship, rng):
        x = rng.binomial(2, 0.3, size=30).astype(float)
        y = np.r_[np.ones(12), np.zeros(18)]
        T, _ = McpScorer(identity_kinship(30)).components(x, y)
        n1, n0 = 12, 18
        difference = x[:12].mean() - x[12:].mean()
        assert T == pytest.approx(2.0 * difference * n1 * n0 / 30)

    def test_identity_kinship_relates_to_armitage(self, identity_kinship, rng):
        x = rng.binomial(2, 0.35, size=50).astype(float)
        y = np.r_[np.ones(20), np.zeros(30)]
        mcp = mcp_score(x, y, identity_kinship(50)).statistic
        r2 = np.corrcoef(x, y)[0, 1] ** 2
        assert mcp == pytest.approx(49 * r2 / (1 - r2))

    def test_genotype_and_phenotype_roles_are_symmetric(self, rng):
        B = rng.normal(size=(25, 25))
        K = KinshipMatrix(K=0.5 * np.eye(25) + 0.02 * B @ B.T / 25)
        x = rng.binomial(2, 0.4, size=25).astype(float)
        y = rng.normal(size=25)
        forward = mcp_score(x, y, K).statistic
        assert mcp_score(y, x, K).statistic == pytest.approx(forward, rel=1e-9)

    def test_case_control_swap_is_invariant(self, rng):
        A = rng.normal(size=(8, 8))
        K = KinshipMatrix(K=(A @ A.T) / 16 + np.eye(8) / 2)
        x = rng.binomial(2, 0.5, size=8).astype(float)
        y = np.r_[np.ones(4), np.zeros(4)]
        a = mcp_score(x, y, K).statistic
        b = mcp_score(x, 1.0 - y, K).statistic
        assert a == pytest.approx(b)

    def test_constant_phenotype_is_rejected(self, identity_kinship):
        with pytest.raises(AssociationError):
            mcp_score([0, 1, 2], [1, 1, 1], identity_kinship(3))

    def test_trio_score_matches_tdt_numerator(self):
        ped = Pedigree(members=("f", "m", "c"), mother={"c": "m"}, father={"c": "f"})
        K = pedigree_kinship(ped)
        y = np.array([0.0, 0.0, 1.0])
        scorer = McpScorer(K)
        for father, mother in itertools.product(range(3), repeat=2):
            if (father == 1) + (mother == 1) == 0:
                continue
            for child in range(3):
                try:
                    trios = TrioSet(trios=((father, mother, child),))
                except ValueError:
                    continue
                n_a, n_A = count_transmissions(trios)
                T, _ = scorer.components(np.array([father, mother, child], float), y)
                assert T ** 2 == pytest.approx(4.0 * (n_A - n_a) ** 2)

    def test_scan_matches_single_snp(self, unrelated_panel, rng):
        g, y, _ = unrelated_panel
        A = rng.normal(size=(g.n, 5))
        K = KinshipMatrix(K=np.eye(g.n) / 2 + A @ A.T / 100)
        X = g.counts[:, :5].astype(float)
        scanned = McpScorer(K).scan(X, y.values)
        for col in range(5):
            single = mcp_score(X[:, col], y, K, snp_index=col)
            assert scanned[col].statistic == pytest.approx(single.statistic)


class TestAssociationScan:
    def test_monomorphic_snps_are_reported(self):
        counts = np.array([[0, 2, 1], [0, 1, 1], [0, 0, 2], [0, 1, 0]])
        g = GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, bool))
        results, excluded = association_scan(g, _phenotype(1, 1, 0, 0), Method.ARMITAGE)
        assert excluded == 1
        assert len(results) == 3
        assert results[0].flag == "monomorphic"
        assert [r.snp_index for r in results] == [0, 1, 2]

    @pytest.mark.parametrize("method", [Method.MCP, Method.PC, Method.MM, Method.GRAMMAR])
    def test_kinship_methods_return_one_result_per_snp(self, unrelated_panel, method):
        g, y, _ = unrelated_panel
        small = g.select_snps(np.arange(30))
        results, _ = association_scan(small, y, method, options=ScanOptions(num_pcs=2))
        assert len(results) == 30
        assert all(r.method == method.value for r in results)
        assert all(r.is_na or r.statistic >= 0.0 for r in results)

    def test_domain_service_runs_tdt_from_trio_ids(self):
        counts = np.array([[1], [0], [1], [1], [0], [0]])
        store = MemoryStore()
        store.write_genotypes("g", GenotypeMatrix(counts=counts, missing=np.zeros((6, 1), bool)))
        store.write_phenotypes(
            "y",
            Phenotype(values=np.array([0, 0, 1, 0, 0, 1.0]), ids=("f1", "m1", "c1", "f2", "m2", "c2")),
        )
        store.write_trios("t", [("f1", "m1", "c1"), ("f2", "m2", "c2")])
        response = AssociationDomainService(store).process_association_request(
            AssociationRequest(
                genotypes_path="g", method="tdt", phenotypes_path="y", trios_path="t", out_path="r"
            )
        )
        assert response.success
        assert response.results[0].statistic == pytest.approx(0.0)
        assert store.read_results("r")[0].exact_p_value == pytest.approx(1.0)

    def test_domain_service_derives_affected_trios_from_pedigree(self):
        ids = ("f1", "m1", "c1", "f2", "m2", "c2", "c3")
        counts = np.array([[1], [0], [1], [1], [0], [0], [1]])
        store = MemoryStore()
        store.write_genotypes("g", GenotypeMatrix(counts=counts, missing=np.zeros((7, 1), bool)))
        store.write_phenotypes("y", Phenotype(values=np.array([0, 0, 1, 0, 0, 1, 0.0]), ids=ids))
        store.write_pedigree(
            "p",
            Pedigree(
                members=ids,
                mother={"c1": "m1", "c2": "m2", "c3": "m2"},
                father={"c1": "f1", "c2": "f2", "c3": "f2"},
            ),
        )
        response = AssociationDomainService(store).process_association_request(
            AssociationRequest(
                genotypes_path="g", method="tdt", phenotypes_path="y", pedigree_path="p"
            )
        )
        assert response.success
        # the unaffected c3 would add a transmission of A
        assert response.results[0].statistic == pytest.approx(0.0)

    def test_tdt_request_needs_trios_or_pedigree(self):
        with pytest.raises(ValueError):
            AssociationRequest(genotypes_path="g", method="tdt", phenotypes_path="y")

    def test_domain_service_reports_failures(self):
        store = MemoryStore()
        store.write_genotypes("g", GenotypeMatrix.from_array(np.array([[0.0], [1.0], [2.0]])))
        store.write_phenotypes("y", Phenotype(values=np.array([1.0, 1.0])))
        response = AssociationDomainService(store).process_association_request(
            AssociationRequest(genotypes_path="g", method="armitage", phenotypes_path="y")
        )
        assert not response.success
        assert response.error_message


@pytest.fixture(scope="module")
def null_panel():
    """500 unrelated individuals, 250 cases, at 10,000 SNPs independent of status."""
    rng = np.random.default_rng(4242)
    p = rng.uniform(0.1, 0.5, size=10_000)
    counts = rng.binomial(2, np.broadcast_to(p, (500, 10_000)))
    g = GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, dtype=bool))
    return g, Phenotype(values=np.r_[np.ones(250), np.zeros(250)])


@pytest.mark.slow
class TestNullCalibration:
    def _check(self, results):
        p = np.array([r.p_value for r in results])
        assert type1_error(results, np.ones(len(results), dtype=bool), 0.05) == pytest.approx(
            0.05, abs=0.01
        )
        assert stats.kstest(p, "uniform").statistic < 0.02

    def test_armitage_scan(self, null_panel):
        g, y = null_panel
        self._check(armitage_scan(g, y))

    def test_mcp_scan_with_unrelated_kinship(self, null_panel, identity_kinship):
        g, y = null_panel
        scorer = McpScorer(identity_kinship(g.n))
        self._check(scorer.scan(g.counts.astype(float), y.values))
