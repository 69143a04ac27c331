import numpy as np
import pytest

from adapters.storage.memory_store import MemoryStore
from core.domain.exceptions import KinshipError, PedigreeError
from core.domain.genotype_model import AlleleFrequencies, GenotypeMatrix, Pedigree
from core.domain.kinship_model import KinshipMatrix, KinshipMethod, KinshipRequest
from core.services.kinship_service import (
    KinshipDomainService,
    drop_pedigree_genotypes,
    estimate_kinship,
    gene_drop,
    gene_drop_kinship,
    kinship_correlation,
    kinship_ibs,
    pedigree_kinship,
    reestimate_frequencies,
)
from core.services.simulation_service import COUSIN_PEDIGREE


def _matrix(rows):
    return GenotypeMatrix.from_array(np.array(rows, dtype=float))


class TestPedigreeKinship:
    def test_textbook_relationships(self, nuclear_family):
        K = pedigree_kinship(nuclear_family)
        idx = nuclear_family.index_of()
        assert K.K[idx["dad"], idx["dad"]] == pytest.approx(0.5)
        assert K.K[idx["dad"], idx["mum"]] == 0.0
        assert K.K[idx["dad"], idx["sib1"]] == pytest.approx(0.25)
        assert K.K[idx["sib1"], idx["sib2"]] == pytest.approx(0.25)
        assert K.K[idx["sib2"], idx["kid"]] == pytest.approx(0.125)
        assert K.K[idx["dad"], idx["kid"]] == pytest.approx(0.125)
        assert K.ids == nuclear_family.members

    def test_first_cousins(self):
        K = pedigree_kinship(COUSIN_PEDIGREE)
        idx = COUSIN_PEDIGREE.index_of()
        assert K.K[idx["c1"], idx["c2"]] == pytest.approx(1 / 16)

    def test_inbred_child_of_siblings(self):
        ped = Pedigree(
            members=("a", "b", "s1", "s2", "x"),
            mother={"s1": "a", "s2": "a", "x": "s1"},
            father={"s1": "b", "s2": "b", "x": "s2"},
        )
        K = pedigree_kinship(ped)
        assert K.K[4, 4] == pytest.approx(0.625)
        assert K.inbreeding[4] == pytest.approx(0.25)

    def test_child_before_parent_is_rejected(self):
        with pytest.raises(PedigreeError):
            Pedigree(members=("kid", "mum", "dad"), mother={"kid": "mum"}, father={"kid": "dad"})

    def test_one_recorded_parent_is_rejected(self):
        with pytest.raises(PedigreeError):
            Pedigree(members=("mum", "kid"), mother={"kid": "mum"})

    def test_founder_matrix_must_be_psd(self, nuclear_family):
        bad = np.array([[0.5, 0.9, 0.0], [0.9, 0.5, 0.0], [0.0, 0.0, 0.5]])
        with pytest.raises(KinshipError):
            pedigree_kinship(nuclear_family, founder_kinship=bad)

    def test_gene_drop_agrees_with_recursion(self):
        rng = np.random.default_rng(11)
        labels = gene_drop(COUSIN_PEDIGREE, 200_000, rng)
        mc = gene_drop_kinship(labels)
        exact = pedigree_kinship(COUSIN_PEDIGREE).K
        np.testing.assert_allclose(mc, exact, atol=0.005)


class TestCorrelationKinship:
    def test_unrelated_sample_converges(self):
        rng = np.random.default_rng(3)
        p = rng.uniform(0.05, 0.5, size=10_000)
        counts = rng.binomial(2, np.broadcast_to(p, (20, 10_000)))
        g = GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, bool))
        K = kinship_correlation(g, AlleleFrequencies(p=p)).K
        off = K[~np.eye(20, dtype=bool)]
        np.testing.assert_allclose(off, 0.0, atol=0.03)
        np.testing.assert_allclose(np.diag(K), 0.5, atol=0.03)

    def test_unbiased_over_gene_drop_replicates(self):
        rng = np.random.default_rng(23)
        p = rng.uniform(0.1, 0.5, size=500)
        freqs = AlleleFrequencies(p=p)
        estimates = [
            kinship_correlation(drop_pedigree_genotypes(COUSIN_PEDIGREE, p, rng), freqs).K
            for _ in range(200)
        ]
        expected = pedigree_kinship(COUSIN_PEDIGREE).K
        np.testing.assert_allclose(np.mean(estimates, axis=0), expected, atol=0.01)

    def test_duplicate_rows_match_diagonal(self, rng):
        counts = rng.binomial(2, 0.3, size=(6, 50))
        counts[5] = counts[0]
        g = GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, bool))
        K, _ = estimate_kinship(g, KinshipMethod.CORRELATION, freq_iters=0)
        assert K.K[0, 5] == pytest.approx(K.K[0, 0])

    def test_estimate_is_psd_and_block_invariant(self, unrelated_panel):
        g, _, p = unrelated_panel
        freqs = AlleleFrequencies(p=p)
        whole = kinship_correlation(g, freqs, block=10_000)
        blocked = kinship_correlation(g, freqs, block=7)
        np.testing.assert_allclose(whole.K, blocked.K, atol=1e-12)
        assert whole.is_psd()

    def test_monomorphic_columns_are_excluded(self):
        g = _matrix([[0, 1, 2], [0, 0, 1], [0, 2, 2], [0, 1, 0]])
        _, excluded = estimate_kinship(g, KinshipMethod.CORRELATION)
        assert excluded == 1

    def test_all_monomorphic_is_an_error(self):
        g = _matrix([[0, 2], [0, 2]])
        with pytest.raises(KinshipError):
            estimate_kinship(g, KinshipMethod.CORRELATION)


class TestIbsKinship:
    def test_heterozygote_pair(self):
        K = kinship_ibs(_matrix([[1], [1]])).K
        assert K[0, 1] == pytest.approx(0.5)

    def test_opposite_homozygotes(self):
        K = kinship_ibs(_matrix([[0], [2]])).K
        assert K[0, 1] == pytest.approx(0.0)

    def test_homozygote_with_itself(self):
        K = kinship_ibs(_matrix([[2, 2, 2], [0, 1, 2]])).K
        assert K[0, 0] == pytest.approx(1.0)

    def test_pair_without_shared_snps(self):
        g = _matrix([[1, np.nan], [np.nan, 1], [1, 1]])
        with pytest.raises(KinshipError):
            kinship_ibs(g)


class TestFrequencyReestimation:
    def test_identity_kinship_gives_naive_estimate(self):
        g = _matrix([[0, 2], [1, 1], [2, 1], [1, 0]])
        p = reestimate_frequencies(g, KinshipMatrix.unrelated(4), clamp=False).p
        np.testing.assert_allclose(p, [0.5, 0.5])

    def test_constant_two_column_before_clamping(self):
        g = _matrix([[2, 0], [2, 1], [2, 2]])
        p = reestimate_frequencies(g, KinshipMatrix.unrelated(3), clamp=False).p
        assert p[0] == pytest.approx(1.0)

    def test_duplicated_panel_matches_deduplicated(self):
        base = np.array([[0, 1], [2, 1], [1, 2]], dtype=float)
        K_base = np.array([[0.5, 0.1, 0.0], [0.1, 0.5, 0.05], [0.0, 0.05, 0.5]])
        duplicated = np.vstack([base, base])
        K_dup = np.block([[K_base, K_base], [K_base, K_base]]) + 1e-3 * np.eye(6)
        single = reestimate_frequencies(
            GenotypeMatrix.from_array(base), KinshipMatrix(K=K_base + 5e-4 * np.eye(3)), clamp=False
        ).p
        double = reestimate_frequencies(
            GenotypeMatrix.from_array(duplicated), KinshipMatrix(K=K_dup), clamp=False
        ).p
        np.testing.assert_allclose(single, double, atol=1e-9)


class TestKinshipDomainService:
    def test_marker_request_writes_matrix(self, unrelated_panel):
        g, _, _ = unrelated_panel
        store = MemoryStore()
        store.write_genotypes("g", g)
        response = KinshipDomainService(store).process_kinship_request(
            KinshipRequest(genotypes_path="g", method="ibs", out_path="k")
        )
        assert response.success
        assert store.read_matrix("k").n == g.n

    def test_pedigree_request(self, nuclear_family):
        store = MemoryStore()
        store.write_pedigree("ped", nuclear_family)
        response = KinshipDomainService(store).process_kinship_request(
            KinshipRequest(method="pedigree", pedigree_path="ped")
        )
        assert response.success
        assert response.kinship.K[2, 3] == pytest.approx(0.25)

    def test_missing_input_is_a_failed_response(self):
        response = KinshipDomainService(MemoryStore()).process_kinship_request(
            KinshipRequest(genotypes_path="absent")
        )
        assert not response.success
        assert "absent" in response.error_message
