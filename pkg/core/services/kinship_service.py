from typing import Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from adapters.loggers.logger_adapter import app_logger
from config import Config
from core.domain.exceptions import KinshipError, KinwardException
from core.domain.genotype_model import AlleleFrequencies, GenotypeMatrix, Pedigree
from core.domain.kinship_model import (
    PSD_TOL,
    KinshipMatrix,
    KinshipMethod,
    KinshipRequest,
    KinshipResponse,
)
from core.interfaces.genotype_store_interface import GenotypeStoreInterface
from core.interfaces.kinship_service_interface import KinshipServiceInterface
from core.services.genotype_service import (
    clamp_frequencies,
    drop_monomorphic,
    estimate_frequencies,
    monomorphic_mask,
    standardize_genotypes,
)
from utils.linalg import factor_kinship


def pedigree_kinship(
    ped: Pedigree, founder_kinship: Optional[np.ndarray] = None
) -> KinshipMatrix:
    """Recursive kinship through a topologically ordered pedigree, no mutation."""
    founders = ped.founders
    if founder_kinship is None:
        founder_kinship = np.eye(len(founders)) / 2.0
    else:
        founder_kinship = np.asarray(founder_kinship, dtype=float)
        if founder_kinship.shape != (len(founders), len(founders)):
            raise KinshipError("Founder kinship must have one row per founder")
        if not np.allclose(founder_kinship, founder_kinship.T, atol=1e-12):
            raise KinshipError("Founder kinship must be symmetric")
        if np.linalg.eigvalsh(founder_kinship)[0] < -PSD_TOL:
            raise KinshipError("Founder kinship must be positive semi-definite")

    index = ped.index_of()
    K = np.zeros((ped.n, ped.n))
    founder_rows = np.array([index[f] for f in founders], dtype=int)
    K[np.ix_(founder_rows, founder_rows)] = founder_kinship

    done = list(founder_rows)
    for member in ped.members:
        if ped.is_founder(member):
            continue
        i = index[member]
        m, f = index[ped.mother[member]], index[ped.father[member]]
        others = np.array(done, dtype=int)
        # every processed member precedes i, so none descends from i
        K[i, others] = (K[m, others] + K[f, others]) / 2.0
        K[others, i] = K[i, others]
        K[i, i] = (1.0 + K[m, f]) / 2.0
        done.append(i)
    return KinshipMatrix(K=K, ids=ped.members)


def _outer_block(z: np.ndarray) -> np.ndarray:
    return z @ z.T


def kinship_correlation(
    g: GenotypeMatrix,
    p: AlleleFrequencies,
    block: Optional[int] = None,
    n_jobs: Optional[int] = None,
) -> KinshipMatrix:
    """K = (1/L) sum_l z_l z_l^T with z the standardized genotypes.

    Partial sums over SNP blocks are reduced in block order, so the result
    does not depend on the worker count.
    """
    block = block or Config.SNP_BLOCK
    n_jobs = n_jobs or Config.N_JOBS
    if monomorphic_mask(g).all():
        raise KinshipError("No polymorphic SNP available for kinship estimation")

    z = standardize_genotypes(g, p)
    starts = range(0, g.L, block)
    if n_jobs == 1:
        K = np.zeros((g.n, g.n))
        for start in starts:
            K += _outer_block(z[:, start:start + block])
    else:
        parts = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_outer_block)(z[:, start:start + block]) for start in starts
        )
        K = np.zeros((g.n, g.n))
        for part in parts:
            K += part
    K /= g.L
    return KinshipMatrix(K=(K + K.T) / 2.0)


def kinship_ibs(g: GenotypeMatrix) -> KinshipMatrix:
    """Average IBS probability over SNPs observed in both members of each pair."""
    observed = (~g.missing).astype(float)
    centred = (g.counts - 1.0) * observed
    shared = observed @ observed.T
    if np.any(shared == 0):
        i, j = np.argwhere(shared == 0)[0]
        raise KinshipError(f"Individuals {i} and {j} share no jointly observed SNP")
    K = (centred @ centred.T) / (2.0 * shared) + 0.5
    return KinshipMatrix(K=(K + K.T) / 2.0)


def reestimate_frequencies(
    g: GenotypeMatrix, K: KinshipMatrix, clamp: bool = True
) -> AlleleFrequencies:
    """p_l = 1'K^-1 x_l / (2 1'K^-1 1), missing genotypes dropped from both sums."""
    factor = factor_kinship(K.K)
    if factor.ridged:
        app_logger.debug("Ridge applied to kinship before frequency re-estimation")
    w = factor.solve(np.ones(g.n))
    observed = (~g.missing).astype(float)
    numerator = w @ (g.counts * observed)
    denominator = 2.0 * (w @ observed)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = numerator / denominator
    p = np.where(np.isfinite(p), p, 0.5)
    if clamp:
        p = clamp_frequencies(p, g.n)
    else:
        p = np.clip(p, 0.0, 1.0)
    return AlleleFrequencies(p=p)


def refine_kinship(
    g: GenotypeMatrix,
    iterations: Optional[int] = None,
    tol: Optional[float] = None,
) -> Tuple[KinshipMatrix, AlleleFrequencies, int]:
    """Alternate kinship and frequency estimates, starting from naive frequencies."""
    iterations = Config.FREQ_ITERS if iterations is None else iterations
    tol = Config.FREQ_TOL if tol is None else tol
    p = estimate_frequencies(g)
    K = kinship_correlation(g, p)
    used = 0
    for used in range(1, iterations + 1):
        p_next = reestimate_frequencies(g, K)
        change = float(np.max(np.abs(p_next.p - p.p)))
        p = p_next
        K = kinship_correlation(g, p)
        app_logger.debug("Frequency refinement %d: max change %.3g", used, change)
        if change < tol:
            break
    return K, p, used


def estimate_kinship(
    g: GenotypeMatrix, method: KinshipMethod, freq_iters: Optional[int] = None
) -> Tuple[KinshipMatrix, int]:
    """Marker-based kinship on polymorphic SNPs; returns the excluded SNP count."""
    method = KinshipMethod(method)
    polymorphic, kept = drop_monomorphic(g)
    if kept.size == 0:
        raise KinshipError("No polymorphic SNP available for kinship estimation")
    excluded = g.L - kept.size
    if method is KinshipMethod.IBS:
        return kinship_ibs(polymorphic), excluded
    if method is KinshipMethod.CORRELATION:
        K, _, _ = refine_kinship(polymorphic, iterations=freq_iters)
        return K, excluded
    raise KinshipError(f"Method {method.value} is not marker based")


class KinshipDomainService(KinshipServiceInterface):
    def __init__(self, store: GenotypeStoreInterface) -> None:
        self.store = store

    def process_kinship_request(self, request: KinshipRequest) -> KinshipResponse:
        try:
            if request.method is KinshipMethod.PEDIGREE:
                pedigree = self.store.read_pedigree(request.pedigree_path)
                kinship, excluded = pedigree_kinship(pedigree), 0
            else:
                genotypes = self.store.read_genotypes(request.genotypes_path)
                app_logger.info(
                    "Estimating %s kinship for %d individuals at %d SNPs",
                    request.method.value,
                    genotypes.n,
                    genotypes.L,
                )
                kinship, excluded = estimate_kinship(
                    genotypes, request.method, request.freq_iters
                )

            if request.out_path:
                self.store.write_matrix(request.out_path, kinship)

            return KinshipResponse(success=True, kinship=kinship, excluded_snps=excluded)

        except KinwardException as kinship_error:

            return KinshipResponse(success=False, error_message=str(kinship_error))

        except (ValueError, TypeError) as e:

            return KinshipResponse(
                success=False,
                error_message=f"Processing error during kinship estimation: {str(e)}",
            )

        except OSError as system_error:

            return KinshipResponse(
                success=False,
                error_message=f"System error during kinship estimation: {str(system_error)}",
            )


def gene_drop(ped: Pedigree, n_loci: int, rng: np.random.Generator) -> np.ndarray:
    """Founder-allele labels, shape (n, 2, n_loci), dropped through the pedigree.

    Founder f carries labels 2f and 2f + 1; each child takes one random copy
    from its mother (slot 0) and one from its father (slot 1).
    """
    index = ped.index_of()
    labels = np.empty((ped.n, 2, n_loci), dtype=np.int64)
    founder = 0
    loci = np.arange(n_loci)
    for member in ped.members:
        i = index[member]
        if ped.is_founder(member):
            labels[i, 0], labels[i, 1] = 2 * founder, 2 * founder + 1
            founder += 1
            continue
        for slot, parent in enumerate((ped.mother[member], ped.father[member])):
            pick = rng.integers(0, 2, size=n_loci)
            labels[i, slot] = labels[index[parent], pick, loci]
    return labels


def gene_drop_kinship(labels: np.ndarray) -> np.ndarray:
    """Monte Carlo kinship from dropped labels: IBD rate of two randomly drawn alleles."""
    n = labels.shape[0]
    K = np.zeros((n, n))
    for a in range(2):
        for b in range(2):
            K += (labels[:, a, None, :] == labels[None, :, b, :]).mean(axis=2)
    K /= 4.0
    within = (labels[:, 0] == labels[:, 1]).mean(axis=1)
    K[np.diag_indices(n)] = (1.0 + within) / 2.0
    return K


def drop_pedigree_genotypes(
    ped: Pedigree, p: np.ndarray, rng: np.random.Generator
) -> GenotypeMatrix:
    """Genotypes through a pedigree with founder alleles drawn fresh from Bernoulli(p)."""
    p = np.asarray(p, dtype=float)
    labels = gene_drop(ped, p.size, rng)
    alleles = (rng.random((2 * len(ped.founders), p.size)) < p).astype(np.int8)
    loci = np.arange(p.size)
    counts = alleles[labels[:, 0], loci] + alleles[labels[:, 1], loci]
    return GenotypeMatrix(counts=counts, missing=np.zeros_like(counts, dtype=bool))
