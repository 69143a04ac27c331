from typing import Tuple

import numpy as np

from adapters.loggers.logger_adapter import app_logger
from core.domain.exceptions import DegenerateSnpError
from core.domain.genotype_model import AlleleFrequencies, GenotypeMatrix


def clamp_bounds(n: int) -> Tuple[float, float]:
    edge = 1.0 / (2 * n + 2)
    return edge, 1.0 - edge


def clamp_frequencies(p: np.ndarray, n: int) -> np.ndarray:
    low, high = clamp_bounds(n)
    return np.clip(p, low, high)


def estimate_frequencies(g: GenotypeMatrix, clamp: bool = True) -> AlleleFrequencies:
    """Naive estimate: non-missing allele total over twice the non-missing count."""
    observed = g.observed_counts()
    totals = g.counts.sum(axis=0, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = totals / (2.0 * observed)
    # SNPs with no observed genotype sit at 1/2 until clamped
    p = np.where(observed > 0, p, 0.5)
    if clamp:
        p = clamp_frequencies(p, g.n)
    return AlleleFrequencies(p=p)


def monomorphic_mask(g: GenotypeMatrix) -> np.ndarray:
    """True where the sample carries no copy of one of the two alleles."""
    observed = g.observed_counts()
    totals = g.counts.sum(axis=0, dtype=np.int64)
    return (totals == 0) | (totals == 2 * observed)


def drop_monomorphic(g: GenotypeMatrix) -> Tuple[GenotypeMatrix, np.ndarray]:
    """Return the polymorphic columns and the indices they came from."""
    mono = monomorphic_mask(g)
    kept = np.flatnonzero(~mono)
    if mono.any():
        app_logger.info("Excluding %d monomorphic SNPs of %d", int(mono.sum()), g.L)
    if kept.size == 0:
        return g, kept
    return g.select_snps(kept), kept


def standardize_genotypes(g: GenotypeMatrix, p: AlleleFrequencies) -> np.ndarray:
    """(x - 2p) / sqrt(4p(1-p)) per SNP; missing entries become 0."""
    if p.L != g.L:
        raise ValueError("One allele frequency per SNP is required")
    boundary = p.on_boundary()
    if boundary.any():
        raise DegenerateSnpError(
            f"Allele frequency at 0 or 1 for SNP(s) {np.flatnonzero(boundary)[:10].tolist()}"
        )
    scale = np.sqrt(4.0 * p.p * (1.0 - p.p))
    z = (g.counts - 2.0 * p.p) / scale
    z[g.missing] = 0.0
    return z


def impute_mean(g: GenotypeMatrix, p: AlleleFrequencies) -> np.ndarray:
    """Allele counts with missing entries at their expectation 2p."""
    return g.as_float(fill=2.0 * p.p)
