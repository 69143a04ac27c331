import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import optimize, special

from adapters.loggers.logger_adapter import app_logger
from config import Config
from core.domain.exceptions import KinwardException, SimulationError
from core.domain.genotype_model import GenotypeMatrix, Pedigree, Phenotype
from core.domain.kinship_model import KinshipMatrix
from core.domain.sim_model import (
    AdmixturePlan,
    IslandPlan,
    SimOutput,
    SimScenario,
    SimulationRequest,
    SimulationResponse,
)
from core.interfaces.genotype_store_interface import GenotypeStoreInterface
from core.interfaces.simulation_service_interface import SimulationServiceInterface
from core.services.kinship_service import drop_pedigree_genotypes

MAX_RETRIES = 100
CALIBRATION_DRAWS = 100_000

COUSIN_PEDIGREE = Pedigree(
    members=("gp1", "gp2", "sib1", "sib2", "sp1", "sp2", "c1", "c2"),
    mother={"sib1": "gp1", "sib2": "gp1", "c1": "sp1", "c2": "sp2"},
    father={"sib1": "gp2", "sib2": "gp2", "c1": "sib1", "c2": "sib2"},
)


def draw_subpop_frequencies(
    p: np.ndarray, F: float, S: int, rng: np.random.Generator
) -> np.ndarray:
    """Balding-Nichols island frequencies, shape (S,) + p.shape.

    Beta(p(1-F)/F, (1-p)(1-F)/F) per island; F = 0 returns p everywhere.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise SimulationError("Ancestral frequencies must lie in (0, 1)")
    if not 0.0 <= F < 1.0:
        raise SimulationError("F must lie in [0, 1)")
    shape = (S,) + p.shape
    if F == 0.0:
        return np.broadcast_to(p, shape).copy()
    scale = (1.0 - F) / F
    return rng.beta(p * scale, (1.0 - p) * scale, size=shape)


def calibrate_intercept(
    effects: np.ndarray,
    frequencies: np.ndarray,
    prevalence: float,
    rng: Optional[np.random.Generator] = None,
    draws: int = CALIBRATION_DRAWS,
) -> float:
    """Logistic intercept matching the population prevalence over Monte Carlo draws.

    ``frequencies`` holds one row of causal-SNP frequencies per island;
    evaluation individuals are spread evenly over the islands.
    """
    if not 0.0 < prevalence < 1.0:
        raise SimulationError("Prevalence must lie in (0, 1)")
    effects = np.asarray(effects, dtype=float)
    base = float(special.logit(prevalence))
    if effects.size == 0 or not np.any(effects):
        return base

    frequencies = np.atleast_2d(np.asarray(frequencies, dtype=float))
    rng = rng or np.random.default_rng(Config.SEED)
    islands = np.arange(draws) % frequencies.shape[0]
    genotypes = rng.binomial(2, frequencies[islands])
    scores = genotypes @ effects

    def excess(intercept: float) -> float:
        return float(np.mean(special.expit(intercept + scores))) - prevalence

    span = 20.0 + float(np.max(np.abs(scores)))
    lower, upper = base - span, base + span
    if excess(lower) * excess(upper) > 0.0:
        raise SimulationError("Intercept calibration did not bracket the prevalence")
    return float(optimize.bisect(excess, lower, upper, xtol=1e-10))


def true_kinship(ancestry: np.ndarray, F: float) -> KinshipMatrix:
    """F A A' off the diagonal and (1 + F |a_i|^2) / 2 on it."""
    A = np.asarray(ancestry, dtype=float)
    K = F * (A @ A.T)
    K[np.diag_indices_from(K)] = (1.0 + F * np.einsum("ij,ij->i", A, A)) / 2.0
    return KinshipMatrix(K=K)


def _quota_draw(
    pool: np.ndarray, groups: np.ndarray, quotas: Sequence[int], rng: np.random.Generator
) -> Optional[np.ndarray]:
    """Sample quotas without replacement, pooled (one quota) or per island."""
    if len(quotas) == 1:
        if pool.size < quotas[0]:
            return None
        return rng.choice(pool, size=quotas[0], replace=False)
    chosen = []
    for island, quota in enumerate(quotas):
        eligible = pool[groups[pool] == island]
        if eligible.size < quota:
            return None
        chosen.append(rng.choice(eligible, size=quota, replace=False))
    return np.concatenate(chosen)


def _allele_counts(frequencies: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return rng.binomial(2, frequencies).astype(np.int8)


def _simulate_islands(
    sc: SimScenario, plan: IslandPlan, P: np.ndarray, rng: np.random.Generator
) -> SimOutput:
    causal = np.sort(rng.choice(sc.n_snps, size=sc.n_causal, replace=False))
    effects = np.full(sc.n_causal, np.log(sc.odds_ratio))
    intercept = calibrate_intercept(effects, P[:, causal], sc.prevalence, rng)

    island_sizes = [
        part.size for part in np.array_split(np.arange(sc.population_size), sc.islands)
    ]
    labels = np.repeat(np.arange(sc.islands), island_sizes)
    causal_freq = P[:, causal]
    for attempt in range(1, MAX_RETRIES + 1):
        causal_counts = _allele_counts(causal_freq[labels], rng)
        risk = special.expit(intercept + causal_counts @ effects)
        status = rng.random(sc.population_size) < risk
        cases = _quota_draw(np.flatnonzero(status), labels, plan.cases, rng)
        controls = _quota_draw(np.flatnonzero(~status), labels, plan.controls, rng)
        if cases is not None and controls is not None:
            break
        app_logger.debug("Quota infeasible on population draw %d; regenerating", attempt)
    else:
        raise SimulationError(f"Sampling quotas infeasible after {MAX_RETRIES} populations")

    sampled = np.sort(np.concatenate([cases, controls]))
    y = np.isin(sampled, cases).astype(float)
    sample_labels = labels[sampled]
    counts = _allele_counts(P[sample_labels], rng)
    counts[:, causal] = causal_counts[sampled]

    ancestry = np.eye(sc.islands)[sample_labels]
    return SimOutput(
        genotypes=GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, dtype=bool)),
        phenotype=Phenotype(values=y),
        true_kinship=true_kinship(ancestry, sc.fst),
        causal_indices=frozenset(int(c) for c in causal),
        labels=sample_labels,
        ancestry=ancestry,
        intercept=intercept,
    )


def _simulate_admixture(
    sc: SimScenario, plan: AdmixturePlan, P: np.ndarray, rng: np.random.Generator
) -> SimOutput:
    n_pure = plan.pure_cases + plan.pure_controls
    pure_counts = _allele_counts(np.broadcast_to(P[plan.pure_island], (n_pure, sc.n_snps)), rng)
    pure_y = np.r_[np.ones(plan.pure_cases), np.zeros(plan.pure_controls)]

    first, second = plan.sources
    a = rng.random(plan.admixed)
    # each allele copy picks its source island independently
    from_first = rng.random((plan.admixed, sc.n_snps, 2)) < a[:, None, None]
    freq = np.where(from_first, P[first][None, :, None], P[second][None, :, None])
    admixed_counts = (rng.random(freq.shape) < freq).sum(axis=2).astype(np.int8)
    admixed_y = (rng.random(plan.admixed) < plan.case_base + plan.case_slope * a).astype(float)

    ancestry = np.zeros((n_pure + plan.admixed, sc.islands))
    ancestry[:n_pure, plan.pure_island] = 1.0
    ancestry[n_pure:, first] = a
    ancestry[n_pure:, second] = 1.0 - a
    counts = np.vstack([pure_counts, admixed_counts])
    return SimOutput(
        genotypes=GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, dtype=bool)),
        phenotype=Phenotype(values=np.r_[pure_y, admixed_y]),
        true_kinship=true_kinship(ancestry, sc.fst),
        causal_indices=frozenset(),
        labels=np.r_[np.full(n_pure, plan.pure_island), np.full(plan.admixed, -1)],
        ancestry=ancestry,
    )


def simulate_panel(sc: SimScenario, rng: Optional[np.random.Generator] = None) -> SimOutput:
    rng = rng or np.random.default_rng(sc.seed)
    low, high = sc.maf_range
    ancestral = rng.uniform(low, high, size=sc.n_snps)
    P = draw_subpop_frequencies(ancestral, sc.fst, sc.islands, rng)
    if isinstance(sc.plan, AdmixturePlan):
        return _simulate_admixture(sc, sc.plan, P, rng)
    return _simulate_islands(sc, sc.plan, P, rng)


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(seed + replicate)


def simulate_replicates(
    sc: SimScenario, replicates: int, n_jobs: Optional[int] = None
) -> List[SimOutput]:
    n_jobs = n_jobs or Config.N_JOBS
    if n_jobs == 1:
        return [simulate_panel(sc, replicate_rng(sc.seed, r)) for r in range(replicates)]
    return list(
        Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(simulate_panel)(sc, replicate_rng(sc.seed, r)) for r in range(replicates)
        )
    )


@dataclass(frozen=True)
class CousinPanel:
    """Cousin pairs in rows (2k, 2k + 1) for k < n_pairs, unrelated individuals after."""

    genotypes: GenotypeMatrix
    frequencies: np.ndarray
    n_pairs: int

    @property
    def cousin_pairs(self) -> np.ndarray:
        first = 2 * np.arange(self.n_pairs)
        return np.column_stack([first, first + 1])

    @property
    def unrelated_pairs(self) -> np.ndarray:
        first = np.arange(2 * self.n_pairs, self.genotypes.n - 1, 2)
        return np.column_stack([first, first + 1])


def simulate_cousin_panel(
    n_pairs: int = 200,
    n_unrelated: int = 800,
    n_snps: int = 10_000,
    maf_range: Tuple[float, float] = (0.05, 0.5),
    rng: Optional[np.random.Generator] = None,
) -> CousinPanel:
    """Idealized first cousins gene-dropped from two shared outbred grandparents."""
    rng = rng or np.random.default_rng(Config.SEED)
    p = rng.uniform(*maf_range, size=n_snps)
    cousins = [
        drop_pedigree_genotypes(COUSIN_PEDIGREE, p, rng).counts[-2:] for _ in range(n_pairs)
    ]
    unrelated = rng.binomial(2, np.broadcast_to(p, (n_unrelated, n_snps))).astype(np.int8)
    counts = np.vstack(cousins + [unrelated])
    return CousinPanel(
        genotypes=GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, dtype=bool)),
        frequencies=p,
        n_pairs=n_pairs,
    )


class SimulationDomainService(SimulationServiceInterface):
    def __init__(self, store: GenotypeStoreInterface) -> None:
        self.store = store

    def _write_replicate(self, out_dir: str, r: int, output: SimOutput) -> str:
        folder = os.path.join(out_dir, f"rep_{r:04d}")
        os.makedirs(folder, exist_ok=True)
        self.store.write_genotypes(os.path.join(folder, "genotypes.txt"), output.genotypes)
        self.store.write_phenotypes(os.path.join(folder, "phenotypes.txt"), output.phenotype)
        self.store.write_matrix(os.path.join(folder, "true_kinship.tsv"), output.true_kinship)
        truth = pd.DataFrame(
            {
                "snp_index": np.arange(output.genotypes.L),
                "causal": (~output.null_mask).astype(int),
            }
        )
        self.store.write_table(os.path.join(folder, "truth.tsv"), truth)
        labels = pd.DataFrame({"id": output.phenotype.ids, "label": output.labels})
        for s in range(output.ancestry.shape[1]):
            labels[f"ancestry_{s}"] = output.ancestry[:, s]
        self.store.write_table(os.path.join(folder, "labels.tsv"), labels)
        return folder

    def process_simulation_request(self, request: SimulationRequest) -> SimulationResponse:
        try:
            sc = request.scenario
            app_logger.info(
                "Simulating %d replicate(s): %d islands, F=%.3g, %d SNPs, %d sampled",
                request.replicates,
                sc.islands,
                sc.fst,
                sc.n_snps,
                sc.study_size,
            )
            outputs = simulate_replicates(sc, request.replicates)
            written = []
            if request.out_dir:
                for r, output in enumerate(outputs):
                    written.append(self._write_replicate(request.out_dir, r, output))
            return SimulationResponse(success=True, outputs=tuple(outputs), written=tuple(written))

        except KinwardException as sim_error:

            return SimulationResponse(success=False, error_message=str(sim_error))

        except (ValueError, TypeError) as e:

            return SimulationResponse(
                success=False,
                error_message=f"Processing error during simulation: {str(e)}",
            )

        except OSError as system_error:

            return SimulationResponse(
                success=False,
                error_message=f"System error during simulation: {str(system_error)}",
            )
