from dataclasses import dataclass, field, replace
from typing import FrozenSet, Optional, Tuple, Union

import numpy as np

from core.domain.genotype_model import GenotypeMatrix, Phenotype
from core.domain.kinship_model import KinshipMatrix


@dataclass(frozen=True)
class IslandPlan:
    """Case and control quotas; a single entry is pooled over islands."""

    cases: Tuple[int, ...] = (1000,)
    controls: Tuple[int, ...] = (1000,)

    def __post_init__(self) -> None:
        cases = tuple(int(c) for c in self.cases)
        controls = tuple(int(c) for c in self.controls)
        if not cases or not controls:
            raise ValueError("Case and control quotas are required")
        if any(c < 0 for c in cases + controls):
            raise ValueError("Quotas must be non-negative")
        if sum(cases) == 0 or sum(controls) == 0:
            raise ValueError("At least one case and one control must be sampled")
        object.__setattr__(self, "cases", cases)
        object.__setattr__(self, "controls", controls)

    @property
    def study_size(self) -> int:
        return sum(self.cases) + sum(self.controls)


@dataclass(frozen=True)
class AdmixturePlan:
    """Unadmixed members of one island plus individuals admixed between two others.

    Admixed individual i has ancestry a_i ~ Uniform(0, 1) from ``sources[0]``
    and is a case with probability ``case_base + case_slope * a_i``.
    """

    pure_island: int = 0
    pure_cases: int = 100
    pure_controls: int = 200
    admixed: int = 700
    sources: Tuple[int, int] = (1, 2)
    case_base: float = 0.3
    case_slope: float = 0.5

    def __post_init__(self) -> None:
        if min(self.pure_cases, self.pure_controls, self.admixed) < 0:
            raise ValueError("Sample counts must be non-negative")
        if not (0.0 <= self.case_base <= 1.0 and 0.0 <= self.case_base + self.case_slope <= 1.0):
            raise ValueError("Case probabilities must stay within [0, 1]")
        if self.sources[0] == self.sources[1]:
            raise ValueError("Admixture needs two distinct source islands")

    @property
    def study_size(self) -> int:
        return self.pure_cases + self.pure_controls + self.admixed


SamplePlan = Union[IslandPlan, AdmixturePlan]


@dataclass(frozen=True)
class SimScenario:
    islands: int = 3
    fst: float = 0.1
    n_snps: int = 10_000
    maf_range: Tuple[float, float] = (0.05, 0.5)
    n_causal: int = 20
    odds_ratio: float = 1.18
    prevalence: float = 0.18
    population_size: int = 6000
    plan: SamplePlan = field(default_factory=IslandPlan)
    seed: int = 20100101

    def __post_init__(self) -> None:
        if self.islands < 1:
            raise ValueError("At least one island is required")
        if not 0.0 <= self.fst < 1.0:
            raise ValueError("F must lie in [0, 1)")
        if self.n_snps < 1:
            raise ValueError("At least one SNP is required")
        low, high = self.maf_range
        if not 0.0 < low <= high <= 0.5:
            raise ValueError("Ancestral MAF range must lie within (0, 0.5]")
        if not 0 <= self.n_causal <= self.n_snps:
            raise ValueError("Causal SNP count must lie in [0, L]")
        if not self.odds_ratio > 0.0:
            raise ValueError("Odds ratio must be positive")
        if not 0.0 < self.prevalence < 1.0:
            raise ValueError("Prevalence must lie in (0, 1)")
        if isinstance(self.plan, IslandPlan):
            for quota in (self.plan.cases, self.plan.controls):
                if len(quota) not in (1, self.islands):
                    raise ValueError("Quotas must be pooled or given per island")
            if self.plan.study_size > self.population_size:
                raise ValueError("Study size exceeds the population size")
        elif isinstance(self.plan, AdmixturePlan):
            used = (self.plan.pure_island,) + tuple(self.plan.sources)
            if any(not 0 <= s < self.islands for s in used):
                raise ValueError("Admixture plan refers to an unknown island")
            if self.n_causal:
                raise ValueError("Admixture plans assign status by ancestry and take no causal SNPs")
        else:
            raise ValueError("Unknown sample plan")

    @property
    def study_size(self) -> int:
        return self.plan.study_size

    @classmethod
    def structured(cls, **overrides) -> "SimScenario":
        """Three islands at F=0.1, 1000 cases and 1000 controls out of 6000."""
        return replace(cls(), **overrides)

    @classmethod
    def ascertained(cls, **overrides) -> "SimScenario":
        """As ``structured`` but controls recruited 50/50/900 across islands."""
        return replace(cls(plan=IslandPlan(cases=(1000,), controls=(50, 50, 900))), **overrides)

    @classmethod
    def admixed(cls, **overrides) -> "SimScenario":
        """Island-1 sample plus 700 admixed individuals, 2000 null SNPs at F=0.01."""
        base = cls(fst=0.01, n_snps=2000, n_causal=0, plan=AdmixturePlan())
        return replace(base, **overrides)

    def desk_scale(self) -> "SimScenario":
        return replace(self, n_snps=min(self.n_snps, 2000))


@dataclass(frozen=True)
class SimOutput:
    genotypes: GenotypeMatrix
    phenotype: Phenotype
    true_kinship: KinshipMatrix
    causal_indices: FrozenSet[int]
    labels: np.ndarray
    ancestry: np.ndarray
    intercept: Optional[float] = None

    def __post_init__(self) -> None:
        n = self.genotypes.n
        if self.phenotype.n != n or self.true_kinship.n != n:
            raise ValueError("Panel components must describe the same individuals")
        if any(not 0 <= c < self.genotypes.L for c in self.causal_indices):
            raise ValueError("Causal indices must refer to simulated SNPs")
        if self.labels.shape != (n,) or self.ancestry.shape[0] != n:
            raise ValueError("Labels and ancestry must have one row per individual")

    @property
    def null_mask(self) -> np.ndarray:
        mask = np.ones(self.genotypes.L, dtype=bool)
        mask[list(self.causal_indices)] = False
        return mask


@dataclass
class SimulationRequest:
    scenario: SimScenario
    replicates: int = 1
    out_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("At least one replicate is required")


@dataclass
class SimulationResponse:
    success: bool
    outputs: Tuple[SimOutput, ...] = ()
    written: Tuple[str, ...] = ()
    error_message: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.success and not self.error_message:
            raise ValueError("Failed response must contain error message")
