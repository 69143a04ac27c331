import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from utils.stats import chi2_sf


class Method(str, Enum):
    ARMITAGE = "armitage"
    TDT = "tdt"
    MCP = "mcp"
    PC = "pc"
    MM = "mm"
    GRAMMAR = "grammar"
    GC = "gc"


class MixedModelMode(str, Enum):
    LRT = "lrt"
    SCORE = "score"


class LambdaMethod(str, Enum):
    MEDIAN = "median"
    MEAN = "mean"
    TRIMMED = "trimmed_mean"


@dataclass(frozen=True)
class TestResult:
    """Per-SNP statistic. A NaN statistic is reported as NA."""

    __test__ = False

    snp_index: int
    method: str
    statistic: float
    df: int = 1
    p_value: float = float("nan")
    exact_p_value: Optional[float] = None
    flag: Optional[str] = None

    def __post_init__(self) -> None:
        if self.df < 1:
            raise ValueError("Degrees of freedom must be positive")
        if not math.isnan(self.statistic) and self.statistic < 0.0:
            raise ValueError("Test statistics must be non-negative")
        if not math.isnan(self.p_value) and not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p-values must lie in [0, 1]")

    @classmethod
    def chi2(
        cls,
        snp_index: int,
        method: str,
        statistic: float,
        df: int = 1,
        exact_p_value: Optional[float] = None,
        flag: Optional[str] = None,
    ) -> "TestResult":
        statistic = float(statistic)
        if not math.isnan(statistic):
            statistic = max(statistic, 0.0)
        return cls(
            snp_index=int(snp_index),
            method=str(getattr(method, "value", method)),
            statistic=statistic,
            df=df,
            p_value=chi2_sf(statistic, df),
            exact_p_value=exact_p_value,
            flag=flag,
        )

    @classmethod
    def na(cls, snp_index: int, method: str, flag: str, df: int = 1) -> "TestResult":
        return cls(
            snp_index=int(snp_index),
            method=str(getattr(method, "value", method)),
            statistic=float("nan"),
            df=df,
            flag=flag,
        )

    @property
    def is_na(self) -> bool:
        return math.isnan(self.statistic)


def result_statistics(results: Sequence[TestResult]) -> np.ndarray:
    return np.array([r.statistic for r in results], dtype=float)


def result_p_values(results: Sequence[TestResult]) -> np.ndarray:
    return np.array([r.p_value for r in results], dtype=float)


@dataclass(frozen=True)
class TrioSet:
    """(father, mother, child) allele counts at one SNP."""

    trios: Tuple[Tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        trios = tuple(tuple(int(v) for v in trio) for trio in self.trios)
        for father, mother, child in trios:
            for value in (father, mother, child):
                if value not in (0, 1, 2):
                    raise ValueError("Trio genotypes must lie in {0, 1, 2}")
            if child not in _mendelian_children(father, mother):
                raise ValueError(
                    f"Child genotype {child} is incompatible with parents {father} x {mother}"
                )
        object.__setattr__(self, "trios", trios)

    def __len__(self) -> int:
        return len(self.trios)


def _mendelian_children(father: int, mother: int) -> set:
    def gametes(g: int) -> set:
        return {0: {0}, 1: {0, 1}, 2: {1}}[g]

    return {a + b for a in gametes(father) for b in gametes(mother)}


@dataclass(frozen=True)
class LambdaEstimate:
    value: float
    method: LambdaMethod
    q: Optional[float] = None
    m: int = 0

    def __post_init__(self) -> None:
        if not self.value > 0.0:
            raise ValueError("Inflation factor must be positive")
        object.__setattr__(self, "method", LambdaMethod(self.method))
        if self.method is LambdaMethod.TRIMMED and (self.q is None or not 0.0 < self.q <= 1.0):
            raise ValueError("Trim fraction must lie in (0, 1]")


@dataclass
class AssociationRequest:
    genotypes_path: str
    method: Method
    out_path: Optional[str] = None
    phenotypes_path: Optional[str] = None
    kinship_path: Optional[str] = None
    trios_path: Optional[str] = None
    pedigree_path: Optional[str] = None
    num_pcs: int = 10
    mm_mode: MixedModelMode = MixedModelMode.LRT
    approximate: bool = False
    ld_r2: Optional[float] = None

    def __post_init__(self) -> None:
        self.method = Method(self.method)
        self.mm_mode = MixedModelMode(self.mm_mode)
        if self.method is Method.GC:
            raise ValueError("Use the gc command to adjust existing results")
        if self.method is Method.TDT and not (self.trios_path or self.pedigree_path):
            raise ValueError("A trio or pedigree file is required for the TDT")
        if not self.phenotypes_path:
            raise ValueError("A phenotype file is required")
        if self.num_pcs < 0:
            raise ValueError("Number of PCs must be non-negative")
        if self.ld_r2 is not None and not 0.0 < self.ld_r2 <= 1.0:
            raise ValueError("LD r2 threshold must lie in (0, 1]")


@dataclass
class AssociationResponse:
    success: bool
    results: List[TestResult] = field(default_factory=list)
    excluded_snps: int = 0
    error_message: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.success and not self.error_message:
            raise ValueError("Failed response must contain error message")


@dataclass
class GenomicControlRequest:
    results_path: str
    method: LambdaMethod = LambdaMethod.MEDIAN
    q: float = 0.9
    floor: bool = False
    out_path: Optional[str] = None

    def __post_init__(self) -> None:
        aliases = {"trimmed": LambdaMethod.TRIMMED.value}
        self.method = LambdaMethod(aliases.get(self.method, self.method))
        if not 0.0 < self.q <= 1.0:
            raise ValueError("Trim fraction must lie in (0, 1]")


@dataclass
class GenomicControlResponse:
    success: bool
    estimate: Optional[LambdaEstimate] = None
    results: List[TestResult] = field(default_factory=list)
    error_message: Optional[str] = None

    def __post_init__(self) -> None:
        if self.success and self.estimate is None:
            raise ValueError("Successful response must contain a lambda estimate")
        if not self.success and not self.error_message:
            raise ValueError("Failed response must contain error message")
