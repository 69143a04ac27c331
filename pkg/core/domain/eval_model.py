from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.domain.sim_model import SimScenario


class KinshipSource(str, Enum):
    TRUE = "true"
    ESTIMATED = "estimated"


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float

    def __post_init__(self) -> None:
        if not (self.thresholds.shape == self.tpr.shape == self.fpr.shape):
            raise ValueError("ROC vectors must have equal length")
        if np.any(np.diff(self.tpr) < 0) or np.any(np.diff(self.fpr) < 0):
            raise ValueError("ROC rates must be nondecreasing")


@dataclass(frozen=True)
class QqData:
    """Sorted expected and observed -log10 p-values."""

    expected: np.ndarray
    observed: np.ndarray
    clamped: int = 0

    def __post_init__(self) -> None:
        if self.expected.shape != self.observed.shape:
            raise ValueError("Q-Q vectors must have equal length")


@dataclass(frozen=True)
class MethodSummary:
    method: str
    mean_lambda: float
    auc: float
    type1_05: float
    type1_001: float
    n_null: int
    n_causal: int

    def as_row(self) -> Dict[str, float]:
        return {
            "method": self.method,
            "mean_lambda": self.mean_lambda,
            "auc": self.auc,
            "type1_0.05": self.type1_05,
            "type1_0.001": self.type1_001,
            "n_null": self.n_null,
            "n_causal": self.n_causal,
        }


@dataclass(frozen=True)
class PrecisionSummary:
    """Spread of two kinship estimators after equal-separation rescaling."""

    sd_correlation: Tuple[float, float]
    sd_ibs: Tuple[float, float]
    datasets: int

    @property
    def ratio(self) -> Tuple[float, float]:
        return (
            self.sd_ibs[0] / self.sd_correlation[0],
            self.sd_ibs[1] / self.sd_correlation[1],
        )


@dataclass
class EvaluationRequest:
    scenario: SimScenario
    methods: Tuple[str, ...] = ("gc", "pc", "mm", "mcp")
    replicates: int = 100
    kinship_source: KinshipSource = KinshipSource.TRUE
    full_scale: bool = False
    out_dir: Optional[str] = None

    def __post_init__(self) -> None:
        self.kinship_source = KinshipSource(self.kinship_source)
        if self.replicates < 1:
            raise ValueError("At least one replicate is required")
        if not self.methods:
            raise ValueError("At least one method is required")


@dataclass
class EvaluationResponse:
    success: bool
    summaries: List[MethodSummary] = field(default_factory=list)
    qq: Dict[str, QqData] = field(default_factory=dict)
    roc: Dict[str, Optional[RocCurve]] = field(default_factory=dict)
    error_message: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.success and not self.error_message:
            raise ValueError("Failed response must contain error message")


@dataclass
class PrecisionRequest:
    datasets: int = 100
    n_pairs: int = 200
    n_unrelated: int = 800
    n_snps: int = 10_000
    seed: int = 20100101
    out_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.datasets < 1:
            raise ValueError("At least one dataset is required")
        if self.n_pairs < 2 or self.n_unrelated < 4:
            raise ValueError("Need at least two cousin pairs and four unrelated individuals")
        if self.n_snps < 1:
            raise ValueError("At least one SNP is required")


@dataclass
class PrecisionResponse:
    success: bool
    summary: Optional[PrecisionSummary] = None
    error_message: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.success and not self.error_message:
            raise ValueError("Failed response must contain error message")
