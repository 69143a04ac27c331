from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-9


class KinshipMethod(str, Enum):
    CORRELATION = "correlation"
    IBS = "ibs"
    PEDIGREE = "pedigree"


@dataclass(frozen=True)
class KinshipMatrix:
    K: np.ndarray
    ids: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        K = np.array(self.K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("Kinship matrix must be square")
        if not np.all(np.isfinite(K)):
            raise ValueError("Kinship matrix must be finite")
        if np.max(np.abs(K - K.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.abs(K).max()):
            raise ValueError("Kinship matrix must be symmetric")
        K = (K + K.T) / 2.0
        ids = tuple(str(i) for i in self.ids)
        if ids and len(ids) != K.shape[0]:
            raise ValueError("Kinship IDs must match the matrix dimension")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def inbreeding(self) -> np.ndarray:
        """f_i = 2 K_ii - 1."""
        return 2.0 * np.diag(self.K) - 1.0

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.K)[0])

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return self.min_eigenvalue() >= -tol

    @classmethod
    def unrelated(cls, n: int) -> "KinshipMatrix":
        """Outbred, unrelated individuals: 2K = I."""
        return cls(K=np.eye(n) / 2.0)


@dataclass
class KinshipRequest:
    genotypes_path: Optional[str] = None
    method: KinshipMethod = KinshipMethod.CORRELATION
    pedigree_path: Optional[str] = None
    freq_iters: int = 1
    out_path: Optional[str] = None

    def __post_init__(self) -> None:
        self.method = KinshipMethod(self.method)
        if self.method is KinshipMethod.PEDIGREE and not self.pedigree_path:
            raise ValueError("A pedigree file is required for pedigree kinship")
        if self.method is not KinshipMethod.PEDIGREE and not self.genotypes_path:
            raise ValueError("A genotype file is required for marker-based kinship")
        if self.freq_iters < 0:
            raise ValueError("Frequency iterations must be non-negative")


@dataclass
class KinshipResponse:
    success: bool
    kinship: Optional[KinshipMatrix] = None
    excluded_snps: int = 0
    error_message: Optional[str] = None

    def __post_init__(self) -> None:
        if self.success and self.kinship is None:
            raise ValueError("Successful response must contain a kinship matrix")
        if not self.success and not self.error_message:
            raise ValueError("Failed response must contain error message")
