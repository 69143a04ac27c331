from dataclasses import dataclass

import numpy as np

H2_UPPER = 1.0 - 1e-6


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a kinship matrix, values nonincreasing."""

    vectors: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        vectors = np.asarray(self.vectors, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if vectors.ndim != 2 or values.ndim != 1 or vectors.shape[1] != values.size:
            raise ValueError("Eigenvectors must be stored column-wise, one per eigenvalue")
        if np.any(np.diff(values) > 1e-12 * max(1.0, np.abs(values).max(initial=0.0))):
            raise ValueError("Eigenvalues must be nonincreasing")
        vectors.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> int:
        return self.values.size

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T

    def truncate(self, k: int) -> "EigenDecomposition":
        return EigenDecomposition(vectors=self.vectors[:, :k], values=self.values[:k])


@dataclass(frozen=True)
class MixedModelFit:
    """Maximum-likelihood fit of y = 1a + xb + d + e, d ~ N(0, 2 s2 h2 K), e ~ N(0, s2 (1 - h2) I)."""

    h2: float
    sigma2: float
    alpha: float
    beta: float
    log_likelihood: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.h2 <= H2_UPPER:
            raise ValueError("Heritability must lie in [0, 1 - 1e-6]")
        if not self.sigma2 > 0.0:
            raise ValueError("Residual scale must be positive")
