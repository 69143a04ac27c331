from dataclasses import dataclass

import numpy as np
from scipy import linalg

from config import Config
from core.domain.exceptions import NumericalError


@dataclass(frozen=True)
class KinshipFactor:
    """Cholesky factor of K, ridged when K is numerically singular."""

    factor: tuple
    ridged: bool
    n: int

    def solve(self, b: np.ndarray) -> np.ndarray:
        return linalg.cho_solve(self.factor, b)

    def inverse(self) -> np.ndarray:
        inv = self.solve(np.eye(self.n))
        return (inv + inv.T) / 2.0


def factor_kinship(
    K: np.ndarray,
    epsilon: float = None,
    threshold: float = None,
) -> KinshipFactor:
    epsilon = Config.RIDGE_EPSILON if epsilon is None else epsilon
    threshold = Config.RIDGE_THRESHOLD if threshold is None else threshold
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    smallest = linalg.eigvalsh(K, subset_by_index=[0, 0])[0]
    ridged = bool(smallest < threshold)
    if ridged:
        K = K + epsilon * np.eye(n)
    try:
        factor = linalg.cho_factor(K, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        raise NumericalError(
            f"Kinship matrix is singular after ridge (smallest eigenvalue {smallest:.3g})"
        ) from e
    return KinshipFactor(factor=factor, ridged=ridged, n=n)
