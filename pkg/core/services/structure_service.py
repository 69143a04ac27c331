"""Population-structure adjustments: principal components, linear mixed model, GRAMMAR."""

import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg, optimize

from adapters.loggers.logger_adapter import app_logger
from config import Config
from core.domain.assoc_model import Method, MixedModelMode, TestResult
from core.domain.exceptions import KinwardValidationError, NumericalError
from core.domain.genotype_model import GenotypeMatrix, Phenotype
from core.domain.kinship_model import KinshipMatrix
from core.domain.structure_model import H2_UPPER, EigenDecomposition, MixedModelFit
from core.services.genotype_service import estimate_frequencies, impute_mean

RESIDUAL_FLOOR = 1e-12
RANK_RTOL = 1e-10
H2_GRID = np.append(np.round(np.arange(0.0, 0.951, 0.05), 2), 0.999)

Vector = Union[np.ndarray, Sequence[float], Phenotype]


def _vector(values: Vector) -> np.ndarray:
    if isinstance(values, Phenotype):
        return values.values.astype(float)
    return np.asarray(values, dtype=float)


def _matrix(K: Union[KinshipMatrix, np.ndarray]) -> np.ndarray:
    return K.K if isinstance(K, KinshipMatrix) else np.asarray(K, dtype=float)


def _orient(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude entry is positive."""
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigendecompose(M: np.ndarray, k: Optional[int] = None) -> EigenDecomposition:
    """Top-k eigenpairs of a symmetric matrix, values nonincreasing."""
    n = M.shape[0]
    k = n if k is None else k
    values, vectors = linalg.eigh(M, subset_by_index=[n - k, n - 1])
    return EigenDecomposition(vectors=_orient(vectors[:, ::-1]), values=values[::-1])


def principal_components(K: Union[KinshipMatrix, np.ndarray], k: int) -> EigenDecomposition:
    M = _matrix(K)
    n = M.shape[0]
    if not 1 <= k < n:
        raise KinwardValidationError(f"Number of PCs must lie in [1, {n - 1}], got {k}")
    return eigendecompose(M, k)


def ld_prune(g: GenotypeMatrix, r2_threshold: float) -> np.ndarray:
    """Greedy filter: keep a SNP when its r^2 with every kept SNP is below the threshold."""
    if not 0.0 < r2_threshold <= 1.0:
        raise KinwardValidationError("LD r2 threshold must lie in (0, 1]")
    X = impute_mean(g, estimate_frequencies(g))
    X = X - X.mean(axis=0)
    norms = np.linalg.norm(X, axis=0)
    usable = norms > 0.0
    Z = np.divide(X, norms, out=np.zeros_like(X), where=usable)

    kept: List[int] = []
    for l in np.flatnonzero(usable):
        if kept:
            r = Z[:, kept].T @ Z[:, l]
            if np.max(r ** 2) >= r2_threshold:
                continue
        kept.append(int(l))
    app_logger.info("LD pruning kept %d of %d SNPs at r2 < %.3g", len(kept), g.L, r2_threshold)
    return np.asarray(kept, dtype=int)


def _covariate_basis(pcs: Union[EigenDecomposition, np.ndarray, None], n: int) -> np.ndarray:
    if pcs is None:
        vectors = np.empty((n, 0))
    elif isinstance(pcs, EigenDecomposition):
        vectors = pcs.vectors
    else:
        vectors = np.asarray(pcs, dtype=float).reshape(n, -1)
    k = vectors.shape[1]
    if k >= n - 2:
        raise KinwardValidationError("Number of PCs must be below n - 2")
    C = np.column_stack([np.ones(n), vectors])
    U, s, _ = linalg.svd(C, full_matrices=False)
    rank = int(np.sum(s > s[0] * RANK_RTOL))
    if rank < C.shape[1]:
        app_logger.warning(
            "Covariates [1, PCs] have rank %d of %d columns; df follow the rank",
            rank,
            C.shape[1],
        )
    return U[:, :rank]


class PcAdjuster:
    """Residualizes genotypes and phenotype on [1, pcs] and scores (n - r) r^2.

    r is the numerical rank of the covariate matrix, k + 1 for k independent PCs.
    """

    def __init__(self, y: Vector, pcs: Union[EigenDecomposition, np.ndarray, None]) -> None:
        y = _vector(y)
        self.n = y.size
        self.Q = _covariate_basis(pcs, self.n)
        self.rank = self.Q.shape[1]
        self.ry = y - self.Q @ (self.Q.T @ y)
        self.ryy = float(self.ry @ self.ry)

    def scan(self, X: np.ndarray, snp_indices: Optional[np.ndarray] = None) -> List[TestResult]:
        X = np.asarray(X, dtype=float).reshape(self.n, -1)
        snp_indices = np.arange(X.shape[1]) if snp_indices is None else snp_indices
        Rx = X - self.Q @ (self.Q.T @ X)
        rxx = np.einsum("ij,ij->j", Rx, Rx)
        rxy = self.ry @ Rx
        results = []
        for idx, sxx, sxy in zip(snp_indices, rxx, rxy):
            if sxx / self.n < RESIDUAL_FLOOR:
                results.append(TestResult.na(idx, Method.PC, flag="constant"))
            elif self.ryy / self.n < RESIDUAL_FLOOR:
                results.append(TestResult.chi2(idx, Method.PC, 0.0, flag="phenotype_explained"))
            else:
                r2 = sxy ** 2 / (sxx * self.ryy)
                results.append(TestResult.chi2(idx, Method.PC, (self.n - self.rank) * r2))
        return results


def pc_adjusted_test(
    x: Vector,
    y: Vector,
    pcs: Union[EigenDecomposition, np.ndarray, None],
    snp_index: int = 0,
) -> TestResult:
    return PcAdjuster(y, pcs).scan(_vector(x)[:, None], np.array([snp_index]))[0]


class MixedModel:
    """ML fits of y = C b + d + e with Var(y) = s2 (h2 2K + (1 - h2) I).

    The eigendecomposition of 2K is computed once; every likelihood
    evaluation is then linear in n.
    """

    def __init__(
        self,
        y: Vector,
        K: Union[KinshipMatrix, np.ndarray],
        eig: Optional[EigenDecomposition] = None,
        tol: Optional[float] = None,
    ) -> None:
        y = _vector(y)
        M = _matrix(K)
        self.n = y.size
        if self.n < 3:
            raise KinwardValidationError("The mixed model needs at least three individuals")
        if M.shape != (self.n, self.n):
            raise KinwardValidationError("Kinship and phenotype dimensions differ")
        self.tol = Config.H2_TOL if tol is None else tol
        self.eig = eig if eig is not None else eigendecompose(2.0 * M)
        if self.eig.values[-1] < -1e-8 * max(1.0, self.eig.values[0]):
            raise NumericalError("Kinship matrix is not positive semi-definite")
        self.s = np.clip(self.eig.values, 0.0, None)
        self.U = self.eig.vectors
        self.y = y
        self.yt = self.U.T @ y
        self.onet = self.U.T @ np.ones(self.n)
        self._null: Optional[MixedModelFit] = None

    def rotate(self, X: np.ndarray) -> np.ndarray:
        return self.U.T @ X

    def _profile(self, h2: float, Ct: np.ndarray) -> Tuple[float, np.ndarray, float]:
        """Log-likelihood with coefficients and s2 profiled out at fixed h2."""
        d = h2 * self.s + (1.0 - h2)
        w = 1.0 / d
        CtW = Ct.T * w
        coef = np.linalg.solve(CtW @ Ct, CtW @ self.yt)
        resid = self.yt - Ct @ coef
        sigma2 = float(np.sum(w * resid ** 2)) / self.n
        if not sigma2 > 0.0:
            return -np.inf, coef, 0.0
        ll = -0.5 * (self.n * math.log(2.0 * math.pi * sigma2) + float(np.sum(np.log(d))) + self.n)
        return ll, coef, sigma2

    def log_likelihood(self, h2: float, X: Optional[np.ndarray] = None) -> float:
        """Profile log-likelihood at fixed h2; X adds fixed-effect columns to the intercept."""
        return self._profile(h2, self._design(X))[0]

    def _design(self, X: Optional[np.ndarray], rotated: bool = False) -> np.ndarray:
        if X is None:
            return self.onet[:, None]
        X = np.asarray(X, dtype=float).reshape(self.n, -1)
        Xt = X if rotated else self.rotate(X)
        return np.column_stack([self.onet, Xt])

    def _maximize(self, Ct: np.ndarray, start: Optional[float] = None) -> float:
        """Grid scan over h2 followed by bounded Brent refinement around the best point."""
        grid_ll = np.array([self._profile(h, Ct)[0] for h in H2_GRID])
        if not np.any(np.isfinite(grid_ll)):
            raise NumericalError("Profile likelihood is not finite on the h2 grid")
        best = int(np.nanargmax(grid_ll))
        h_best, ll_best = float(H2_GRID[best]), float(grid_ll[best])

        lower = float(H2_GRID[max(best - 1, 0)])
        upper = min(float(H2_GRID[min(best + 1, H2_GRID.size - 1)]), H2_UPPER)
        if best == H2_GRID.size - 1:
            upper = H2_UPPER
        result = optimize.minimize_scalar(
            lambda h: -self._profile(h, Ct)[0],
            method="bounded",
            bounds=(lower, upper),
            options={"xatol": self.tol, "maxiter": 500},
        )
        if not result.success:
            raise NumericalError(f"h2 refinement failed: {result.message}")
        if -result.fun > ll_best:
            h_best, ll_best = float(result.x), float(-result.fun)
        if start is not None:
            ll_start = self._profile(start, Ct)[0]
            if ll_start > ll_best:
                h_best = start
        return min(max(h_best, 0.0), H2_UPPER)

    def fit(self, X: Optional[np.ndarray] = None, h2: Optional[float] = None) -> MixedModelFit:
        Ct = self._design(X)
        h2 = self._maximize(Ct) if h2 is None else h2
        ll, coef, sigma2 = self._profile(h2, Ct)
        if not sigma2 > 0.0:
            raise NumericalError("Residual variance vanished in the mixed model fit")
        beta = float(coef[1]) if coef.size > 1 else 0.0
        return MixedModelFit(
            h2=h2, sigma2=sigma2, alpha=float(coef[0]), beta=beta, log_likelihood=ll
        )

    def fit_null(self) -> MixedModelFit:
        if self._null is None:
            self._null = self.fit()
            app_logger.debug(
                "Null mixed model: h2=%.4f sigma2=%.4g loglik=%.4f",
                self._null.h2,
                self._null.sigma2,
                self._null.log_likelihood,
            )
        return self._null

    def _x_information(self, xt: np.ndarray, h2: float) -> float:
        w = 1.0 / (h2 * self.s + (1.0 - h2))
        wx1 = float(np.sum(w * xt * self.onet))
        return float(np.sum(w * xt ** 2)) - wx1 ** 2 / float(np.sum(w * self.onet ** 2))

    def score(self, x: Vector, snp_index: int = 0) -> TestResult:
        """U^2 / I for beta at the null fit, intercept estimated."""
        null = self.fit_null()
        xt = self.rotate(_vector(x))
        info = self._x_information(xt, null.h2)
        if info / self.n < RESIDUAL_FLOOR:
            return TestResult.na(snp_index, Method.MM, flag="constant")
        w = 1.0 / (null.h2 * self.s + (1.0 - null.h2))
        u = float(np.sum(w * xt * (self.yt - null.alpha * self.onet)))
        return TestResult.chi2(snp_index, Method.MM, u ** 2 / (info * null.sigma2))

    def lrt(self, x: Vector, snp_index: int = 0, approximate: bool = False) -> TestResult:
        """2(l_alt - l_null); approximate mode keeps the null h2 under the alternative."""
        null = self.fit_null()
        xt = self.rotate(_vector(x))
        if self._x_information(xt, null.h2) / self.n < RESIDUAL_FLOOR:
            return TestResult.na(snp_index, Method.MM, flag="constant")
        Ct = self._design(xt[:, None], rotated=True)
        try:
            h2 = null.h2 if approximate else self._maximize(Ct, start=null.h2)
            ll_alt = self._profile(h2, Ct)[0]
            if not np.isfinite(ll_alt):
                raise NumericalError("Alternative likelihood is not finite")
        except (NumericalError, np.linalg.LinAlgError) as e:
            app_logger.warning(
                "Alternative fit failed at SNP %d (%s); using the score test", snp_index, e
            )
            fallback = self.score(x, snp_index)
            return TestResult.chi2(snp_index, Method.MM, fallback.statistic, flag="score_fallback")
        return TestResult.chi2(snp_index, Method.MM, 2.0 * (ll_alt - null.log_likelihood))

    def test(
        self,
        x: Vector,
        mode: MixedModelMode = MixedModelMode.LRT,
        snp_index: int = 0,
        approximate: bool = False,
    ) -> TestResult:
        if MixedModelMode(mode) is MixedModelMode.SCORE:
            return self.score(x, snp_index)
        return self.lrt(x, snp_index, approximate=approximate)

    def scan(
        self,
        X: np.ndarray,
        mode: MixedModelMode = MixedModelMode.LRT,
        snp_indices: Optional[np.ndarray] = None,
        approximate: bool = False,
        n_jobs: Optional[int] = None,
    ) -> List[TestResult]:
        X = np.asarray(X, dtype=float).reshape(self.n, -1)
        snp_indices = np.arange(X.shape[1]) if snp_indices is None else snp_indices
        self.fit_null()
        n_jobs = n_jobs or Config.N_JOBS
        columns = list(enumerate(snp_indices))
        if n_jobs == 1:
            return [self.test(X[:, col], mode, idx, approximate) for col, idx in columns]
        return list(
            Parallel(n_jobs=n_jobs, prefer="threads")(
                delayed(self.test)(X[:, col], mode, idx, approximate) for col, idx in columns
            )
        )

    def blup(self, fit: Optional[MixedModelFit] = None) -> np.ndarray:
        """2h2 K (2h2 K + (1 - h2) I)^-1 (y - 1 alpha) evaluated in the eigenbasis."""
        fit = fit or self.fit_null()
        shrink = fit.h2 * self.s / (fit.h2 * self.s + 1.0 - fit.h2)
        return self.U @ (shrink * (self.yt - fit.alpha * self.onet))


def fit_mixed_null(
    y: Vector, K: Union[KinshipMatrix, np.ndarray], tol: Optional[float] = None
) -> MixedModelFit:
    return MixedModel(y, K, tol=tol).fit_null()


def mm_test(
    x: Vector,
    y: Vector,
    K: Union[KinshipMatrix, np.ndarray],
    mode: MixedModelMode = MixedModelMode.LRT,
    approximate: bool = False,
    snp_index: int = 0,
) -> TestResult:
    return MixedModel(y, K).test(x, mode, snp_index, approximate=approximate)


def grammar_residuals(
    y: Vector, fit: MixedModelFit, K: Union[KinshipMatrix, np.ndarray, MixedModel]
) -> np.ndarray:
    model = K if isinstance(K, MixedModel) else MixedModel(y, K)
    return model.y - fit.alpha - model.blup(fit)


def grammar_scan(
    residuals: np.ndarray, X: np.ndarray, snp_indices: Optional[np.ndarray] = None
) -> List[TestResult]:
    """Squared t statistic of x in the regression of the residuals on [1, x]."""
    e = np.asarray(residuals, dtype=float)
    n = e.size
    X = np.asarray(X, dtype=float).reshape(n, -1)
    snp_indices = np.arange(X.shape[1]) if snp_indices is None else snp_indices
    ec = e - e.mean()
    Xc = X - X.mean(axis=0)
    sxx = np.einsum("ij,ij->j", Xc, Xc)
    sxe = ec @ Xc
    see = float(ec @ ec)
    results = []
    for idx, a, b in zip(snp_indices, sxx, sxe):
        if a / n < RESIDUAL_FLOOR:
            results.append(TestResult.na(idx, Method.GRAMMAR, flag="constant"))
            continue
        rss = see - b ** 2 / a
        if rss / n < RESIDUAL_FLOOR:
            results.append(TestResult.na(idx, Method.GRAMMAR, flag="perfect_fit"))
            continue
        results.append(TestResult.chi2(idx, Method.GRAMMAR, (b ** 2 / a) * (n - 2) / rss))
    return results


def grammar_test(
    x: Vector,
    y: Vector,
    fit: MixedModelFit,
    K: Union[KinshipMatrix, np.ndarray],
    snp_index: int = 0,
) -> TestResult:
    residuals = grammar_residuals(y, fit, K)
    return grammar_scan(residuals, _vector(x)[:, None], np.array([snp_index]))[0]
