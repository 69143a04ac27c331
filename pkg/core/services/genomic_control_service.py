import math
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from adapters.loggers.logger_adapter import app_logger
from core.domain.assoc_model import (
    GenomicControlRequest,
    GenomicControlResponse,
    LambdaEstimate,
    LambdaMethod,
    TestResult,
    result_statistics,
)
from core.domain.exceptions import KinwardException, KinwardValidationError
from core.domain.genotype_model import Phenotype
from core.domain.kinship_model import KinshipMatrix
from core.interfaces.association_service_interface import GenomicControlServiceInterface
from core.interfaces.genotype_store_interface import GenotypeStoreInterface
from utils.stats import chi2_cdf, chi2_median, chi2_quantile, chi2_sf, f_sf


def _finite(stats: Sequence[float]) -> np.ndarray:
    values = np.asarray(stats, dtype=float).ravel()
    values = values[np.isfinite(values)]
    if values.size == 0:
        raise KinwardValidationError("At least one finite test statistic is required")
    if np.any(values < 0.0):
        raise KinwardValidationError("Test statistics must be non-negative")
    return values


def lambda_median(stats: Sequence[float], floor: bool = False) -> LambdaEstimate:
    """Median statistic over the exact chi-square(1) median."""
    values = _finite(stats)
    value = float(np.median(values)) / chi2_median(1)
    if floor:
        value = max(value, 1.0)
    return LambdaEstimate(value=value, method=LambdaMethod.MEDIAN, m=values.size)


def trimmed_null_mean(q: float) -> float:
    """E(X | X < d1^-1(q)) for X ~ chi-square(1), i.e. d3(d1^-1(q)) / q."""
    if not 0.0 < q <= 1.0:
        raise KinwardValidationError("Trim fraction must lie in (0, 1]")
    if q == 1.0:
        return 1.0
    return float(chi2_cdf(chi2_quantile(q, 1), 3)) / q


def lambda_trimmed(stats: Sequence[float], q: float, floor: bool = False) -> LambdaEstimate:
    """Mean of the smallest ceil(q m) statistics over its null expectation.

    At q = 1 this is the plain mean of the statistics in their input order.
    """
    denominator = trimmed_null_mean(q)
    values = _finite(stats)
    if q == 1.0:
        value = float(np.mean(values))
    else:
        # small slack so that q * m landing just above an integer is not rounded up
        keep = max(1, math.ceil(q * values.size - 1e-9))
        ordered = np.sort(values, kind="stable")
        value = float(np.mean(ordered[:keep])) / denominator
    if floor:
        value = max(value, 1.0)
    return LambdaEstimate(value=value, method=LambdaMethod.TRIMMED, q=q, m=values.size)


def lambda_mean(stats: Sequence[float], floor: bool = False) -> LambdaEstimate:
    estimate = lambda_trimmed(stats, 1.0, floor=floor)
    return replace(estimate, method=LambdaMethod.MEAN, q=None)


def estimate_lambda(
    stats: Sequence[float], method: LambdaMethod, q: float = 0.9, floor: bool = False
) -> LambdaEstimate:
    method = LambdaMethod(method)
    if method is LambdaMethod.MEDIAN:
        return lambda_median(stats, floor=floor)
    if method is LambdaMethod.MEAN:
        return lambda_mean(stats, floor=floor)
    return lambda_trimmed(stats, q, floor=floor)


def gc_adjust(results: Sequence[TestResult], estimate: LambdaEstimate) -> List[TestResult]:
    """Divide statistics by lambda and recompute p-values.

    Mean-adjusted statistics are referred to F(1, m); otherwise chi-square(1).
    """
    adjusted = []
    for result in results:
        if result.is_na:
            adjusted.append(result)
            continue
        statistic = result.statistic / estimate.value
        if estimate.method is LambdaMethod.MEAN:
            p_value = f_sf(statistic, 1, max(estimate.m, 1))
        else:
            p_value = chi2_sf(statistic, result.df)
        adjusted.append(
            replace(result, statistic=statistic, p_value=float(p_value), exact_p_value=None)
        )
    return adjusted


def _trend_weights(y: Phenotype) -> Tuple[np.ndarray, int, int]:
    y.require_case_control()
    v = y.values
    n1, n0 = y.n1, y.n0
    return v / n1 - (1.0 - v) / n0, n0, n1


def armitage_variance(
    K: KinshipMatrix, y: Phenotype, p: float
) -> Tuple[float, float]:
    """Var[T] and E[V] of the trend test at a SNP with frequency p under kinship K."""
    if not 0.0 < p < 1.0:
        raise KinwardValidationError("Allele frequency must lie in (0, 1)")
    if K.n != y.n:
        raise KinwardValidationError("Kinship and phenotype dimensions differ")
    c, n0, n1 = _trend_weights(y)
    scale = 4.0 * p * (1.0 - p)
    var_t = scale * float(c @ K.K @ c)
    spread = float(np.trace(K.K)) - float(K.K.sum()) / K.n
    expected_v = scale * spread / (n0 * n1)
    return var_t, expected_v


def theoretical_lambda(K: KinshipMatrix, y: Phenotype, p: Optional[float] = None) -> float:
    """Inflation of the trend statistic predicted by K: Var[T] / E[V].

    The allele frequency cancels; it is accepted for symmetry with
    ``armitage_variance``.
    """
    var_t, expected_v = armitage_variance(K, y, 0.5 if p is None else p)
    return var_t / expected_v


class GenomicControlDomainService(GenomicControlServiceInterface):
    def __init__(self, store: GenotypeStoreInterface) -> None:
        self.store = store

    def process_gc_request(self, request: GenomicControlRequest) -> GenomicControlResponse:
        try:
            results = self.store.read_results(request.results_path)
            estimate = estimate_lambda(
                result_statistics(results), request.method, request.q, request.floor
            )
            app_logger.info(
                "Genomic control %s lambda %.4f over %d statistics",
                estimate.method.value,
                estimate.value,
                estimate.m,
            )
            adjusted = gc_adjust(results, estimate)
            if request.out_path:
                self.store.write_results(request.out_path, adjusted)
            return GenomicControlResponse(success=True, estimate=estimate, results=adjusted)

        except KinwardException as gc_error:

            return GenomicControlResponse(success=False, error_message=str(gc_error))

        except (ValueError, TypeError) as e:

            return GenomicControlResponse(
                success=False,
                error_message=f"Processing error during genomic control: {str(e)}",
            )

        except OSError as system_error:

            return GenomicControlResponse(
                success=False,
                error_message=f"System error during genomic control: {str(system_error)}",
            )
