import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn import metrics

from adapters.loggers.logger_adapter import app_logger
from config import Config
from core.domain.assoc_model import Method, TestResult, result_p_values, result_statistics
from core.domain.eval_model import (
    EvaluationRequest,
    EvaluationResponse,
    KinshipSource,
    MethodSummary,
    PrecisionRequest,
    PrecisionResponse,
    PrecisionSummary,
    QqData,
    RocCurve,
)
from core.domain.exceptions import KinwardException, KinwardValidationError
from core.domain.kinship_model import KinshipMethod
from core.domain.sim_model import SimOutput, SimScenario
from core.interfaces.evaluation_service_interface import EvaluationServiceInterface
from core.interfaces.genotype_store_interface import GenotypeStoreInterface
from core.services.association_service import ScanOptions, association_scan
from core.services.genomic_control_service import gc_adjust, lambda_median
from core.services.kinship_service import estimate_kinship
from core.services.simulation_service import (
    replicate_rng,
    simulate_cousin_panel,
    simulate_panel,
)

P_FLOOR = 1e-300
ALPHAS = (0.05, 0.001)

Results = Union[Sequence[TestResult], np.ndarray]


def _p_values(results: Results) -> np.ndarray:
    if isinstance(results, np.ndarray):
        return results.astype(float)
    return result_p_values(results)


def _statistics(results: Results) -> np.ndarray:
    if isinstance(results, np.ndarray):
        return results.astype(float)
    return result_statistics(results)


def qq(results: Results, null_mask: Optional[np.ndarray] = None) -> QqData:
    """Expected (i - 0.5)/m against observed -log10 p-values, both ascending.

    ``results`` may be test results or raw p-values; NA entries are dropped
    and zero p-values are clamped at 1e-300.
    """
    p = _p_values(results)
    if null_mask is not None:
        p = p[np.asarray(null_mask, dtype=bool)]
    p = p[np.isfinite(p)]
    m = p.size
    if m == 0:
        raise KinwardValidationError("Q-Q data needs at least one p-value")
    clamped = int(np.sum(p <= 0.0))
    observed = np.sort(-np.log10(np.maximum(p, P_FLOOR)))
    expected = -np.log10((np.arange(m, 0, -1) - 0.5) / m)
    return QqData(expected=expected, observed=observed, clamped=clamped)


def roc(results: Results, causal: np.ndarray) -> RocCurve:
    """Pooled ROC sweeping thresholds over the statistics; NA entries are dropped."""
    scores = _statistics(results)
    causal = np.asarray(causal, dtype=bool)
    if causal.shape != scores.shape:
        raise KinwardValidationError("One truth label per result is required")
    keep = np.isfinite(scores)
    scores, causal = scores[keep], causal[keep]
    if not causal.any() or causal.all():
        raise KinwardValidationError("ROC needs at least one causal and one null SNP")
    fpr, tpr, thresholds = metrics.roc_curve(causal, scores, drop_intermediate=False)
    return RocCurve(thresholds=thresholds, tpr=tpr, fpr=fpr, auc=float(metrics.auc(fpr, tpr)))


def type1_error(results: Results, null_mask: np.ndarray, alpha: float) -> float:
    p = _p_values(results)[np.asarray(null_mask, dtype=bool)]
    p = p[np.isfinite(p)]
    return float(np.mean(p < alpha)) if p.size else float("nan")


@dataclass(frozen=True)
class ReplicateOutcome:
    statistics: Dict[str, np.ndarray]
    p_values: Dict[str, np.ndarray]
    lambdas: Dict[str, float]
    null_mask: np.ndarray


def _median_lambda(stats: np.ndarray) -> float:
    finite = stats[np.isfinite(stats)]
    return lambda_median(finite).value if finite.size else float("nan")


def run_replicate(
    sim: SimOutput,
    methods: Sequence[str],
    kinship_source: KinshipSource,
    num_pcs: Optional[int] = None,
) -> ReplicateOutcome:
    """Every requested method on one simulated panel."""
    num_pcs = Config.NUM_PCS if num_pcs is None else num_pcs
    g, y = sim.genotypes, sim.phenotype
    if KinshipSource(kinship_source) is KinshipSource.TRUE:
        K = sim.true_kinship
    else:
        K, _ = estimate_kinship(g, KinshipMethod.CORRELATION)

    statistics, p_values, lambdas = {}, {}, {}
    options = ScanOptions(num_pcs=num_pcs)
    for name in methods:
        method = Method(name)
        if method is Method.GC:
            raw, _ = association_scan(g, y, Method.ARMITAGE)
            estimate = lambda_median(result_statistics(raw))
            results = gc_adjust(raw, estimate)
            lambdas[name] = estimate.value
        else:
            results, _ = association_scan(g, y, method, K, options)
            lambdas[name] = _median_lambda(result_statistics(results))
        statistics[name] = result_statistics(results)
        p_values[name] = result_p_values(results)
    return ReplicateOutcome(statistics, p_values, lambdas, sim.null_mask)


def compare_methods(
    scenario: SimScenario,
    methods: Sequence[str],
    replicates: int,
    kinship_source: KinshipSource = KinshipSource.TRUE,
    n_jobs: Optional[int] = None,
    num_pcs: Optional[int] = None,
) -> Tuple[List[MethodSummary], Dict[str, QqData], Dict[str, Optional[RocCurve]]]:
    """Simulate, test and pool replicates; reduction follows replicate order."""
    methods = [Method(m).value for m in methods]
    n_jobs = n_jobs or Config.N_JOBS

    def one(r: int) -> ReplicateOutcome:
        sim = simulate_panel(scenario, replicate_rng(scenario.seed, r))
        outcome = run_replicate(sim, methods, kinship_source, num_pcs)
        app_logger.info("Replicate %d of %d done", r + 1, replicates)
        return outcome

    if n_jobs == 1:
        outcomes = [one(r) for r in range(replicates)]
    else:
        outcomes = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(one)(r) for r in range(replicates)
        )

    null_mask = np.concatenate([o.null_mask for o in outcomes])
    summaries, qq_data, roc_data = [], {}, {}
    for name in methods:
        stats = np.concatenate([o.statistics[name] for o in outcomes])
        p = np.concatenate([o.p_values[name] for o in outcomes])
        qq_data[name] = qq(p, null_mask)
        curve = roc(stats, ~null_mask) if (~null_mask).any() else None
        roc_data[name] = curve
        summaries.append(
            MethodSummary(
                method=name,
                mean_lambda=float(np.nanmean([o.lambdas[name] for o in outcomes])),
                auc=curve.auc if curve is not None else float("nan"),
                type1_05=type1_error(p, null_mask, ALPHAS[0]),
                type1_001=type1_error(p, null_mask, ALPHAS[1]),
                n_null=int(null_mask.sum()),
                n_causal=int((~null_mask).sum()),
            )
        )
    return summaries, qq_data, roc_data


def _pair_values(K: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    return K[pairs[:, 0], pairs[:, 1]]


def _rescaled_spread(cousins: np.ndarray, unrelated: np.ndarray) -> Tuple[float, float]:
    """SDs after the affine map sending the unrelated mean to 0 and the cousin mean to 1/16."""
    separation = float(np.mean(cousins) - np.mean(unrelated))
    if not separation > 0.0:
        raise KinwardValidationError("Cousin pairs are not separated from unrelated pairs")
    scale = (1.0 / 16.0) / separation
    return float(np.std(cousins, ddof=1)) * scale, float(np.std(unrelated, ddof=1)) * scale


def kinship_precision_experiment(
    datasets: int = 100,
    n_pairs: int = 200,
    n_unrelated: int = 800,
    n_snps: int = 10_000,
    seed: Optional[int] = None,
    n_jobs: Optional[int] = None,
) -> PrecisionSummary:
    """Spread of the correlation and IBS estimators on cousin and unrelated pairs."""
    seed = Config.SEED if seed is None else seed
    n_jobs = n_jobs or Config.N_JOBS

    def one(d: int) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
        panel = simulate_cousin_panel(n_pairs, n_unrelated, n_snps, rng=replicate_rng(seed, d))
        values = {}
        for method in (KinshipMethod.CORRELATION, KinshipMethod.IBS):
            K, _ = estimate_kinship(panel.genotypes, method, freq_iters=0)
            values[method.value] = (
                _pair_values(K.K, panel.cousin_pairs),
                _pair_values(K.K, panel.unrelated_pairs),
            )
        return values

    if n_jobs == 1:
        per_dataset = [one(d) for d in range(datasets)]
    else:
        per_dataset = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(one)(d) for d in range(datasets)
        )

    spread = {}
    for method in (KinshipMethod.CORRELATION, KinshipMethod.IBS):
        cousins = np.concatenate([v[method.value][0] for v in per_dataset])
        unrelated = np.concatenate([v[method.value][1] for v in per_dataset])
        spread[method] = _rescaled_spread(cousins, unrelated)
    return PrecisionSummary(
        sd_correlation=spread[KinshipMethod.CORRELATION],
        sd_ibs=spread[KinshipMethod.IBS],
        datasets=datasets,
    )


class EvaluationDomainService(EvaluationServiceInterface):
    def __init__(self, store: GenotypeStoreInterface) -> None:
        self.store = store

    def _write(self, out_dir: str, summaries, qq_data, roc_data) -> None:
        os.makedirs(out_dir, exist_ok=True)
        for name, data in qq_data.items():
            table = pd.DataFrame({"expected": data.expected, "observed": data.observed})
            self.store.write_table(os.path.join(out_dir, f"qq_{name}.tsv"), table)
        for name, curve in roc_data.items():
            if curve is None:
                continue
            table = pd.DataFrame(
                {"threshold": curve.thresholds, "fpr": curve.fpr, "tpr": curve.tpr}
            )
            self.store.write_table(os.path.join(out_dir, f"roc_{name}.tsv"), table)
        summary = pd.DataFrame([s.as_row() for s in summaries])
        self.store.write_table(os.path.join(out_dir, "summary.tsv"), summary)

    def process_evaluation_request(self, request: EvaluationRequest) -> EvaluationResponse:
        try:
            scenario = request.scenario if request.full_scale else request.scenario.desk_scale()
            app_logger.info(
                "Comparing %s over %d replicates with %s kinship (%d SNPs)",
                ",".join(request.methods),
                request.replicates,
                request.kinship_source.value,
                scenario.n_snps,
            )
            summaries, qq_data, roc_data = compare_methods(
                scenario, request.methods, request.replicates, request.kinship_source
            )
            if request.out_dir:
                self._write(request.out_dir, summaries, qq_data, roc_data)
            return EvaluationResponse(
                success=True, summaries=summaries, qq=qq_data, roc=roc_data
            )

        except KinwardException as eval_error:

            return EvaluationResponse(success=False, error_message=str(eval_error))

        except (ValueError, TypeError) as e:

            return EvaluationResponse(
                success=False,
                error_message=f"Processing error during evaluation: {str(e)}",
            )

        except OSError as system_error:

            return EvaluationResponse(
                success=False,
                error_message=f"System error during evaluation: {str(system_error)}",
            )

    def process_precision_request(self, request: PrecisionRequest) -> PrecisionResponse:
        try:
            summary = kinship_precision_experiment(
                request.datasets,
                request.n_pairs,
                request.n_unrelated,
                request.n_snps,
                request.seed,
            )
            app_logger.info(
                "IBS / correlation SD ratio: cousins %.3f, unrelated %.3f",
                *summary.ratio,
            )
            if request.out_path:
                table = pd.DataFrame(
                    {
                        "pair_class": ["cousin", "unrelated"],
                        "sd_correlation": summary.sd_correlation,
                        "sd_ibs": summary.sd_ibs,
                        "ratio": summary.ratio,
                    }
                )
                self.store.write_table(request.out_path, table)
            return PrecisionResponse(success=True, summary=summary)

        except KinwardException as eval_error:

            return PrecisionResponse(success=False, error_message=str(eval_error))

        except (ValueError, TypeError) as e:

            return PrecisionResponse(
                success=False,
                error_message=f"Processing error during the precision experiment: {str(e)}",
            )
