from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from adapters.loggers.logger_adapter import app_logger
from core.domain.assoc_model import (
    AssociationRequest,
    AssociationResponse,
    Method,
    MixedModelMode,
    TestResult,
    TrioSet,
)
from core.domain.exceptions import AssociationError, KinwardException
from core.domain.genotype_model import GenotypeMatrix, Pedigree, Phenotype
from core.domain.kinship_model import KinshipMatrix, KinshipMethod
from core.interfaces.association_service_interface import AssociationServiceInterface
from core.interfaces.genotype_store_interface import GenotypeStoreInterface
from core.services.genotype_service import drop_monomorphic, estimate_frequencies, impute_mean
from core.services.kinship_service import estimate_kinship
from core.services.structure_service import (
    MixedModel,
    PcAdjuster,
    grammar_residuals,
    grammar_scan,
    ld_prune,
    principal_components,
)
from utils.linalg import factor_kinship
from utils.stats import binomial_two_sided

VARIANCE_FLOOR = 1e-12


def _as_vector(values: Union[Phenotype, np.ndarray, Sequence[float]]) -> np.ndarray:
    if isinstance(values, Phenotype):
        return values.values.astype(float)
    return np.asarray(values, dtype=float)


def _armitage_statistics(X: np.ndarray, observed: np.ndarray, y: np.ndarray) -> np.ndarray:
    """T^2/V per column; NaN where V vanishes or a class is empty."""
    O = observed.astype(float)
    Xo = np.where(observed, X, 0.0)
    n = O.sum(axis=0)
    n1 = y @ O
    n0 = n - n1
    with np.errstate(invalid="ignore", divide="ignore"):
        T = (y @ Xo) / n1 - ((1.0 - y) @ Xo) / n0
        mean = Xo.sum(axis=0) / n
        V = (1.0 / n0 + 1.0 / n1) * ((Xo ** 2).sum(axis=0) / n - mean ** 2)
        stat = T ** 2 / V
    degenerate = (n0 == 0) | (n1 == 0) | ~(V > VARIANCE_FLOOR)
    return np.where(degenerate, np.nan, stat)


def armitage(x: Sequence[float], y: Phenotype, snp_index: int = 0) -> TestResult:
    """Armitage trend test; NaN entries of x are treated as missing."""
    y.require_case_control()
    x = np.asarray(x, dtype=float)
    if x.size != y.n:
        raise AssociationError("Genotype and phenotype lengths differ")
    observed = ~np.isnan(x)
    stat = _armitage_statistics(x[:, None], observed[:, None], y.values)[0]
    if np.isnan(stat):
        return TestResult.na(snp_index, Method.ARMITAGE, flag="constant")
    return TestResult.chi2(snp_index, Method.ARMITAGE, stat)


def armitage_scan(
    g: GenotypeMatrix, y: Phenotype, snp_indices: Optional[np.ndarray] = None
) -> List[TestResult]:
    y.require_case_control()
    snp_indices = np.arange(g.L) if snp_indices is None else snp_indices
    stats = _armitage_statistics(g.counts.astype(float), ~g.missing, y.values)
    return [
        TestResult.na(idx, Method.ARMITAGE, flag="constant")
        if np.isnan(s)
        else TestResult.chi2(idx, Method.ARMITAGE, s)
        for idx, s in zip(snp_indices, stats)
    ]


def count_transmissions(trios: TrioSet) -> Tuple[int, int]:
    """(n_a, n_A) over transmissions from heterozygous parents.

    For Aa x Aa matings the child's genotype fixes the unordered pair of
    transmitted alleles even though the parent of origin is unknown.
    """
    n_a = n_A = 0
    for father, mother, child in trios.trios:
        het = (father == 1) + (mother == 1)
        if het == 0:
            continue
        if het == 2:
            n_A += child
            n_a += 2 - child
            continue
        homozygous = mother if father == 1 else father
        transmitted = child - homozygous // 2
        n_A += transmitted
        n_a += 1 - transmitted
    return n_a, n_A


def tdt(trios: TrioSet, snp_index: int = 0) -> TestResult:
    """McNemar statistic (n_a - n_A)^2 / (n_a + n_A) with an exact binomial p-value."""
    n_a, n_A = count_transmissions(trios)
    informative = n_a + n_A
    if informative == 0:
        raise AssociationError("No informative transmission from a heterozygous parent")
    stat = (n_a - n_A) ** 2 / informative
    return TestResult.chi2(
        snp_index, Method.TDT, stat, exact_p_value=binomial_two_sided(n_A, informative)
    )


def tdt_scan(
    g: GenotypeMatrix,
    trio_rows: Sequence[Tuple[int, int, int]],
    snp_indices: Optional[np.ndarray] = None,
) -> List[TestResult]:
    """TDT per SNP over fully genotyped, Mendelian-consistent trios."""
    snp_indices = np.arange(g.L) if snp_indices is None else snp_indices
    rows = np.asarray(trio_rows, dtype=int).reshape(-1, 3)
    results = []
    skipped = 0
    for col, idx in enumerate(snp_indices):
        counts = g.counts[rows, col]
        complete = ~g.missing[rows, col].any(axis=1)
        usable = []
        for trio in counts[complete]:
            try:
                usable.append(TrioSet(trios=(tuple(trio),)).trios[0])
            except ValueError:
                skipped += 1
        try:
            results.append(tdt(TrioSet(trios=tuple(usable)), idx))
        except AssociationError:
            results.append(TestResult.na(idx, Method.TDT, flag="uninformative"))
    if skipped:
        app_logger.warning("Skipped %d Mendelian-inconsistent trio genotypes", skipped)
    return results


class McpScorer:
    """Retrospective score test T^2/V with P = K^-1 - K^-1 11' K^-1 / 1'K^-1 1.

    The factorization of K is computed once and shared across SNPs.
    """

    def __init__(self, K: KinshipMatrix) -> None:
        factor = factor_kinship(K.K)
        self.ridged = factor.ridged
        if self.ridged:
            app_logger.warning("Kinship matrix is near singular; MCP uses a ridged inverse")
        Kinv = factor.inverse()
        w = Kinv.sum(axis=1)
        P = Kinv - np.outer(w, w) / w.sum()
        self.P = (P + P.T) / 2.0
        self.n = K.n

    def components(self, x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
        """(T, V) for a single genotype/phenotype pair."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        Px = self.P @ x
        Py = self.P @ y
        T = float(y @ Px)
        V = (float(y @ Py) * float(x @ Px) - T ** 2) / (self.n - 1)
        return T, V

    def _flag(self) -> Optional[str]:
        return "ridge" if self.ridged else None

    def test(self, x: np.ndarray, y: np.ndarray, snp_index: int = 0) -> TestResult:
        T, V = self.components(x, y)
        scale = float(np.abs(x @ self.P @ x) * np.abs(y @ self.P @ y)) / (self.n - 1)
        if not V > VARIANCE_FLOOR * max(scale, 1.0):
            return TestResult.na(snp_index, Method.MCP, flag="degenerate")
        return TestResult.chi2(snp_index, Method.MCP, T ** 2 / V, flag=self._flag())

    def scan(
        self, X: np.ndarray, y: np.ndarray, snp_indices: Optional[np.ndarray] = None
    ) -> List[TestResult]:
        snp_indices = np.arange(X.shape[1]) if snp_indices is None else snp_indices
        PX = self.P @ X
        T = y @ PX
        xPx = np.einsum("ij,ij->j", X, PX)
        yPy = float(y @ self.P @ y)
        V = (yPy * xPx - T ** 2) / (self.n - 1)
        floor = VARIANCE_FLOOR * np.maximum(np.abs(yPy * xPx) / (self.n - 1), 1.0)
        results = []
        for idx, t, v, ok in zip(snp_indices, T, V, V > floor):
            if ok:
                results.append(TestResult.chi2(idx, Method.MCP, t ** 2 / v, flag=self._flag()))
            else:
                results.append(TestResult.na(idx, Method.MCP, flag="degenerate"))
        return results


def mcp_score(
    x: Union[np.ndarray, Sequence[float], Phenotype],
    y: Union[Phenotype, np.ndarray, Sequence[float]],
    K: KinshipMatrix,
    snp_index: int = 0,
) -> TestResult:
    x, y = _as_vector(x), _as_vector(y)
    if x.size != K.n or y.size != K.n:
        raise AssociationError("Genotype, phenotype and kinship dimensions differ")
    if np.ptp(y) == 0.0:
        raise AssociationError("Phenotype is constant")
    return McpScorer(K).test(x, y, snp_index)


def mcp_scan(
    g: GenotypeMatrix,
    y: Phenotype,
    K: KinshipMatrix,
    snp_indices: Optional[np.ndarray] = None,
) -> List[TestResult]:
    if np.ptp(y.values) == 0.0:
        raise AssociationError("Phenotype is constant")
    X = impute_mean(g, estimate_frequencies(g))
    return McpScorer(K).scan(X, y.values, snp_indices)


def trio_rows(
    trio_ids: Sequence[Tuple[str, str, str]], ids: Sequence[str]
) -> List[Tuple[int, int, int]]:
    """Map (father, mother, child) IDs to genotype rows."""
    index = {pid: row for row, pid in enumerate(ids)}
    rows = []
    for trio in trio_ids:
        missing = [pid for pid in trio if pid not in index]
        if missing:
            raise AssociationError(f"Trio member(s) {', '.join(missing)} have no genotype row")
        rows.append(tuple(index[pid] for pid in trio))
    return rows


def trios_from_pedigree(pedigree: Pedigree) -> List[Tuple[str, str, str]]:
    """(father, mother, child) IDs for every non-founder, in pedigree order."""
    return [
        (pedigree.father[member], pedigree.mother[member], member)
        for member in pedigree.members
        if not pedigree.is_founder(member)
    ]


def affected_trios(
    trio_ids: Sequence[Tuple[str, str, str]], phenotype: Phenotype
) -> List[Tuple[str, str, str]]:
    """Trios whose child is a case; a quantitative phenotype keeps every trio.

    Children without a phenotype entry are dropped along with unaffected ones.
    """
    if not phenotype.is_binary:
        return list(trio_ids)
    status = dict(zip(phenotype.ids, phenotype.values))
    kept = [trio for trio in trio_ids if status.get(trio[2]) == 1.0]
    if not kept:
        raise AssociationError("No trio has an affected child")
    if len(kept) < len(trio_ids):
        app_logger.info("Dropped %d trios with unaffected children", len(trio_ids) - len(kept))
    return kept


@dataclass
class ScanOptions:
    num_pcs: int = 10
    mm_mode: MixedModelMode = MixedModelMode.LRT
    approximate: bool = False
    ld_r2: Optional[float] = None
    trios: Sequence[Tuple[int, int, int]] = ()


def association_scan(
    g: GenotypeMatrix,
    y: Phenotype,
    method: Method,
    K: Optional[KinshipMatrix] = None,
    options: Optional[ScanOptions] = None,
) -> Tuple[List[TestResult], int]:
    """One result per SNP of ``g``; monomorphic SNPs are reported as NA.

    Kinship-based methods estimate K from the genotypes when none is given.
    Returns the results and the number of excluded SNPs.
    """
    method = Method(method)
    options = options or ScanOptions()
    if y.n != g.n:
        raise AssociationError("Genotype rows and phenotype entries differ in number")

    polymorphic, kept = drop_monomorphic(g)
    results: List[Optional[TestResult]] = [None] * g.L
    for idx in np.setdiff1d(np.arange(g.L), kept):
        results[idx] = TestResult.na(idx, method, flag="monomorphic")
    if kept.size == 0:
        return list(results), g.L

    if method is Method.ARMITAGE:
        scanned = armitage_scan(polymorphic, y, kept)
    elif method is Method.TDT:
        scanned = tdt_scan(polymorphic, options.trios, kept)
    else:
        scanned = _kinship_scan(polymorphic, y, method, K, options, kept)

    for result in scanned:
        results[result.snp_index] = result
    return list(results), g.L - kept.size


def _kinship_scan(
    g: GenotypeMatrix,
    y: Phenotype,
    method: Method,
    K: Optional[KinshipMatrix],
    options: ScanOptions,
    snp_indices: np.ndarray,
) -> List[TestResult]:
    if K is None:
        source = g
        if method is Method.PC and options.ld_r2 is not None:
            source = g.select_snps(ld_prune(g, options.ld_r2))
        K, _ = estimate_kinship(source, KinshipMethod.CORRELATION)
    if K.n != g.n:
        raise AssociationError("Kinship and genotype dimensions differ")

    X = impute_mean(g, estimate_frequencies(g))
    if method is Method.MCP:
        if np.ptp(y.values) == 0.0:
            raise AssociationError("Phenotype is constant")
        return McpScorer(K).scan(X, y.values, snp_indices)
    if method is Method.PC:
        pcs = principal_components(K, options.num_pcs) if options.num_pcs else None
        return PcAdjuster(y, pcs).scan(X, snp_indices)

    model = MixedModel(y, K)
    if method is Method.MM:
        return model.scan(X, options.mm_mode, snp_indices, approximate=options.approximate)
    if method is Method.GRAMMAR:
        residuals = grammar_residuals(y, model.fit_null(), model)
        return grammar_scan(residuals, X, snp_indices)
    raise AssociationError(f"Method {method.value} does not run on genotypes")


class AssociationDomainService(AssociationServiceInterface):
    def __init__(self, store: GenotypeStoreInterface) -> None:
        self.store = store

    def process_association_request(self, request: AssociationRequest) -> AssociationResponse:
        try:
            genotypes = self.store.read_genotypes(request.genotypes_path)
            phenotype = self.store.read_phenotypes(request.phenotypes_path)
            kinship = (
                self.store.read_matrix(request.kinship_path) if request.kinship_path else None
            )
            options = ScanOptions(
                num_pcs=request.num_pcs,
                mm_mode=request.mm_mode,
                approximate=request.approximate,
                ld_r2=request.ld_r2,
            )
            if request.method is Method.TDT:
                if request.trios_path:
                    trio_ids = self.store.read_trios(request.trios_path)
                else:
                    trio_ids = trios_from_pedigree(self.store.read_pedigree(request.pedigree_path))
                options.trios = trio_rows(affected_trios(trio_ids, phenotype), phenotype.ids)

            app_logger.info(
                "Running %s on %d individuals at %d SNPs",
                request.method.value,
                genotypes.n,
                genotypes.L,
            )
            results, excluded = association_scan(
                genotypes, phenotype, request.method, kinship, options
            )
            if request.out_path:
                self.store.write_results(request.out_path, results)

            return AssociationResponse(success=True, results=results, excluded_snps=excluded)

        except KinwardException as assoc_error:

            return AssociationResponse(success=False, error_message=str(assoc_error))

        except (ValueError, TypeError) as e:

            return AssociationResponse(
                success=False,
                error_message=f"Processing error during association testing: {str(e)}",
            )

        except OSError as system_error:

            return AssociationResponse(
                success=False,
                error_message=f"System error during association testing: {str(system_error)}",
            )
