from typing import Any, Dict, List, Sequence, Tuple

import pandas as pd

from core.domain.assoc_model import TestResult
from core.domain.exceptions import KinwardValidationError
from core.domain.genotype_model import GenotypeMatrix, Pedigree, Phenotype
from core.domain.kinship_model import KinshipMatrix
from core.domain.sim_model import SimScenario
from core.interfaces.genotype_store_interface import GenotypeStoreInterface


class MemoryStore(GenotypeStoreInterface):
    """Request-scoped store keyed by name, used by the HTTP adapters."""

    def __init__(self) -> None:
        self._items: Dict[Tuple[str, str], Any] = {}

    def _get(self, kind: str, key: str) -> Any:
        try:
            return self._items[(kind, key)]
        except KeyError:
            raise KinwardValidationError(f"No {kind} named '{key}'") from None

    def _put(self, kind: str, key: str, value: Any) -> None:
        self._items[(kind, key)] = value

    def read_genotypes(self, path: str) -> GenotypeMatrix:
        return self._get("genotypes", path)

    def write_genotypes(self, path: str, genotypes: GenotypeMatrix) -> None:
        self._put("genotypes", path, genotypes)

    def read_phenotypes(self, path: str) -> Phenotype:
        return self._get("phenotypes", path)

    def write_phenotypes(self, path: str, phenotype: Phenotype) -> None:
        self._put("phenotypes", path, phenotype)

    def read_pedigree(self, path: str) -> Pedigree:
        return self._get("pedigree", path)

    def write_pedigree(self, path: str, pedigree: Pedigree) -> None:
        self._put("pedigree", path, pedigree)

    def read_trios(self, path: str) -> List[Tuple[str, str, str]]:
        return list(self._get("trios", path))

    def write_trios(self, path: str, trios: Sequence[Tuple[str, str, str]]) -> None:
        self._put("trios", path, [tuple(str(i) for i in trio) for trio in trios])

    def read_matrix(self, path: str) -> KinshipMatrix:
        return self._get("matrix", path)

    def write_matrix(self, path: str, kinship: KinshipMatrix) -> None:
        self._put("matrix", path, kinship)

    def read_results(self, path: str) -> List[TestResult]:
        return list(self._get("results", path))

    def write_results(self, path: str, results: Sequence[TestResult]) -> None:
        self._put("results", path, list(results))

    def read_scenario(self, path: str) -> SimScenario:
        return self._get("scenario", path)

    def write_scenario(self, path: str, scenario: SimScenario) -> None:
        self._put("scenario", path, scenario)

    def write_table(self, path: str, table: pd.DataFrame) -> None:
        self._put("table", path, table.copy())

    def read_table(self, path: str) -> pd.DataFrame:
        return self._get("table", path)
