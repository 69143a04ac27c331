from abc import ABC, abstractmethod
from typing import List, Sequence, Tuple

import pandas as pd

from core.domain.assoc_model import TestResult
from core.domain.genotype_model import GenotypeMatrix, Pedigree, Phenotype
from core.domain.kinship_model import KinshipMatrix
from core.domain.sim_model import SimScenario


class GenotypeStoreInterface(ABC):
    @abstractmethod
    def read_genotypes(self, path: str) -> GenotypeMatrix:
        raise NotImplementedError

    @abstractmethod
    def write_genotypes(self, path: str, genotypes: GenotypeMatrix) -> None:
        raise NotImplementedError

    @abstractmethod
    def read_phenotypes(self, path: str) -> Phenotype:
        raise NotImplementedError

    @abstractmethod
    def write_phenotypes(self, path: str, phenotype: Phenotype) -> None:
        raise NotImplementedError

    @abstractmethod
    def read_pedigree(self, path: str) -> Pedigree:
        raise NotImplementedError

    @abstractmethod
    def write_pedigree(self, path: str, pedigree: Pedigree) -> None:
        raise NotImplementedError

    @abstractmethod
    def read_trios(self, path: str) -> List[Tuple[str, str, str]]:
        raise NotImplementedError

    @abstractmethod
    def read_matrix(self, path: str) -> KinshipMatrix:
        raise NotImplementedError

    @abstractmethod
    def write_matrix(self, path: str, kinship: KinshipMatrix) -> None:
        raise NotImplementedError

    @abstractmethod
    def read_results(self, path: str) -> List[TestResult]:
        raise NotImplementedError

    @abstractmethod
    def write_results(self, path: str, results: Sequence[TestResult]) -> None:
        raise NotImplementedError

    @abstractmethod
    def read_scenario(self, path: str) -> SimScenario:
        raise NotImplementedError

    @abstractmethod
    def write_table(self, path: str, table: pd.DataFrame) -> None:
        raise NotImplementedError
