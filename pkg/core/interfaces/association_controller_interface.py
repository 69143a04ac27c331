from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple


class AssociationControllerInterface(ABC):
    @abstractmethod
    def run_association(self) -> Tuple[Dict[str, Any], int]:
        raise NotImplementedError

    @abstractmethod
    def genomic_control(self) -> Tuple[Dict[str, Any], int]:
        raise NotImplementedError
