from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple


class KinshipControllerInterface(ABC):
    @abstractmethod
    def estimate_kinship(self) -> Tuple[Dict[str, Any], int]:
        raise NotImplementedError
