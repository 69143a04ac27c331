from abc import ABC, abstractmethod

from core.domain.kinship_model import KinshipRequest, KinshipResponse


class KinshipServiceInterface(ABC):
    @abstractmethod
    def process_kinship_request(self, request: KinshipRequest) -> KinshipResponse:
        raise NotImplementedError
