from abc import ABC, abstractmethod

from core.domain.assoc_model import (
    AssociationRequest,
    AssociationResponse,
    GenomicControlRequest,
    GenomicControlResponse,
)


class AssociationServiceInterface(ABC):
    @abstractmethod
    def process_association_request(
        self, request: AssociationRequest
    ) -> AssociationResponse:
        raise NotImplementedError


class GenomicControlServiceInterface(ABC):
    @abstractmethod
    def process_gc_request(
        self, request: GenomicControlRequest
    ) -> GenomicControlResponse:
        raise NotImplementedError
