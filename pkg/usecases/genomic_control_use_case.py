from core.domain.assoc_model import GenomicControlRequest, GenomicControlResponse
from core.interfaces.association_service_interface import GenomicControlServiceInterface
from core.interfaces.use_case_interfaces import UseCaseInterface


class GenomicControlUseCase(UseCaseInterface[GenomicControlRequest, GenomicControlResponse]):
    def __init__(self, service: GenomicControlServiceInterface) -> None:
        self.service = service

    def execute(self, request: GenomicControlRequest) -> GenomicControlResponse:
        return self.service.process_gc_request(request)
