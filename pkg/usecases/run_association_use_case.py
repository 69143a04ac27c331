from core.domain.assoc_model import AssociationRequest, AssociationResponse
from core.interfaces.association_service_interface import AssociationServiceInterface
from core.interfaces.use_case_interfaces import UseCaseInterface


class RunAssociationUseCase(UseCaseInterface[AssociationRequest, AssociationResponse]):
    def __init__(self, service: AssociationServiceInterface) -> None:
        self.service = service

    def execute(self, request: AssociationRequest) -> AssociationResponse:
        return self.service.process_association_request(request)
