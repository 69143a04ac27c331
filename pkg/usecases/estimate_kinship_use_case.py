from core.domain.kinship_model import KinshipRequest, KinshipResponse
from core.interfaces.kinship_service_interface import KinshipServiceInterface
from core.interfaces.use_case_interfaces import UseCaseInterface


class EstimateKinshipUseCase(UseCaseInterface[KinshipRequest, KinshipResponse]):
    def __init__(self, service: KinshipServiceInterface) -> None:
        self.service = service

    def execute(self, request: KinshipRequest) -> KinshipResponse:
        return self.service.process_kinship_request(request)
