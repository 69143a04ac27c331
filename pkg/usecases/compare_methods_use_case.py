from core.domain.eval_model import (
    EvaluationRequest,
    EvaluationResponse,
    PrecisionRequest,
    PrecisionResponse,
)
from core.interfaces.evaluation_service_interface import EvaluationServiceInterface
from core.interfaces.use_case_interfaces import UseCaseInterface


class CompareMethodsUseCase(UseCaseInterface[EvaluationRequest, EvaluationResponse]):
    def __init__(self, service: EvaluationServiceInterface) -> None:
        self.service = service

    def execute(self, request: EvaluationRequest) -> EvaluationResponse:
        return self.service.process_evaluation_request(request)


class KinshipPrecisionUseCase(UseCaseInterface[PrecisionRequest, PrecisionResponse]):
    def __init__(self, service: EvaluationServiceInterface) -> None:
        self.service = service

    def execute(self, request: PrecisionRequest) -> PrecisionResponse:
        return self.service.process_precision_request(request)
