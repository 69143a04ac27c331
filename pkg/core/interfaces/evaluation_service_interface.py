from abc import ABC, abstractmethod

from core.domain.eval_model import (
    EvaluationRequest,
    EvaluationResponse,
    PrecisionRequest,
    PrecisionResponse,
)


class EvaluationServiceInterface(ABC):
    @abstractmethod
    def process_evaluation_request(
        self, request: EvaluationRequest
    ) -> EvaluationResponse:
        raise NotImplementedError

    @abstractmethod
    def process_precision_request(self, request: PrecisionRequest) -> PrecisionResponse:
        raise NotImplementedError
