from core.domain.sim_model import SimulationRequest, SimulationResponse
from core.interfaces.simulation_service_interface import SimulationServiceInterface
from core.interfaces.use_case_interfaces import UseCaseInterface


class SimulateStudyUseCase(UseCaseInterface[SimulationRequest, SimulationResponse]):
    def __init__(self, service: SimulationServiceInterface) -> None:
        self.service = service

    def execute(self, request: SimulationRequest) -> SimulationResponse:
        return self.service.process_simulation_request(request)
