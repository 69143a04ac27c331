from abc import ABC, abstractmethod

from core.domain.sim_model import SimulationRequest, SimulationResponse


class SimulationServiceInterface(ABC):
    @abstractmethod
    def process_simulation_request(
        self, request: SimulationRequest
    ) -> SimulationResponse:
        raise NotImplementedError
