from abc import ABC, abstractmethod
from typing import Generic, TypeVar


RequestT = TypeVar("RequestT")
ResponseT = TypeVar("ResponseT")


class UseCaseInterface(ABC, Generic[RequestT, ResponseT]):
    @abstractmethod
    def execute(self, request: RequestT) -> ResponseT:
        raise NotImplementedError
