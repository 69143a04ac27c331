from typing import Optional


class KinwardException(Exception):
    def __init__(self, message: str = "kinward operation failed") -> None:
        self.message = message
        super().__init__(self.message)


class KinwardValidationError(KinwardException):
    def __init__(self, message: str = "Request validation failed") -> None:
        super().__init__(message)


class GenotypeFormatError(KinwardException):
    def __init__(self, message: str = "Malformed input file", line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PedigreeError(KinwardException):
    def __init__(self, message: str = "Invalid pedigree") -> None:
        super().__init__(message)


class DegenerateSnpError(KinwardException):
    def __init__(self, message: str = "Degenerate SNP") -> None:
        super().__init__(message)


class KinshipError(KinwardException):
    def __init__(self, message: str = "Kinship estimation failed") -> None:
        super().__init__(message)


class NumericalError(KinwardException):
    def __init__(self, message: str = "Numerical failure") -> None:
        super().__init__(message)


class AssociationError(KinwardException):
    def __init__(self, message: str = "Association test failed") -> None:
        super().__init__(message)


class SimulationError(KinwardException):
    def __init__(self, message: str = "Simulation failed") -> None:
        super().__init__(message)
