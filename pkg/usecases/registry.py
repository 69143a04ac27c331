from dataclasses import dataclass

from core.interfaces.genotype_store_interface import GenotypeStoreInterface
from core.services.association_service import AssociationDomainService
from core.services.evaluation_service import EvaluationDomainService
from core.services.genomic_control_service import GenomicControlDomainService
from core.services.kinship_service import KinshipDomainService
from core.services.simulation_service import SimulationDomainService
from usecases.compare_methods_use_case import CompareMethodsUseCase, KinshipPrecisionUseCase
from usecases.estimate_kinship_use_case import EstimateKinshipUseCase
from usecases.genomic_control_use_case import GenomicControlUseCase
from usecases.run_association_use_case import RunAssociationUseCase
from usecases.simulate_study_use_case import SimulateStudyUseCase


@dataclass(frozen=True)
class UseCases:
    """Every verb of the tool, wired to one store."""

    store: GenotypeStoreInterface
    kinship: EstimateKinshipUseCase
    association: RunAssociationUseCase
    genomic_control: GenomicControlUseCase
    simulation: SimulateStudyUseCase
    evaluation: CompareMethodsUseCase
    precision: KinshipPrecisionUseCase


def build_use_cases(store: GenotypeStoreInterface) -> UseCases:
    evaluation_service = EvaluationDomainService(store)
    return UseCases(
        store=store,
        kinship=EstimateKinshipUseCase(KinshipDomainService(store)),
        association=RunAssociationUseCase(AssociationDomainService(store)),
        genomic_control=GenomicControlUseCase(GenomicControlDomainService(store)),
        simulation=SimulateStudyUseCase(SimulationDomainService(store)),
        evaluation=CompareMethodsUseCase(evaluation_service),
        precision=KinshipPrecisionUseCase(evaluation_service),
    )
