from typing import Any, Callable, Dict, Tuple

from flask import Blueprint, request
from marshmallow import ValidationError, fields, validate

from adapters.controllers.payloads import (
    REQUEST_KEY,
    GenotypePayloadSchema,
    preflight,
    to_genotypes,
)
from adapters.loggers.logger_adapter import app_logger
from adapters.storage.memory_store import MemoryStore
from app.api_response import ApiResponse, json_floats
from config import Config
from core.domain.exceptions import KinwardException
from core.domain.genotype_model import Pedigree
from core.domain.kinship_model import KinshipMethod, KinshipRequest
from core.interfaces.kinship_controller_interface import KinshipControllerInterface
from usecases.registry import UseCases

UNKNOWN_PARENTS = (None, "", "0")

UseCaseFactory = Callable[[MemoryStore], UseCases]


class KinshipRequestSchema(GenotypePayloadSchema):
    genotypes = fields.List(
        fields.List(fields.Float(allow_none=True), validate=validate.Length(min=1)),
        load_default=None,
        validate=validate.Length(min=2),
    )
    method = fields.String(
        load_default=KinshipMethod.CORRELATION.value,
        validate=validate.OneOf([m.value for m in KinshipMethod]),
    )
    freq_iters = fields.Integer(
        load_default=Config.FREQ_ITERS, validate=validate.Range(min=0, max=50)
    )
    pedigree = fields.List(
        fields.List(fields.String(allow_none=True), validate=validate.Length(equal=3)),
        load_default=None,
    )


def _pedigree(rows) -> Pedigree:
    members, mother, father = [], {}, {}
    for member, mum, dad in rows:
        members.append(member)
        mother[member] = None if mum in UNKNOWN_PARENTS else mum
        father[member] = None if dad in UNKNOWN_PARENTS else dad
    return Pedigree(members=tuple(members), mother=mother, father=father)


class KinshipController(KinshipControllerInterface):
    def __init__(self, use_case_factory: UseCaseFactory) -> None:
        self.use_case_factory = use_case_factory

    def estimate_kinship(self) -> Tuple[Dict[str, Any], int]:
        try:
            data = request.get_json(silent=True) or {}
            validated = KinshipRequestSchema().load(data)

            store = MemoryStore()
            method = KinshipMethod(validated["method"])
            genotypes_key = pedigree_key = None
            if method is KinshipMethod.PEDIGREE:
                if not validated["pedigree"]:
                    raise ValidationError({"pedigree": ["Required for pedigree kinship"]})
                store.write_pedigree(REQUEST_KEY, _pedigree(validated["pedigree"]))
                pedigree_key = REQUEST_KEY
            else:
                if not validated["genotypes"]:
                    raise ValidationError({"genotypes": ["Required for marker-based kinship"]})
                store.write_genotypes(REQUEST_KEY, to_genotypes(validated["genotypes"]))
                genotypes_key = REQUEST_KEY

            kinship_request = KinshipRequest(
                genotypes_path=genotypes_key,
                method=method,
                pedigree_path=pedigree_key,
                freq_iters=validated["freq_iters"],
            )
            response = self.use_case_factory(store).kinship.execute(kinship_request)

            if response.success:
                kinship = response.kinship
                return (
                    ApiResponse.success(
                        {
                            "method": method.value,
                            "n": kinship.n,
                            "ids": list(kinship.ids),
                            "kinship": json_floats(kinship.K),
                            "inbreeding": json_floats(kinship.inbreeding),
                            "excluded_snps": response.excluded_snps,
                        }
                    ),
                    200,
                )

            app_logger.error("Kinship estimation failed: %s", response.error_message)
            return (
                ApiResponse.error(
                    response.error_message or "Kinship estimation failed",
                    error_code="ANALYSIS_FAILED",
                ),
                422,
            )

        except ValidationError as validation_error:
            app_logger.error("Request validation failed: %s", validation_error.messages)
            return (
                ApiResponse.error(
                    "Validation error",
                    details=validation_error.messages,
                    error_code="VALIDATION_ERROR",
                ),
                400,
            )

        except KinwardException as domain_error:
            app_logger.error("Invalid kinship input: %s", domain_error)
            return ApiResponse.error(str(domain_error), error_code="ANALYSIS_FAILED"), 422

        except (ValueError, TypeError) as processing_error:
            app_logger.error("Processing error: %s", str(processing_error))
            return (
                ApiResponse.error(str(processing_error), error_code="VALIDATION_ERROR"),
                400,
            )


def create_kinship_blueprint(use_case_factory: UseCaseFactory) -> Blueprint:
    blueprint = Blueprint("kinship", __name__, url_prefix="/api/kinship")
    controller = KinshipController(use_case_factory)

    @blueprint.route("", methods=["POST", "OPTIONS"])
    def estimate():
        if request.method == "OPTIONS":
            return preflight()

        return controller.estimate_kinship()

    return blueprint
