from typing import Any, Callable, Dict, Tuple

from flask import Blueprint, current_app, request
from marshmallow import Schema, ValidationError, fields, validate, validates_schema

from adapters.controllers.payloads import (
    REQUEST_KEY,
    GenotypePayloadSchema,
    preflight,
    to_genotypes,
    to_kinship,
    to_phenotype,
)
from adapters.loggers.logger_adapter import app_logger
from adapters.storage.memory_store import MemoryStore
from app.api_response import ApiResponse, json_float, result_payload
from config import Config
from core.domain.assoc_model import (
    AssociationRequest,
    GenomicControlRequest,
    Method,
    MixedModelMode,
    TestResult,
)
from core.domain.exceptions import KinwardException
from core.interfaces.association_controller_interface import AssociationControllerInterface
from usecases.registry import UseCases

UseCaseFactory = Callable[[MemoryStore], UseCases]

INPUT_METHOD = "input"


class AssociationRequestSchema(GenotypePayloadSchema):
    phenotype = fields.List(fields.Float(), required=True, validate=validate.Length(min=2))
    ids = fields.List(fields.String(), load_default=None)
    method = fields.String(
        required=True,
        validate=validate.OneOf([m.value for m in Method if m is not Method.GC]),
    )
    kinship = fields.List(fields.List(fields.Float()), load_default=None)
    trios = fields.List(
        fields.List(fields.String(), validate=validate.Length(equal=3)), load_default=None
    )
    num_pcs = fields.Integer(load_default=Config.NUM_PCS, validate=validate.Range(min=0))
    mm_mode = fields.String(
        load_default=MixedModelMode.LRT.value,
        validate=validate.OneOf([m.value for m in MixedModelMode]),
    )
    approximate = fields.Boolean(load_default=False)
    ld_r2 = fields.Float(
        load_default=None, validate=validate.Range(min=0.0, max=1.0, min_inclusive=False)
    )

    @validates_schema
    def validate_shapes(self, data: Dict[str, Any], **kwargs) -> None:
        n = len(data["genotypes"])
        if len(data["phenotype"]) != n:
            raise ValidationError("One phenotype value per genotype row is required", "phenotype")
        if data["ids"] is not None and len(data["ids"]) != n:
            raise ValidationError("One ID per genotype row is required", "ids")
        kinship = data["kinship"]
        if kinship is not None and (len(kinship) != n or any(len(row) != n for row in kinship)):
            raise ValidationError(f"Kinship must be {n} x {n}", "kinship")
        if data["method"] == Method.TDT.value and not data["trios"]:
            raise ValidationError("Trios are required for the TDT", "trios")


class GenomicControlRequestSchema(Schema):
    statistics = fields.List(
        fields.Float(allow_none=True), required=True, validate=validate.Length(min=1)
    )
    method = fields.String(
        load_default="median", validate=validate.OneOf(["median", "mean", "trimmed"])
    )
    q = fields.Float(
        load_default=0.9, validate=validate.Range(min=0.0, max=1.0, min_inclusive=False)
    )
    floor = fields.Boolean(load_default=False)

    @validates_schema
    def validate_statistics(self, data: Dict[str, Any], **kwargs) -> None:
        if any(s is not None and s < 0.0 for s in data["statistics"]):
            raise ValidationError("Statistics must be non-negative", "statistics")
        if len(data["statistics"]) > current_limit():
            raise ValidationError("Too many statistics", "statistics")


def current_limit() -> int:
    return current_app.config.get("API_MAX_CELLS", Config.API_MAX_CELLS)


def _input_results(statistics) -> list:
    return [
        TestResult.na(i, INPUT_METHOD, "missing")
        if s is None
        else TestResult.chi2(i, INPUT_METHOD, s)
        for i, s in enumerate(statistics)
    ]


class AssociationController(AssociationControllerInterface):
    def __init__(self, use_case_factory: UseCaseFactory) -> None:
        self.use_case_factory = use_case_factory

    @staticmethod
    def _validation_failure(validation_error: ValidationError) -> Tuple[Dict[str, Any], int]:
        app_logger.error("Request validation failed: %s", validation_error.messages)
        return (
            ApiResponse.error(
                "Validation error",
                details=validation_error.messages,
                error_code="VALIDATION_ERROR",
            ),
            400,
        )

    @staticmethod
    def _analysis_failure(message: str) -> Tuple[Dict[str, Any], int]:
        app_logger.error("Analysis failed: %s", message)
        return ApiResponse.error(message, error_code="ANALYSIS_FAILED"), 422

    def run_association(self) -> Tuple[Dict[str, Any], int]:
        try:
            data = request.get_json(silent=True) or {}
            validated = AssociationRequestSchema().load(data)

            store = MemoryStore()
            store.write_genotypes(REQUEST_KEY, to_genotypes(validated["genotypes"]))
            store.write_phenotypes(
                REQUEST_KEY, to_phenotype(validated["phenotype"], validated["ids"])
            )
            kinship_key = trios_key = None
            if validated["kinship"] is not None:
                store.write_matrix(REQUEST_KEY, to_kinship(validated["kinship"]))
                kinship_key = REQUEST_KEY
            if validated["trios"]:
                store.write_trios(REQUEST_KEY, validated["trios"])
                trios_key = REQUEST_KEY

            assoc_request = AssociationRequest(
                genotypes_path=REQUEST_KEY,
                method=validated["method"],
                phenotypes_path=REQUEST_KEY,
                kinship_path=kinship_key,
                trios_path=trios_key,
                num_pcs=validated["num_pcs"],
                mm_mode=validated["mm_mode"],
                approximate=validated["approximate"],
                ld_r2=validated["ld_r2"],
            )
            response = self.use_case_factory(store).association.execute(assoc_request)

            if response.success:
                return (
                    ApiResponse.success(
                        {
                            "method": assoc_request.method.value,
                            "excluded_snps": response.excluded_snps,
                            "results": [result_payload(r) for r in response.results],
                        }
                    ),
                    200,
                )
            return self._analysis_failure(response.error_message or "Association testing failed")

        except ValidationError as validation_error:
            return self._validation_failure(validation_error)

        except KinwardException as domain_error:
            return self._analysis_failure(str(domain_error))

        except (ValueError, TypeError) as processing_error:
            app_logger.error("Processing error: %s", str(processing_error))
            return (
                ApiResponse.error(str(processing_error), error_code="VALIDATION_ERROR"),
                400,
            )

    def genomic_control(self) -> Tuple[Dict[str, Any], int]:
        try:
            data = request.get_json(silent=True) or {}
            validated = GenomicControlRequestSchema().load(data)

            store = MemoryStore()
            store.write_results(REQUEST_KEY, _input_results(validated["statistics"]))
            gc_request = GenomicControlRequest(
                results_path=REQUEST_KEY,
                method=validated["method"],
                q=validated["q"],
                floor=validated["floor"],
            )
            response = self.use_case_factory(store).genomic_control.execute(gc_request)

            if response.success:
                estimate = response.estimate
                return (
                    ApiResponse.success(
                        {
                            "lambda": estimate.value,
                            "method": estimate.method.value,
                            "q": estimate.q,
                            "m": estimate.m,
                            "adjusted": [json_float(r.statistic) for r in response.results],
                            "p_values": [json_float(r.p_value) for r in response.results],
                        }
                    ),
                    200,
                )
            return self._analysis_failure(response.error_message or "Genomic control failed")

        except ValidationError as validation_error:
            return self._validation_failure(validation_error)

        except KinwardException as domain_error:
            return self._analysis_failure(str(domain_error))


def create_association_blueprint(use_case_factory: UseCaseFactory) -> Blueprint:
    blueprint = Blueprint("association", __name__, url_prefix="/api")
    controller = AssociationController(use_case_factory)

    @blueprint.route("/assoc", methods=["POST", "OPTIONS"])
    def assoc():
        if request.method == "OPTIONS":
            return preflight()
        return controller.run_association()

    @blueprint.route("/gc", methods=["POST", "OPTIONS"])
    def gc():
        if request.method == "OPTIONS":
            return preflight()
        return controller.genomic_control()

    return blueprint
