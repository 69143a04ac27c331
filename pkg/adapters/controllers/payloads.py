"""Marshmallow pieces shared by the JSON controllers."""

from typing import List, Optional

import numpy as np
from flask import current_app, make_response
from marshmallow import Schema, ValidationError, fields, validate, validates

from config import Config
from core.domain.genotype_model import GenotypeMatrix, Phenotype, PhenotypeKind
from core.domain.kinship_model import KinshipMatrix

REQUEST_KEY = "request"


def genotype_field() -> fields.List:
    return fields.List(
        fields.List(fields.Float(allow_none=True), validate=validate.Length(min=1)),
        required=True,
        validate=validate.Length(min=2),
    )


class GenotypePayloadSchema(Schema):
    """Base schema for requests carrying an n x L genotype array (null = missing)."""

    genotypes = genotype_field()

    @validates("genotypes")
    def validate_genotypes(self, rows: List[List[Optional[float]]], **kwargs) -> None:
        if not rows:
            return
        widths = {len(row) for row in rows}
        if len(widths) != 1:
            raise ValidationError("All genotype rows must have the same length")
        limit = current_app.config.get("API_MAX_CELLS", Config.API_MAX_CELLS)
        cells = len(rows) * widths.pop()
        if cells > limit:
            raise ValidationError(f"Genotype array has {cells} cells; the limit is {limit}")
        for row in rows:
            for value in row:
                if value is not None and value not in (0.0, 1.0, 2.0):
                    raise ValidationError("Genotypes must be 0, 1, 2 or null")


def to_genotypes(rows: List[List[Optional[float]]]) -> GenotypeMatrix:
    values = np.array([[np.nan if v is None else v for v in row] for row in rows], dtype=float)
    return GenotypeMatrix.from_array(values)


def to_phenotype(values: List[float], ids: Optional[List[str]] = None) -> Phenotype:
    array = np.asarray(values, dtype=float)
    binary = bool(np.all(np.isin(array, (0.0, 1.0))))
    kind = PhenotypeKind.BINARY if binary else PhenotypeKind.QUANTITATIVE
    return Phenotype(values=array, kind=kind, ids=tuple(ids or ()))


def to_kinship(rows: List[List[float]]) -> KinshipMatrix:
    return KinshipMatrix(K=np.asarray(rows, dtype=float))


def preflight():
    response = make_response()
    response.headers.add("Access-Control-Allow-Headers", "Content-Type,Authorization")
    response.headers.add("Access-Control-Allow-Methods", "POST,OPTIONS")
    return response
