"""Plain-text file formats for genotypes, phenotypes, pedigrees, matrices, results and scenarios."""

from dataclasses import replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from marshmallow import RAISE, Schema, ValidationError, fields, pre_load, validate

from core.domain.assoc_model import TestResult
from core.domain.exceptions import GenotypeFormatError, KinwardValidationError, PedigreeError
from core.domain.genotype_model import GenotypeMatrix, Pedigree, Phenotype, PhenotypeKind
from core.domain.kinship_model import KinshipMatrix
from core.domain.sim_model import AdmixturePlan, IslandPlan, SimScenario
from core.interfaces.genotype_store_interface import GenotypeStoreInterface

MISSING_TOKEN = "NA"
UNKNOWN_PARENT = "0"
GENOTYPE_TOKENS = {"0": 0, "1": 1, "2": 2}
RESULT_COLUMNS = ["snp_index", "method", "statistic", "df", "p_value", "exact_p_value", "flag"]
FLOAT_FORMAT = "%.17g"


def _lines(path: str) -> Iterator[Tuple[int, List[str]]]:
    """Non-blank lines split on whitespace, with 1-based line numbers."""
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            tokens = line.split()
            if tokens:
                yield number, tokens


def _number(value: float) -> str:
    return FLOAT_FORMAT % value


class ScenarioSchema(Schema):
    """Flat key=value scenario file; list values are comma separated."""

    class Meta:
        unknown = RAISE

    preset = fields.String(
        load_default="structured",
        validate=validate.OneOf(["structured", "ascertained", "admixed"]),
    )
    islands = fields.Integer(validate=validate.Range(min=1))
    fst = fields.Float(validate=validate.Range(min=0.0, max=1.0, max_inclusive=False))
    n_snps = fields.Integer(validate=validate.Range(min=1))
    maf_low = fields.Float()
    maf_high = fields.Float()
    n_causal = fields.Integer(validate=validate.Range(min=0))
    odds_ratio = fields.Float()
    prevalence = fields.Float()
    population_size = fields.Integer(validate=validate.Range(min=2))
    seed = fields.Integer()
    cases = fields.List(fields.Integer(validate=validate.Range(min=0)))
    controls = fields.List(fields.Integer(validate=validate.Range(min=0)))
    pure_island = fields.Integer(validate=validate.Range(min=0))
    pure_cases = fields.Integer(validate=validate.Range(min=0))
    pure_controls = fields.Integer(validate=validate.Range(min=0))
    admixed = fields.Integer(validate=validate.Range(min=0))
    sources = fields.List(fields.Integer(validate=validate.Range(min=0)))
    case_base = fields.Float()
    case_slope = fields.Float()

    LIST_KEYS = ("cases", "controls", "sources")
    ADMIXTURE_KEYS = (
        "pure_island",
        "pure_cases",
        "pure_controls",
        "admixed",
        "sources",
        "case_base",
        "case_slope",
    )

    @pre_load
    def split_lists(self, data: Dict[str, str], **kwargs) -> Dict[str, object]:
        data = dict(data)
        for key in self.LIST_KEYS:
            if isinstance(data.get(key), str):
                data[key] = [item.strip() for item in data[key].split(",") if item.strip()]
        return data

    @staticmethod
    def build(values: Dict[str, object]) -> SimScenario:
        values = dict(values)
        preset = values.pop("preset")
        base = getattr(SimScenario, preset)()

        plan = base.plan
        admixture = {k: values.pop(k) for k in ScenarioSchema.ADMIXTURE_KEYS if k in values}
        quotas = {k: tuple(values.pop(k)) for k in ("cases", "controls") if k in values}
        if admixture:
            if isinstance(plan, IslandPlan):
                plan = AdmixturePlan()
            if "sources" in admixture:
                admixture["sources"] = tuple(admixture["sources"])
            plan = replace(plan, **admixture)
        if quotas:
            if isinstance(plan, AdmixturePlan):
                raise ValueError("Island quotas cannot be combined with an admixture plan")
            plan = replace(plan, **quotas)

        low = values.pop("maf_low", base.maf_range[0])
        high = values.pop("maf_high", base.maf_range[1])
        return replace(base, plan=plan, maf_range=(low, high), **values)


class TextFileStore(GenotypeStoreInterface):
    def read_genotypes(self, path: str) -> GenotypeMatrix:
        lines = _lines(path)
        try:
            number, header = next(lines)
        except StopIteration:
            raise GenotypeFormatError("Empty genotype file", line=1) from None
        if len(header) != 2 or not all(token.isdigit() for token in header):
            raise GenotypeFormatError("Header must be 'n L'", line=number)
        n, L = int(header[0]), int(header[1])

        counts = np.zeros((n, L), dtype=np.int8)
        missing = np.zeros((n, L), dtype=bool)
        row = -1
        for row, (number, tokens) in enumerate(lines):
            if row >= n:
                raise GenotypeFormatError(f"More than {n} genotype rows", line=number)
            if len(tokens) != L:
                raise GenotypeFormatError(f"Expected {L} genotypes, found {len(tokens)}", line=number)
            for col, token in enumerate(tokens):
                if token == MISSING_TOKEN:
                    missing[row, col] = True
                elif token in GENOTYPE_TOKENS:
                    counts[row, col] = GENOTYPE_TOKENS[token]
                else:
                    raise GenotypeFormatError(f"Invalid genotype '{token}'", line=number)
        if row + 1 != n:
            raise GenotypeFormatError(f"Expected {n} genotype rows, found {row + 1}")
        try:
            return GenotypeMatrix(counts=counts, missing=missing)
        except ValueError as e:
            raise GenotypeFormatError(str(e), line=1) from e

    def write_genotypes(self, path: str, genotypes: GenotypeMatrix) -> None:
        tokens = genotypes.counts.astype(str).astype(object)
        tokens[genotypes.missing] = MISSING_TOKEN
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(f"{genotypes.n} {genotypes.L}\n")
            for row in tokens:
                handle.write(" ".join(row) + "\n")

    def read_phenotypes(self, path: str) -> Phenotype:
        ids: List[str] = []
        values: List[float] = []
        seen: Dict[str, int] = {}
        for number, tokens in _lines(path):
            if len(tokens) != 2:
                raise GenotypeFormatError("Expected 'ID value'", line=number)
            pid, raw = tokens
            if pid in seen:
                raise GenotypeFormatError(f"Duplicate ID {pid}", line=number)
            try:
                value = float(raw)
            except ValueError:
                raise GenotypeFormatError(f"Invalid phenotype value '{raw}'", line=number) from None
            if not np.isfinite(value):
                raise GenotypeFormatError(f"Phenotype value must be finite: '{raw}'", line=number)
            seen[pid] = number
            ids.append(pid)
            values.append(value)
        if not values:
            raise GenotypeFormatError("Empty phenotype file", line=1)
        binary = all(v in (0.0, 1.0) for v in values)
        kind = PhenotypeKind.BINARY if binary else PhenotypeKind.QUANTITATIVE
        return Phenotype(values=np.array(values), kind=kind, ids=tuple(ids))

    def write_phenotypes(self, path: str, phenotype: Phenotype) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for pid, value in zip(phenotype.ids, phenotype.values):
                text = str(int(value)) if phenotype.is_binary else _number(value)
                handle.write(f"{pid} {text}\n")

    def read_pedigree(self, path: str) -> Pedigree:
        members: List[str] = []
        mother: Dict[str, Optional[str]] = {}
        father: Dict[str, Optional[str]] = {}
        for number, tokens in _lines(path):
            if len(tokens) != 3:
                raise GenotypeFormatError("Expected 'ID motherID fatherID'", line=number)
            member, mum, dad = tokens
            if (mum == UNKNOWN_PARENT) != (dad == UNKNOWN_PARENT):
                raise PedigreeError(f"line {number}: member {member} has exactly one known parent")
            if member in mother:
                raise PedigreeError(f"line {number}: member {member} is listed twice")
            for parent in (mum, dad):
                if parent != UNKNOWN_PARENT and parent not in mother:
                    raise PedigreeError(
                        f"line {number}: parent {parent} of member {member} is not listed before it"
                    )
            members.append(member)
            mother[member] = None if mum == UNKNOWN_PARENT else mum
            father[member] = None if dad == UNKNOWN_PARENT else dad
        return Pedigree(members=tuple(members), mother=mother, father=father)

    def write_pedigree(self, path: str, pedigree: Pedigree) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for member in pedigree.members:
                mum = pedigree.mother[member] or UNKNOWN_PARENT
                dad = pedigree.father[member] or UNKNOWN_PARENT
                handle.write(f"{member} {mum} {dad}\n")

    def read_trios(self, path: str) -> List[Tuple[str, str, str]]:
        trios = []
        for number, tokens in _lines(path):
            if len(tokens) != 3:
                raise GenotypeFormatError("Expected 'fatherID motherID childID'", line=number)
            trios.append((tokens[0], tokens[1], tokens[2]))
        return trios

    def read_matrix(self, path: str) -> KinshipMatrix:
        with open(path, "r", encoding="utf-8") as handle:
            header = handle.readline().strip()
        if not header.startswith("# kinship n="):
            raise GenotypeFormatError("Header must be '# kinship n=<n>'", line=1)
        try:
            n = int(header.split("=", 1)[1])
        except ValueError:
            raise GenotypeFormatError("Header must be '# kinship n=<n>'", line=1) from None

        try:
            table = pd.read_csv(path, sep="\t", header=None, skiprows=1, dtype=float)
        except (ValueError, pd.errors.ParserError) as e:
            raise GenotypeFormatError(f"Malformed kinship matrix: {e}") from e
        if table.shape != (n, n):
            raise GenotypeFormatError(f"Expected a {n} x {n} matrix, found {table.shape}")
        bad = table.isna().any(axis=1).to_numpy()
        if bad.any():
            raise GenotypeFormatError("Missing kinship entry", line=int(np.argmax(bad)) + 2)
        return KinshipMatrix(K=table.to_numpy())

    def write_matrix(self, path: str, kinship: KinshipMatrix) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(f"# kinship n={kinship.n}\n")
            pd.DataFrame(kinship.K).to_csv(
                handle, sep="\t", header=False, index=False, float_format=FLOAT_FORMAT
            )

    def read_results(self, path: str) -> List[TestResult]:
        try:
            table = pd.read_csv(
                path, sep="\t", na_values=[MISSING_TOKEN], keep_default_na=False
            )
        except (ValueError, pd.errors.ParserError) as e:
            raise GenotypeFormatError(f"Malformed results file: {e}") from e
        missing = [c for c in RESULT_COLUMNS[:5] if c not in table.columns]
        if missing:
            raise GenotypeFormatError(f"Missing result column(s): {', '.join(missing)}", line=1)

        results = []
        for offset, row in enumerate(table.itertuples(index=False)):
            record = row._asdict()
            exact = record.get("exact_p_value")
            flag = record.get("flag")
            try:
                results.append(
                    TestResult(
                        snp_index=int(record["snp_index"]),
                        method=str(record["method"]),
                        statistic=float(record["statistic"]),
                        df=int(record["df"]),
                        p_value=float(record["p_value"]),
                        exact_p_value=None if exact is None or pd.isna(exact) else float(exact),
                        flag=None if flag is None or pd.isna(flag) else str(flag),
                    )
                )
            except (ValueError, TypeError) as e:
                raise GenotypeFormatError(str(e), line=offset + 2) from e
        return results

    def write_results(self, path: str, results: Sequence[TestResult]) -> None:
        table = pd.DataFrame(
            [
                {
                    "snp_index": r.snp_index,
                    "method": r.method,
                    "statistic": r.statistic,
                    "df": r.df,
                    "p_value": r.p_value,
                    "exact_p_value": r.exact_p_value,
                    "flag": r.flag,
                }
                for r in results
            ],
            columns=RESULT_COLUMNS,
        )
        if table["exact_p_value"].isna().all():
            table = table.drop(columns="exact_p_value")
        if table["flag"].isna().all():
            table = table.drop(columns="flag")
        table.to_csv(path, sep="\t", index=False, na_rep=MISSING_TOKEN, float_format=FLOAT_FORMAT)

    def read_scenario(self, path: str) -> SimScenario:
        data: Dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise GenotypeFormatError("Expected 'key=value'", line=number)
                key, value = (part.strip() for part in line.split("=", 1))
                data[key] = value
        try:
            return ScenarioSchema.build(ScenarioSchema().load(data))
        except ValidationError as e:
            raise KinwardValidationError(f"Invalid scenario: {e.messages}") from e
        except ValueError as e:
            raise KinwardValidationError(f"Invalid scenario: {e}") from e

    def write_table(self, path: str, table: pd.DataFrame) -> None:
        table.to_csv(path, sep="\t", index=False, na_rep=MISSING_TOKEN, float_format="%.10g")
