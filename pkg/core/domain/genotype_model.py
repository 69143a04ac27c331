from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from core.domain.exceptions import AssociationError, PedigreeError


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GenotypeMatrix:
    """Allele counts of n individuals at L SNPs with a missingness mask."""

    counts: np.ndarray
    missing: np.ndarray

    def __post_init__(self) -> None:
        raw = np.asarray(self.counts)
        missing = np.asarray(self.missing, dtype=bool)
        if raw.ndim != 2:
            raise ValueError("Genotype counts must be a 2-D array")
        if raw.shape != missing.shape:
            raise ValueError("Missing mask must match the genotype shape")
        n, L = raw.shape
        if n < 2:
            raise ValueError("At least two individuals are required")
        if L < 1:
            raise ValueError("At least one SNP is required")
        observed = raw[~missing]
        if observed.size and not np.all(np.isin(observed, (0, 1, 2))):
            raise ValueError("Observed allele counts must lie in {0, 1, 2}")
        counts = np.where(missing, 0, raw).astype(np.int8)
        object.__setattr__(self, "counts", _frozen(counts))
        object.__setattr__(self, "missing", _frozen(missing.copy()))

    @classmethod
    def from_array(cls, values: np.ndarray) -> "GenotypeMatrix":
        """Build from a float array where NaN marks a missing genotype."""
        values = np.asarray(values, dtype=float)
        missing = np.isnan(values)
        return cls(counts=np.where(missing, 0.0, values), missing=missing)

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def L(self) -> int:
        return self.counts.shape[1]

    @property
    def has_missing(self) -> bool:
        return bool(self.missing.any())

    def observed_counts(self) -> np.ndarray:
        """Per-SNP number of non-missing genotypes."""
        return (~self.missing).sum(axis=0)

    def as_float(self, fill: Optional[np.ndarray] = None) -> np.ndarray:
        """Counts as floats; missing entries get ``fill[l]`` (NaN when not given)."""
        values = self.counts.astype(float)
        if fill is None:
            values[self.missing] = np.nan
        else:
            fill = np.broadcast_to(np.asarray(fill, dtype=float), (self.L,))
            values = np.where(self.missing, fill[np.newaxis, :], values)
        return values

    def select_snps(self, mask: np.ndarray) -> "GenotypeMatrix":
        mask = np.asarray(mask)
        return GenotypeMatrix(counts=self.counts[:, mask], missing=self.missing[:, mask])

    def select_individuals(self, rows: Sequence[int]) -> "GenotypeMatrix":
        rows = np.asarray(rows)
        return GenotypeMatrix(counts=self.counts[rows], missing=self.missing[rows])


class PhenotypeKind(str, Enum):
    BINARY = "binary"
    QUANTITATIVE = "quantitative"


@dataclass(frozen=True)
class Phenotype:
    values: np.ndarray
    kind: PhenotypeKind = PhenotypeKind.BINARY
    ids: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("Phenotype values must be a vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("Phenotype values must be finite")
        kind = PhenotypeKind(self.kind)
        if kind is PhenotypeKind.BINARY and not np.all(np.isin(values, (0.0, 1.0))):
            raise ValueError("Binary phenotype values must be 0 or 1")
        ids = tuple(str(i) for i in self.ids)
        if ids and len(ids) != values.size:
            raise ValueError("Phenotype IDs must match the number of values")
        if not ids:
            ids = tuple(str(i + 1) for i in range(values.size))
        object.__setattr__(self, "values", _frozen(values.copy()))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def n1(self) -> int:
        return int(self.values.sum()) if self.is_binary else 0

    @property
    def n0(self) -> int:
        return self.n - self.n1 if self.is_binary else 0

    @property
    def is_binary(self) -> bool:
        return self.kind is PhenotypeKind.BINARY

    def require_case_control(self) -> None:
        if not self.is_binary:
            raise AssociationError("A binary case-control phenotype is required")
        if self.n0 == 0 or self.n1 == 0:
            raise AssociationError("Both cases and controls must be present")

    def index_of(self) -> Dict[str, int]:
        return {pid: row for row, pid in enumerate(self.ids)}


@dataclass(frozen=True)
class AlleleFrequencies:
    """Reference-allele fractions, one per SNP."""

    p: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1:
            raise ValueError("Allele frequencies must be a vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("Allele frequencies must lie in [0, 1]")
        object.__setattr__(self, "p", _frozen(p.copy()))

    @property
    def L(self) -> int:
        return self.p.size

    def on_boundary(self) -> np.ndarray:
        return (self.p <= 0.0) | (self.p >= 1.0)


@dataclass(frozen=True)
class Pedigree:
    """Topologically ordered parent map; members have zero or two parents."""

    members: Tuple[str, ...]
    mother: Dict[str, Optional[str]] = field(default_factory=dict)
    father: Dict[str, Optional[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        members = tuple(str(m) for m in self.members)
        if len(set(members)) != len(members):
            raise PedigreeError("Pedigree member IDs must be unique")
        position = {m: i for i, m in enumerate(members)}
        mother = {m: self.mother.get(m) for m in members}
        father = {m: self.father.get(m) for m in members}
        for member in members:
            mum, dad = mother[member], father[member]
            if (mum is None) != (dad is None):
                raise PedigreeError(f"Member {member} must have zero or two recorded parents")
            for parent in (mum, dad):
                if parent is None:
                    continue
                if parent not in position:
                    raise PedigreeError(f"Unknown parent {parent} of member {member}")
                if position[parent] >= position[member]:
                    raise PedigreeError(
                        f"Parent {parent} must precede child {member} in topological order"
                    )
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "mother", mother)
        object.__setattr__(self, "father", father)

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def founders(self) -> Tuple[str, ...]:
        return tuple(m for m in self.members if self.mother[m] is None)

    def is_founder(self, member: str) -> bool:
        return self.mother[member] is None

    def index_of(self) -> Dict[str, int]:
        return {m: i for i, m in enumerate(self.members)}
