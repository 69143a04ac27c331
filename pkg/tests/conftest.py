import numpy as np
import pytest

from adapters.storage.text_file_store import TextFileStore
from config import TestingConfig
from core.domain.genotype_model import GenotypeMatrix, Pedigree, Phenotype
from core.domain.kinship_model import KinshipMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20100101)


@pytest.fixture
def store():
    return TextFileStore()


@pytest.fixture
def unrelated_panel(rng):
    """200 outbred unrelated individuals at 400 SNPs with a balanced binary phenotype."""
    p = rng.uniform(0.1, 0.5, size=400)
    counts = rng.binomial(2, np.broadcast_to(p, (200, 400)))
    y = np.r_[np.ones(100), np.zeros(100)]
    return (
        GenotypeMatrix(counts=counts, missing=np.zeros(counts.shape, dtype=bool)),
        Phenotype(values=y),
        p,
    )


@pytest.fixture
def nuclear_family():
    """Two founders, two full siblings, a spouse and a child of sibling 1."""
    return Pedigree(
        members=("dad", "mum", "sib1", "sib2", "spouse", "kid"),
        mother={"sib1": "mum", "sib2": "mum", "kid": "spouse"},
        father={"sib1": "dad", "sib2": "dad", "kid": "sib1"},
    )


@pytest.fixture
def identity_kinship():
    def build(n):
        return KinshipMatrix.unrelated(n)

    return build


@pytest.fixture
def panel_files(tmp_path, unrelated_panel, store):
    g, y, _ = unrelated_panel
    genotypes = str(tmp_path / "genotypes.txt")
    phenotypes = str(tmp_path / "phenotypes.txt")
    store.write_genotypes(genotypes, g)
    store.write_phenotypes(phenotypes, y)
    return {"genotypes": genotypes, "phenotypes": phenotypes, "dir": tmp_path}


@pytest.fixture
def app():
    from app import create_app

    return create_app(TestingConfig)


@pytest.fixture
def client(app):
    return app.test_client()
