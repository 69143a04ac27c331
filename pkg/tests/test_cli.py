import io
import logging

import numpy as np
import pytest

from adapters.controllers.cli_controller import EXIT_FAILURE, EXIT_OK, CliController
from config import Config
from core.domain.genotype_model import GenotypeMatrix, Pedigree, Phenotype
from usecases.registry import build_use_cases
from utils.logger import LoggerFactory


@pytest.fixture
def cli(store):
    stdout = io.StringIO()
    served = []
    controller = CliController(
        build_use_cases(store), serve=lambda host, port: served.append((host, port)), stdout=stdout
    )
    return controller, stdout, served


class TestKinshipCommand:
    def test_writes_matrix(self, cli, panel_files, store):
        controller, _, _ = cli
        out = str(panel_files["dir"] / "k.tsv")
        code = controller.run(["kinship", "--genotypes", panel_files["genotypes"], "--out", out])
        assert code == EXIT_OK
        assert store.read_matrix(out).n == 200

    def test_missing_input_fails(self, cli, tmp_path):
        controller, _, _ = cli
        code = controller.run(
            ["kinship", "--genotypes", str(tmp_path / "absent.txt"), "--out", str(tmp_path / "k")]
        )
        assert code == EXIT_FAILURE

    def test_pedigree_without_file_fails(self, cli, tmp_path):
        controller, _, _ = cli
        code = controller.run(["kinship", "--method", "pedigree", "--out", str(tmp_path / "k")])
        assert code == EXIT_FAILURE


class TestAssociationCommands:
    def test_armitage_then_gc(self, cli, panel_files, store):
        controller, stdout, _ = cli
        results = str(panel_files["dir"] / "armitage.tsv")
        code = controller.run(
            [
                "assoc",
                "--genotypes",
                panel_files["genotypes"],
                "--phenotypes",
                panel_files["phenotypes"],
                "--method",
                "armitage",
                "--out",
                results,
            ]
        )
        assert code == EXIT_OK
        assert len(store.read_results(results)) == 400

        adjusted = str(panel_files["dir"] / "gc.tsv")
        code = controller.run(
            ["gc", "--results", results, "--method", "trimmed", "--q", "0.9", "--out", adjusted]
        )
        assert code == EXIT_OK
        label, value = stdout.getvalue().strip().split("\t")
        assert label == "lambda"
        assert float(value) > 0.0
        assert len(store.read_results(adjusted)) == 400

    def test_pc_with_kinship_file(self, cli, panel_files, store):
        controller, _, _ = cli
        kinship = str(panel_files["dir"] / "k.tsv")
        controller.run(["kinship", "--genotypes", panel_files["genotypes"], "--out", kinship])
        results = str(panel_files["dir"] / "pc.tsv")
        code = controller.run(
            [
                "assoc",
                "--genotypes",
                panel_files["genotypes"],
                "--phenotypes",
                panel_files["phenotypes"],
                "--method",
                "pc",
                "--kinship",
                kinship,
                "--num-pcs",
                "2",
                "--out",
                results,
            ]
        )
        assert code == EXIT_OK
        assert {r.method for r in store.read_results(results)} == {"pc"}

    def test_tdt_without_trios_fails(self, cli, panel_files):
        controller, _, _ = cli
        code = controller.run(
            [
                "assoc",
                "--genotypes",
                panel_files["genotypes"],
                "--phenotypes",
                panel_files["phenotypes"],
                "--method",
                "tdt",
                "--out",
                str(panel_files["dir"] / "tdt.tsv"),
            ]
        )
        assert code == EXIT_FAILURE

    def test_tdt_from_pedigree(self, cli, tmp_path, store):
        controller, _, _ = cli
        ids = ("f1", "m1", "c1", "f2", "m2", "c2")
        genotypes = str(tmp_path / "g.txt")
        phenotypes = str(tmp_path / "y.txt")
        pedigree = str(tmp_path / "ped.txt")
        results = str(tmp_path / "tdt.tsv")
        counts = np.array([[1.0], [0], [1], [1], [0], [0]])
        store.write_genotypes(genotypes, GenotypeMatrix.from_array(counts))
        status = Phenotype(values=np.array([0, 0, 1, 0, 0, 1.0]), ids=ids)
        store.write_phenotypes(phenotypes, status)
        store.write_pedigree(
            pedigree,
            Pedigree(members=ids, mother={"c1": "m1", "c2": "m2"}, father={"c1": "f1", "c2": "f2"}),
        )
        code = controller.run(
            [
                "assoc",
                "--genotypes",
                genotypes,
                "--phenotypes",
                phenotypes,
                "--method",
                "tdt",
                "--pedigree",
                pedigree,
                "--out",
                results,
            ]
        )
        assert code == EXIT_OK
        assert store.read_results(results)[0].statistic == pytest.approx(0.0)

    def test_trios_and_pedigree_are_exclusive(self, cli):
        controller, _, _ = cli
        with pytest.raises(SystemExit):
            controller.run(
                ["assoc", "--genotypes", "g", "--phenotypes", "p", "--method", "tdt"]
                + ["--trios", "t", "--pedigree", "q", "--out", "o"]
            )

    def test_unknown_method_is_a_usage_error(self, cli, panel_files):
        controller, _, _ = cli
        with pytest.raises(SystemExit):
            controller.run(["assoc", "--genotypes", "g", "--phenotypes", "p", "--method", "gc", "--out", "o"])


class TestEvaluationCommand:
    def test_prints_summary_table(self, cli, tmp_path):
        controller, stdout, _ = cli
        scenario = tmp_path / "scenario.txt"
        scenario.write_text(
            "n_snps=30\nn_causal=3\npopulation_size=900\nprevalence=0.3\ncases=100\ncontrols=100\n",
            encoding="utf-8",
        )
        code = controller.run(
            [
                "eval",
                "--scenario",
                str(scenario),
                "--methods",
                "armitage,gc",
                "--replicates",
                "1",
                "--out-dir",
                str(tmp_path / "eval"),
            ]
        )
        assert code == EXIT_OK
        lines = stdout.getvalue().strip().splitlines()
        assert lines[0].split("\t")[0] == "method"
        assert [line.split("\t")[0] for line in lines[1:]] == ["armitage", "gc"]

    def test_invalid_scenario_fails(self, cli, tmp_path):
        controller, _, _ = cli
        scenario = tmp_path / "scenario.txt"
        scenario.write_text("islandz=2\n", encoding="utf-8")
        code = controller.run(
            ["eval", "--scenario", str(scenario), "--out-dir", str(tmp_path / "eval")]
        )
        assert code == EXIT_FAILURE


class TestServeCommand:
    def test_delegates_to_server(self, cli):
        controller, _, served = cli
        assert controller.run(["serve", "--host", "127.0.0.1", "--port", "5050"]) == EXIT_OK
        assert served == [("127.0.0.1", 5050)]

    def test_without_server(self, store):
        assert CliController(build_use_cases(store)).run(["serve"]) == EXIT_FAILURE


class TestVerbosity:
    @pytest.fixture(autouse=True)
    def restore_level(self):
        yield
        LoggerFactory.set_level(Config.LOG_LEVEL)

    def test_quiet_raises_threshold(self, cli):
        controller, _, _ = cli
        controller.run(["-q", "serve"])
        assert not LoggerFactory.get_logger().isEnabledFor(logging.DEBUG)
        assert LoggerFactory.get_logger().level == logging.WARNING

    def test_verbose_enables_debug(self, cli):
        controller, _, _ = cli
        controller.run(["-v", "serve"])
        assert LoggerFactory.get_logger().isEnabledFor(logging.DEBUG)

    def test_switches_are_exclusive(self, cli):
        controller, _, _ = cli
        with pytest.raises(SystemExit):
            controller.run(["-v", "-q", "serve"])
