import argparse
import math
import sys
from typing import Callable, List, Optional, Sequence, TextIO

from adapters.loggers.logger_adapter import app_logger
from config import Config
from core.domain.assoc_model import (
    AssociationRequest,
    GenomicControlRequest,
    LambdaMethod,
    Method,
    MixedModelMode,
)
from core.domain.eval_model import EvaluationRequest, KinshipSource, PrecisionRequest
from core.domain.exceptions import KinwardException
from core.domain.kinship_model import KinshipMethod, KinshipRequest
from core.domain.sim_model import SimulationRequest
from usecases.registry import UseCases
from utils.logger import LoggerFactory, verbosity_level

EXIT_OK = 0
EXIT_FAILURE = 1

ServeFn = Callable[[str, int], None]


def _method_list(value: str) -> List[str]:
    methods = [m.strip().lower() for m in value.split(",") if m.strip()]
    if not methods:
        raise argparse.ArgumentTypeError("at least one method is required")
    return methods


def _fraction(value: str) -> float:
    number = float(value)
    if not 0.0 < number <= 1.0:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return number


class CliController:
    """Command-line front end; one subcommand per use case."""

    def __init__(
        self,
        use_cases: UseCases,
        serve: Optional[ServeFn] = None,
        stdout: Optional[TextIO] = None,
    ) -> None:
        self.use_cases = use_cases
        self.serve = serve
        self.stdout = stdout or sys.stdout

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="kinward",
            description="Kinship estimation and structure-aware association testing",
        )
        verbosity = parser.add_mutually_exclusive_group()
        verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
        commands = parser.add_subparsers(dest="command", required=True)

        kinship = commands.add_parser("kinship", help="estimate a kinship matrix")
        kinship.add_argument("--genotypes")
        kinship.add_argument(
            "--method",
            choices=[m.value for m in KinshipMethod],
            default=KinshipMethod.CORRELATION.value,
        )
        kinship.add_argument("--pedigree")
        kinship.add_argument("--freq-iters", type=int, default=Config.FREQ_ITERS)
        kinship.add_argument("--out", required=True)
        kinship.set_defaults(handler=self.run_kinship)

        assoc = commands.add_parser("assoc", help="per-SNP association tests")
        assoc.add_argument("--genotypes", required=True)
        assoc.add_argument("--phenotypes", required=True)
        assoc.add_argument(
            "--method",
            required=True,
            choices=[m.value for m in Method if m is not Method.GC],
        )
        assoc.add_argument("--kinship")
        trio_source = assoc.add_mutually_exclusive_group()
        trio_source.add_argument("--trios")
        trio_source.add_argument("--pedigree", help="derive TDT trios from parent links")
        assoc.add_argument("--num-pcs", type=int, default=Config.NUM_PCS)
        assoc.add_argument(
            "--mm-mode",
            choices=[m.value for m in MixedModelMode],
            default=MixedModelMode.LRT.value,
        )
        assoc.add_argument("--approximate", action="store_true")
        assoc.add_argument("--ld-r2", type=_fraction)
        assoc.add_argument("--out", required=True)
        assoc.set_defaults(handler=self.run_association)

        gc = commands.add_parser("gc", help="genomic control of existing results")
        gc.add_argument("--results", required=True)
        gc.add_argument("--method", choices=["median", "mean", "trimmed"], default="median")
        gc.add_argument("--q", type=_fraction, default=0.9)
        gc.add_argument("--floor", action="store_true", help="never deflate (lambda >= 1)")
        gc.add_argument("--out", required=True)
        gc.set_defaults(handler=self.run_genomic_control)

        simulate = commands.add_parser("simulate", help="simulate case-control panels")
        simulate.add_argument("--scenario", required=True)
        simulate.add_argument("--replicates", type=int, default=1)
        simulate.add_argument("--out-dir", required=True)
        simulate.set_defaults(handler=self.run_simulation)

        evaluate = commands.add_parser("eval", help="compare methods on simulated replicates")
        evaluate.add_argument("--scenario", required=True)
        evaluate.add_argument("--methods", type=_method_list, default=["gc", "pc", "mm", "mcp"])
        evaluate.add_argument("--replicates", type=int, default=100)
        evaluate.add_argument(
            "--kinship",
            choices=[s.value for s in KinshipSource],
            default=KinshipSource.TRUE.value,
        )
        evaluate.add_argument("--full-scale", action="store_true")
        evaluate.add_argument("--out-dir", required=True)
        evaluate.set_defaults(handler=self.run_evaluation)

        precision = commands.add_parser(
            "precision", help="cousin-pair precision of correlation vs IBS kinship"
        )
        precision.add_argument("--datasets", type=int, default=100)
        precision.add_argument("--pairs", type=int, default=200)
        precision.add_argument("--unrelated", type=int, default=800)
        precision.add_argument("--snps", type=int, default=10_000)
        precision.add_argument("--seed", type=int, default=Config.SEED)
        precision.add_argument("--out")
        precision.set_defaults(handler=self.run_precision)

        serve = commands.add_parser("serve", help="run the HTTP API")
        serve.add_argument("--host", default=Config.HOST)
        serve.add_argument("--port", type=int, default=Config.PORT)
        serve.set_defaults(handler=self.run_serve)

        return parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        args = self.build_parser().parse_args(argv)
        if args.verbose or args.quiet:
            LoggerFactory.set_level(verbosity_level(args.verbose, args.quiet))
        try:
            return args.handler(args)
        except (KinwardException, ValueError) as request_error:
            app_logger.error("%s failed: %s", args.command, request_error)
            return EXIT_FAILURE

    def _fail(self, command: str, message: Optional[str]) -> int:
        app_logger.error("%s failed: %s", command, message)
        return EXIT_FAILURE

    def _print(self, line: str) -> None:
        self.stdout.write(line + "\n")

    def run_kinship(self, args: argparse.Namespace) -> int:
        response = self.use_cases.kinship.execute(
            KinshipRequest(
                genotypes_path=args.genotypes,
                method=args.method,
                pedigree_path=args.pedigree,
                freq_iters=args.freq_iters,
                out_path=args.out,
            )
        )
        if not response.success:
            return self._fail("kinship", response.error_message)
        app_logger.info(
            "Wrote %d x %d kinship matrix to %s (%d SNPs excluded)",
            response.kinship.n,
            response.kinship.n,
            args.out,
            response.excluded_snps,
        )
        return EXIT_OK

    def run_association(self, args: argparse.Namespace) -> int:
        response = self.use_cases.association.execute(
            AssociationRequest(
                genotypes_path=args.genotypes,
                method=args.method,
                out_path=args.out,
                phenotypes_path=args.phenotypes,
                kinship_path=args.kinship,
                trios_path=args.trios,
                pedigree_path=args.pedigree,
                num_pcs=args.num_pcs,
                mm_mode=args.mm_mode,
                approximate=args.approximate,
                ld_r2=args.ld_r2,
            )
        )
        if not response.success:
            return self._fail("assoc", response.error_message)
        tested = sum(1 for r in response.results if not r.is_na)
        app_logger.info(
            "Wrote %d results (%d tested, %d monomorphic) to %s",
            len(response.results),
            tested,
            response.excluded_snps,
            args.out,
        )
        return EXIT_OK

    def run_genomic_control(self, args: argparse.Namespace) -> int:
        response = self.use_cases.genomic_control.execute(
            GenomicControlRequest(
                results_path=args.results,
                method=args.method,
                q=args.q,
                floor=args.floor,
                out_path=args.out,
            )
        )
        if not response.success:
            return self._fail("gc", response.error_message)
        self._print(f"lambda\t{response.estimate.value:.6f}")
        return EXIT_OK

    def run_simulation(self, args: argparse.Namespace) -> int:
        scenario = self.use_cases.store.read_scenario(args.scenario)
        response = self.use_cases.simulation.execute(
            SimulationRequest(scenario=scenario, replicates=args.replicates, out_dir=args.out_dir)
        )
        if not response.success:
            return self._fail("simulate", response.error_message)
        for folder in response.written:
            app_logger.info("Wrote replicate %s", folder)
        return EXIT_OK

    def run_evaluation(self, args: argparse.Namespace) -> int:
        scenario = self.use_cases.store.read_scenario(args.scenario)
        response = self.use_cases.evaluation.execute(
            EvaluationRequest(
                scenario=scenario,
                methods=tuple(args.methods),
                replicates=args.replicates,
                kinship_source=args.kinship,
                full_scale=args.full_scale,
                out_dir=args.out_dir,
            )
        )
        if not response.success:
            return self._fail("eval", response.error_message)
        self._print("method\tmean_lambda\tauc\ttype1_0.05\ttype1_0.001")
        for s in response.summaries:
            auc = "NA" if math.isnan(s.auc) else f"{s.auc:.4f}"
            self._print(
                f"{s.method}\t{s.mean_lambda:.4f}\t{auc}\t{s.type1_05:.4f}\t{s.type1_001:.5f}"
            )
        return EXIT_OK

    def run_precision(self, args: argparse.Namespace) -> int:
        response = self.use_cases.precision.execute(
            PrecisionRequest(
                datasets=args.datasets,
                n_pairs=args.pairs,
                n_unrelated=args.unrelated,
                n_snps=args.snps,
                seed=args.seed,
                out_path=args.out,
            )
        )
        if not response.success:
            return self._fail("precision", response.error_message)
        summary = response.summary
        self._print("pair_class\tsd_correlation\tsd_ibs\tratio")
        for i, name in enumerate(("cousin", "unrelated")):
            self._print(
                f"{name}\t{summary.sd_correlation[i]:.6g}\t{summary.sd_ibs[i]:.6g}"
                f"\t{summary.ratio[i]:.4f}"
            )
        return EXIT_OK

    def run_serve(self, args: argparse.Namespace) -> int:
        if self.serve is None:
            return self._fail("serve", "No HTTP server is configured")
        self.serve(args.host, args.port)
        return EXIT_OK
