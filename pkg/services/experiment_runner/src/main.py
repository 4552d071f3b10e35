# services/experiment_runner/src/main.py
"""
CLI do runner:

  fpp-ihrg run --config <arquivo> [--seed S] [--workers W] [--out DIR]
  fpp-ihrg suite --config <arquivo> [--workers W] [--out DIR]
  fpp-ihrg kernel-check --kernel <arquivo>

Código de saída 0 se todos os critérios passam, 1 se algum falha, 2 para
configuração inválida.
"""
import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

load_dotenv()

from common.exceptions import SimulationError  # noqa: E402
from common.kernel.finite import (  # noqa: E402
    check_homogeneity,
    check_irreducibility,
    collision_rate,
    operator_norm,
    stationary_type_vector,
    survival_probability,
)
from common.kernel.spec import load_kernel  # noqa: E402
from common.observability.metrics import start_runner_metrics  # noqa: E402
from common.schemas.results import KernelCheckReport  # noqa: E402
from services.experiment_runner.src.pipeline import run_experiment  # noqa: E402
from services.experiment_runner.src.schemas import load_experiment_config, load_suite_config  # noqa: E402
from services.experiment_runner.src.suite import run_suite  # noqa: E402

LOG_LEVEL = os.getenv("FPP_IHRG_LOG_LEVEL", "INFO")
METRICS_PORT = os.getenv("FPP_IHRG_METRICS_PORT")

logger = logging.getLogger("experiment-runner")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2


def kernel_check(path: str | Path) -> KernelCheckReport:
    loaded = load_kernel(path)
    m = loaded.m
    homogeneity = check_homogeneity(m)
    irreducibility = check_irreducibility(m)
    stationary = stationary_type_vector(m)
    norm = operator_norm(loaded.kernel, m)
    return KernelCheckReport(
        name=loaded.name,
        r=loaded.kernel.r,
        lambda_tilde=m.lambda_tilde,
        homogeneous=homogeneity.passed,
        max_row_deviation=homogeneity.max_deviation,
        irreducible=irreducibility.passed,
        primitive=irreducibility.primitive,
        pi=stationary.pi.tolist(),
        pi_residual=stationary.residual,
        pi_mu_distance=float(np.max(np.abs(stationary.pi - loaded.kernel.mu))),
        operator_norm=norm.value,
        singular_value=norm.singular_value,
        collision_rate=collision_rate(loaded.kernel, m, stationary.pi),
        survival_probability=survival_probability(m.lambda_tilde) if m.lambda_tilde > 0 else None,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpp-ihrg", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="roda um experimento")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--out", default=None)

    suite = sub.add_parser("suite", help="roda uma lista de experimentos")
    suite.add_argument("--config", required=True)
    suite.add_argument("--workers", type=int, default=None)
    suite.add_argument("--out", default=None)

    check = sub.add_parser("kernel-check", help="identidades espectrais de um kernel")
    check.add_argument("--kernel", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=LOG_LEVEL.upper(), format='%(asctime)s [%(levelname)s] %(message)s')
    if METRICS_PORT:
        start_runner_metrics(int(METRICS_PORT))

    try:
        if args.command == "kernel-check":
            report = kernel_check(args.kernel)
            print(report.model_dump_json(indent=2))
            return EXIT_OK
        if args.command == "run":
            config = load_experiment_config(args.config)
            summary = run_experiment(config, seed=args.seed, workers=args.workers, out=args.out)
            return EXIT_OK if summary.passed else EXIT_FAILED
        suite_path = Path(args.config)
        report = run_suite(load_suite_config(suite_path), base_dir=suite_path.parent, out=args.out,
                           workers=args.workers)
        return EXIT_OK if report.passed else EXIT_FAILED
    except SimulationError as e:
        logger.error(f"❌ {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
