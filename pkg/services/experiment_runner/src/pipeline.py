# services/experiment_runner/src/pipeline.py
"""Uma execução completa: kernel, receita, arquivos de saída e resumo."""
import logging
import os
import re
import time
from pathlib import Path

from common.observability.metrics import ACTIVE_EXPERIMENTS, write_metrics_snapshot
from common.schemas.results import ExperimentSummary
from common.stats.goodness import export_ecdf
from common.utils.io import write_json, write_rows_csv
from services.experiment_runner.src.experiments import EXPERIMENTS
from services.experiment_runner.src.experiments.base import ExperimentReport, RunContext
from services.experiment_runner.src.runner import resolve_workers
from services.experiment_runner.src.schemas import ExperimentConfig

logger = logging.getLogger("experiment-runner")

OUT_DIR = os.getenv("FPP_IHRG_OUT_DIR", "out")

ROWS_FILE = "rows.csv"
SUMMARY_FILE = "summary.json"
METRICS_FILE = "metrics.prom"


def _file_token(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


def output_dir(config: ExperimentConfig, out: str | Path | None = None) -> Path:
    return Path(out or config.output or OUT_DIR) / _file_token(config.label)


def build_summary(config: ExperimentConfig, kernel_name: str, report: ExperimentReport, seconds: float,
                  rows_file: str | None = None, ecdf_files: list[str] | None = None) -> ExperimentSummary:
    return ExperimentSummary(
        name=config.label,
        experiment=config.experiment,
        kernel=kernel_name,
        master_seed=config.master_seed,
        n_values=config.n_values,
        requested=report.requested,
        accepted=report.accepted,
        rejected=report.requested - report.accepted,
        rejection_reasons=report.rejection_reasons,
        statistics={k: None if v is None else float(v) for k, v in report.statistics.items()},
        criteria=report.criteria,
        passed=report.passed,
        wall_clock_seconds=seconds,
        rows_file=rows_file,
        ecdf_files=ecdf_files or [],
    )


def run_experiment(config: ExperimentConfig, seed: int | None = None, workers: int | None = None,
                   out: str | Path | None = None) -> ExperimentSummary:
    """Roda a receita e grava rows.csv, summary.json, ecdf_*.txt e metrics.prom."""
    if seed is not None:
        config = config.model_copy(update={"master_seed": seed})
    workers = resolve_workers(workers or config.workers)
    kernel = config.load_kernel()
    out_dir = output_dir(config, out)
    recipe = EXPERIMENTS[config.experiment]

    logger.info(f"🚀 Iniciando {config.label} ({config.experiment}): kernel={kernel.name}, "
                f"n={config.n_values}, replicações={config.replications}, workers={workers}")
    ACTIVE_EXPERIMENTS.inc()
    start = time.perf_counter()
    try:
        report = recipe(RunContext(config=config, kernel=kernel, workers=workers, out_dir=out_dir))
    finally:
        ACTIVE_EXPERIMENTS.dec()
    seconds = time.perf_counter() - start

    rows_path = write_rows_csv(report.rows, report.columns, out_dir / ROWS_FILE)
    ecdf_files = [export_ecdf(sample, out_dir / f"ecdf_{_file_token(name)}.txt").name
                  for name, sample in report.ecdfs.items() if sample.size]
    summary = build_summary(config, kernel.name, report, seconds, rows_path.name, ecdf_files)
    write_json(summary, out_dir / SUMMARY_FILE)
    write_metrics_snapshot(out_dir / METRICS_FILE)

    if summary.passed:
        logger.info(f"✅ {config.label} aprovado em {seconds:.1f}s ({report.accepted}/{report.requested} aceitas)")
    else:
        failed = [c.name for c in summary.criteria if not c.passed]
        logger.error(f"❌ {config.label} reprovado em {seconds:.1f}s: {failed}")
    return summary
