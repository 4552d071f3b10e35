# services/experiment_runner/src/suite.py
import logging
import time
from pathlib import Path

from common.exceptions import SimulationError
from common.schemas.results import SuiteEntry, SuiteReport
from common.utils.io import write_json
from services.experiment_runner.src.pipeline import OUT_DIR, SUMMARY_FILE, output_dir, run_experiment
from services.experiment_runner.src.schemas import (
    ExperimentConfig,
    SuiteConfig,
    load_experiment_config,
    parse_experiment_config,
)

logger = logging.getLogger("experiment-runner")

SUITE_REPORT_FILE = "suite_report.json"


def _load_entry(entry: str | dict, base_dir: Path) -> tuple[str, ExperimentConfig]:
    if isinstance(entry, str):
        path = Path(entry)
        if not path.is_absolute():
            path = base_dir / path
        return entry, load_experiment_config(path)
    return entry.get("name") or entry.get("experiment") or "inline", parse_experiment_config(entry, base_dir)


def run_suite(suite: SuiteConfig, base_dir: str | Path = ".", out: str | Path | None = None,
              workers: int | None = None) -> SuiteReport:
    """
    Roda cada entrada da suíte. Configuração inválida é registrada e pulada;
    a suíte só passa se todas as entradas passarem.
    """
    base_dir = Path(base_dir)
    out_root = Path(out or suite.output or OUT_DIR)
    start = time.perf_counter()
    entries = []

    for i, raw in enumerate(suite.experiments):
        label = raw if isinstance(raw, str) else f"inline[{i}]"
        try:
            label, config = _load_entry(raw, base_dir)
        except SimulationError as e:
            logger.error(f"❌ Entrada {label} inválida: {e}")
            entries.append(SuiteEntry(config=str(label), status="invalid", error=str(e)))
            continue
        try:
            summary = run_experiment(config, workers=workers or suite.workers, out=out_root)
        except SimulationError as e:
            logger.error(f"❌ Entrada {label} falhou na execução: {e}")
            entries.append(SuiteEntry(config=str(label), experiment=config.experiment, status="error", error=str(e)))
            continue
        entries.append(SuiteEntry(
            config=str(label),
            experiment=config.experiment,
            status="passed" if summary.passed else "failed",
            failed_criteria=[c.name for c in summary.criteria if not c.passed],
            summary_file=str(output_dir(config, out_root) / SUMMARY_FILE),
        ))

    report = SuiteReport(entries=entries, passed=all(e.status == "passed" for e in entries),
                         wall_clock_seconds=time.perf_counter() - start)
    write_json(report, out_root / SUITE_REPORT_FILE)
    logger.info(f"📊 Suíte: {sum(e.status == 'passed' for e in entries)}/{len(entries)} aprovadas")
    return report
