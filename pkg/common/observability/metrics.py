import logging
from pathlib import Path

from prometheus_client import REGISTRY, Counter, Gauge, Histogram, start_http_server, write_to_textfile

logger = logging.getLogger("fpp-metrics")

REPLICATIONS_TOTAL = Counter('fpp_replications_total', 'Total de replicações processadas', ['experiment', 'outcome'])
REPLICATION_SECONDS = Histogram('fpp_replication_seconds', 'Duração de uma replicação (segundos)', ['experiment'],
                                buckets=(0.001, 0.01, 0.05, 0.1, 0.5, 1, 5, 10, 30, 60, 300))
ACTIVE_EXPERIMENTS = Gauge('fpp_active_experiments', 'Número de experimentos rodando agora')


def start_runner_metrics(port: int):
    """Inicia um servidor HTTP leve para expor métricas em background"""
    try:
        start_http_server(port)
        logger.info(f"📊 Métricas do runner rodando na porta {port}")
    except Exception as e:
        logger.warning(f"⚠️ Falha ao iniciar métricas: {e}")


def record_replication(experiment: str, accepted: bool, seconds: float):
    REPLICATIONS_TOTAL.labels(experiment=experiment, outcome="accepted" if accepted else "rejected").inc()
    REPLICATION_SECONDS.labels(experiment=experiment).observe(seconds)


def write_metrics_snapshot(path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)
    return path
