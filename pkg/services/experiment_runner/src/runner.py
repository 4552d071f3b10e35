# services/experiment_runner/src/runner.py
"""
Execução das replicações num pool de processos.

A replicação i recebe a semente derivada de (semente mestre, experimento, i),
e os resultados voltam em ordem de índice: o CSV não depende do número de
workers nem da ordem de escalonamento.
"""
import logging
import os
import time
from collections import Counter as TallyCounter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

from common.exceptions import SimulationError
from common.observability.metrics import record_replication
from common.utils.seeding import replication_seed

logger = logging.getLogger("experiment-runner")

# sobrescreve o número de workers da configuração
WORKERS_OVERRIDE = os.getenv("FPP_IHRG_WORKERS")

ReplicationFn = Callable[[Any, int, Any], "ReplicationOutput"]


@dataclass
class ReplicationOutput:
    rows: list[dict]
    payload: Any = None


@dataclass
class ReplicationOutcome:
    index: int
    rows: list[dict] = field(default_factory=list)
    payload: Any = None
    rejected_reason: str | None = None
    seconds: float = 0.0

    @property
    def accepted(self) -> bool:
        return self.rejected_reason is None


@dataclass
class ReplicationBatch:
    experiment: str
    outcomes: list[ReplicationOutcome]

    @property
    def accepted(self) -> list[ReplicationOutcome]:
        return [o for o in self.outcomes if o.accepted]

    @property
    def rows(self) -> list[dict]:
        return [row for o in self.accepted for row in o.rows]

    @property
    def payloads(self) -> list[Any]:
        return [o.payload for o in self.accepted]

    def rejection_reasons(self) -> dict[str, int]:
        return dict(TallyCounter(o.rejected_reason for o in self.outcomes if not o.accepted))


def resolve_workers(configured: int) -> int:
    if WORKERS_OVERRIDE:
        try:
            return max(1, int(WORKERS_OVERRIDE))
        except ValueError:
            logger.warning(f"⚠️ FPP_IHRG_WORKERS inválido: {WORKERS_OVERRIDE!r}; usando {configured}")
    return configured


def _execute(task: tuple) -> ReplicationOutcome:
    fn, context, index, seed = task
    start = time.perf_counter()
    try:
        output = fn(context, index, seed)
        return ReplicationOutcome(index=index, rows=output.rows, payload=output.payload,
                                  seconds=time.perf_counter() - start)
    except SimulationError as e:
        return ReplicationOutcome(index=index, rejected_reason=type(e).__name__,
                                  seconds=time.perf_counter() - start)


def run_replications(fn: ReplicationFn, context: Any, count: int, master_seed: int, experiment: str,
                     workers: int = 1, seed_key: str | None = None) -> ReplicationBatch:
    """
    Roda ``count`` replicações de ``fn(context, index, seed)``. Falhas de simulação
    (extinção, nenhuma colisão, ...) viram replicações rejeitadas.
    ``seed_key`` separa fluxos de sementes de sub-experimentos.
    """
    key = seed_key or experiment
    tasks = [(fn, context, i, replication_seed(master_seed, key, i)) for i in range(count)]
    if workers <= 1 or count <= 1:
        outcomes = [_execute(task) for task in tasks]
    else:
        chunksize = max(1, count // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_execute, tasks, chunksize=chunksize))

    for outcome in outcomes:
        record_replication(experiment, outcome.accepted, outcome.seconds)
        if not outcome.accepted:
            logger.warning(f"⚠️ [{key}] replicação {outcome.index} rejeitada: {outcome.rejected_reason}")
    batch = ReplicationBatch(experiment=experiment, outcomes=outcomes)
    logger.info(f"✅ [{key}] {len(batch.accepted)}/{count} replicações aceitas")
    return batch
