# services/experiment_runner/src/experiments/base.py
import logging
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from common.exceptions import ConfigurationError
from common.kernel.finite import check_homogeneity, check_irreducibility
from common.kernel.spec import LoadedKernel
from common.schemas.results import CriterionVerdict
from services.experiment_runner.src.runner import ReplicationBatch
from services.experiment_runner.src.schemas import ExperimentConfig

logger = logging.getLogger("experiment-runner")

_OPS = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt, "==": operator.eq}


@dataclass
class RunContext:
    config: ExperimentConfig
    kernel: LoadedKernel
    workers: int
    out_dir: Path


@dataclass
class ExperimentReport:
    columns: list[str]
    rows: list[dict]
    requested: int
    accepted: int
    rejection_reasons: dict[str, int] = field(default_factory=dict)
    statistics: dict[str, float | None] = field(default_factory=dict)
    criteria: list[CriterionVerdict] = field(default_factory=list)
    ecdfs: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)


class CriteriaBook:
    """Acumula critérios; o limiar padrão pode ser sobrescrito em ``thresholds`` da configuração."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.items: list[CriterionVerdict] = []

    def check(self, name: str, value: float | None, default: float, comparison: str = "<=",
              detail: str | None = None, key: str | None = None) -> CriterionVerdict:
        threshold = self.config.threshold(key or name, default)
        valid = value is not None and not (isinstance(value, float) and math.isnan(value))
        passed = bool(valid and _OPS[comparison](value, threshold))
        verdict = CriterionVerdict(name=name, value=None if not valid else float(value), threshold=threshold,
                                   comparison=comparison, passed=passed, detail=detail)
        if not passed:
            logger.warning(f"❌ Critério {name} falhou: {value} {comparison} {threshold}")
        self.items.append(verdict)
        return verdict


class BatchCollector:
    """Junta linhas e rejeições de vários lotes (um por n, por regra, ...)."""

    def __init__(self):
        self.rows: list[dict] = []
        self.requested = 0
        self.accepted = 0
        self.rejections: dict[str, int] = {}

    def add(self, batch: ReplicationBatch) -> ReplicationBatch:
        self.rows.extend(batch.rows)
        self.requested += len(batch.outcomes)
        self.accepted += len(batch.accepted)
        for reason, count in batch.rejection_reasons().items():
            self.rejections[reason] = self.rejections.get(reason, 0) + count
        return batch

    def report(self, columns: Sequence[str], statistics: dict, criteria: CriteriaBook,
               ecdfs: dict[str, Any] | None = None) -> ExperimentReport:
        return ExperimentReport(
            columns=list(columns), rows=self.rows, requested=self.requested, accepted=self.accepted,
            rejection_reasons=self.rejections, statistics=statistics, criteria=criteria.items,
            ecdfs={k: np.asarray(v, dtype=float) for k, v in (ecdfs or {}).items()},
        )


def require_supercritical(kernel: LoadedKernel, homogeneous: bool = True):
    """Recusa kernels subcríticos, redutíveis ou (quando exigido) não homogêneos."""
    m = kernel.m
    if m.lambda_tilde <= 0:
        raise ConfigurationError(f"kernel {kernel.name} é subcrítico (lambda_tilde = {m.lambda_tilde:.6g})")
    if not check_irreducibility(m).passed:
        raise ConfigurationError(f"kernel {kernel.name} não é irredutível")
    if homogeneous:
        report = check_homogeneity(m)
        if not report.passed:
            raise ConfigurationError(
                f"kernel {kernel.name} não é homogêneo (desvio máximo {report.max_deviation:.3g})"
            )


def column(rows: Sequence[dict], key: str, **match) -> np.ndarray:
    """Valores de ``key`` nas linhas que batem com ``match`` (None vira NaN)."""
    values = [row.get(key) for row in rows if all(row.get(k) == v for k, v in match.items())]
    return np.array([math.nan if v is None else v for v in values], dtype=float)


def finite(values: np.ndarray) -> np.ndarray:
    return values[np.isfinite(values)]
