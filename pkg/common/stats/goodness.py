# common/stats/goodness.py
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from common.exceptions import InsufficientSampleError

logger = logging.getLogger("fpp-stats")

KS_95 = 1.36


@dataclass(frozen=True)
class EmpiricalSample:
    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.size)

    @classmethod
    def of(cls, values: Sequence[float]) -> "EmpiricalSample":
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            raise InsufficientSampleError("amostra vazia")
        if not np.all(np.isfinite(arr)):
            raise InsufficientSampleError("amostra com valores não finitos")
        return cls(values=np.sort(arr))

    def ecdf(self) -> tuple[np.ndarray, np.ndarray]:
        return self.values, np.arange(1, self.n + 1) / self.n


def _as_sample(sample) -> EmpiricalSample:
    return sample if isinstance(sample, EmpiricalSample) else EmpiricalSample.of(sample)


def ks_statistic(sample, cdf: Callable) -> float:
    """D = sup |F_n - F| (fórmula das estatísticas de ordem)."""
    return float(stats.kstest(_as_sample(sample).values, cdf).statistic)


def ks_two_sample(a, b) -> float:
    return float(stats.ks_2samp(_as_sample(a).values, _as_sample(b).values).statistic)


def ks_critical_value(n: int, c: float = KS_95) -> float:
    return c / np.sqrt(n)


def ks_two_sample_critical_value(n: int, m: int, c: float = KS_95) -> float:
    return c * np.sqrt((n + m) / (n * m))


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    se: float
    count: int

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.mean - target) <= k * self.se


def mean_with_se(values: Sequence[float]) -> MeanEstimate:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise InsufficientSampleError(f"média com erro padrão exige >= 2 valores (recebido {arr.size})")
    return MeanEstimate(mean=float(arr.mean()), se=float(arr.std(ddof=1) / np.sqrt(arr.size)), count=int(arr.size))


def proportion_se(p: float, count: int) -> float:
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / count)) if count else float("nan")


def correlation(a: Sequence[float], b: Sequence[float]) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.size < 3 or np.std(a) == 0 or np.std(b) == 0:
        return 0.0
    return float(stats.pearsonr(a, b).statistic)


def export_ecdf(sample, path: str | Path) -> Path:
    """Arquivo texto de duas colunas ``x F(x)`` para plotagem externa."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x, f = _as_sample(sample).ecdf()
    np.savetxt(path, np.column_stack([x, f]), fmt="%.17g")
    return path
