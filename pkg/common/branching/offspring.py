# common/branching/offspring.py
"""
Leis de descendência do processo de ramificação multi-tipo.

poisson  : filhos do tipo t de um pai do tipo s ~ Poi(lam[s][t])
binomial : ~ Bin(n_t - delta_st, kappa[s][t] / n)  (exploração do grafo finito)
fixed    : número determinístico de filhos (casos degenerados de teste)
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from common.exceptions import ConfigurationError
from common.graph.generator import allocate_counts
from common.kernel.finite import FiniteKernel, MeanOffspringMatrix

BUFFER_SIZE = 1024
INVERSE_CDF_TAIL = 1e-12
INVERSE_CDF_SPREAD = 40.0


@dataclass(frozen=True)
class OffspringLaw:
    mode: str
    means: np.ndarray
    trials: np.ndarray | None = None
    prob: np.ndarray | None = None
    fixed: np.ndarray | None = None

    @property
    def r(self) -> int:
        return self.means.shape[0]

    @property
    def lambda_tilde(self) -> float:
        return float(self.means[0].sum() - 1.0)


def poisson_law(m: MeanOffspringMatrix) -> OffspringLaw:
    return OffspringLaw(mode="poisson", means=m.lam.copy())


def binomial_law(kernel: FiniteKernel, n: int, counts: np.ndarray | None = None) -> OffspringLaw:
    """Parâmetros da exploração de G(n, kappa): n_t - delta_st tentativas com sucesso kappa/n."""
    counts = allocate_counts(kernel.mu, n) if counts is None else np.asarray(counts, dtype=np.int64)
    trials = np.maximum(counts[np.newaxis, :] - np.eye(kernel.r, dtype=np.int64), 0)
    prob = np.minimum(kernel.kappa / n, 1.0)
    return OffspringLaw(mode="binomial", means=trials * prob, trials=trials, prob=prob)


def fixed_law(children) -> OffspringLaw:
    fixed = np.atleast_2d(np.asarray(children, dtype=np.int64))
    if fixed.shape[0] != fixed.shape[1] or np.any(fixed < 0):
        raise ConfigurationError("lei fixa precisa de uma matriz quadrada não negativa")
    return OffspringLaw(mode="fixed", means=fixed.astype(float), fixed=fixed)


class DirectSampler:
    """Sorteios em bloco por tipo do pai (um lote de BUFFER_SIZE linhas por vez)."""

    def __init__(self, law: OffspringLaw, rng: np.random.Generator):
        self.law = law
        self.rng = rng
        self._buffers = [None] * law.r
        self._pos = [BUFFER_SIZE] * law.r

    def _refill(self, s: int):
        law = self.law
        if law.mode == "poisson":
            block = self.rng.poisson(law.means[s], size=(BUFFER_SIZE, law.r))
        elif law.mode == "binomial":
            block = self.rng.binomial(law.trials[s], law.prob[s], size=(BUFFER_SIZE, law.r))
        else:
            block = np.broadcast_to(law.fixed[s], (BUFFER_SIZE, law.r))
        self._buffers[s] = block.tolist()
        self._pos[s] = 0

    def draw(self, s: int) -> list[int]:
        if self._pos[s] >= BUFFER_SIZE:
            self._refill(s)
        row = self._buffers[s][self._pos[s]]
        self._pos[s] += 1
        return row


def _table_length(dist, mean: float) -> int:
    # quantil 1 - tail, com limite pela média se a scipy devolver NaN
    quantile = dist.ppf(1.0 - INVERSE_CDF_TAIL)
    if not np.isfinite(quantile):
        quantile = mean + INVERSE_CDF_SPREAD * (1.0 + math.sqrt(mean))
    return int(quantile) + 2


def _inverse_cdf_table(law: OffspringLaw, s: int, t: int) -> np.ndarray:
    if law.mode != "fixed" and law.means[s, t] <= 0:
        return np.array([1.0])
    if law.mode == "poisson":
        dist = stats.poisson(law.means[s, t])
    elif law.mode == "binomial":
        dist = stats.binom(int(law.trials[s, t]), float(law.prob[s, t]))
    else:
        return np.array([0.0] * int(law.fixed[s, t]) + [1.0])
    top = _table_length(dist, law.means[s, t])
    cdf = dist.cdf(np.arange(top))
    cdf[-1] = 1.0
    return cdf


class InverseCdfSampler:
    """
    Um uniforme por par (s, t) transformado pela inversa da CDF. Duas leis
    alimentadas pelo mesmo fluxo de uniformes ficam acopladas par a par.
    """

    def __init__(self, law: OffspringLaw, rng: np.random.Generator):
        self.law = law
        self.rng = rng
        self._tables = [[_inverse_cdf_table(law, s, t) for t in range(law.r)] for s in range(law.r)]
        self._uniforms = []
        self._pos = 0

    def draw(self, s: int) -> list[int]:
        r = self.law.r
        if self._pos + r > len(self._uniforms):
            self._uniforms = self.rng.random(BUFFER_SIZE * r).tolist()
            self._pos = 0
        u = self._uniforms[self._pos:self._pos + r]
        self._pos += r
        return [int(np.searchsorted(self._tables[s][t], u[t], side="right")) for t in range(r)]


def make_sampler(law: OffspringLaw, rng: np.random.Generator, method: str = "direct"):
    if method == "direct":
        return DirectSampler(law, rng)
    if method == "inverse":
        return InverseCdfSampler(law, rng)
    raise ConfigurationError(f"amostrador desconhecido: {method}")
