# common/stats/identities.py
"""Amostradores independentes das identidades usadas no regime denso."""
from dataclasses import dataclass

import numpy as np

from common.exceptions import InsufficientSampleError
from common.stats.distributions import EULER_GAMMA, GUMBEL_VARIANCE, sample_gumbel
from common.stats.goodness import MeanEstimate, ks_two_sample, ks_two_sample_critical_value, mean_with_se
from common.utils.seeding import SeedLike, as_generator, child_seed

CHUNK = 10_000
MIN_GUMBEL_REPS = 10_000


@dataclass(frozen=True)
class MaxExpIdentity:
    m: int
    reps: int
    ks: float
    critical: float
    harmonic: float
    sum_mean: MeanEstimate
    max_mean: MeanEstimate

    @property
    def passed(self) -> bool:
        return self.ks <= self.critical


def max_exp_identity_check(m: int, reps: int, seed: SeedLike = None) -> MaxExpIdentity:
    """sum_{i<=m} E_i / i tem a mesma lei que o máximo de m Exp(1) independentes."""
    if m < 1:
        raise InsufficientSampleError(f"m deve ser >= 1 (recebido {m})")
    sum_rng = as_generator(child_seed(seed, 0))
    max_rng = as_generator(child_seed(seed, 1))
    inv = 1.0 / np.arange(1, m + 1)
    sums, maxima = [], []
    for start in range(0, reps, CHUNK):
        size = min(CHUNK, reps - start)
        sums.append(sum_rng.standard_exponential((size, m)) @ inv)
        maxima.append(max_rng.standard_exponential((size, m)).max(axis=1))
    sums, maxima = np.concatenate(sums), np.concatenate(maxima)
    return MaxExpIdentity(
        m=m,
        reps=reps,
        ks=ks_two_sample(sums, maxima),
        critical=float(ks_two_sample_critical_value(reps, reps)),
        harmonic=float(inv.sum()),
        sum_mean=mean_with_se(sums),
        max_mean=mean_with_se(maxima),
    )


@dataclass(frozen=True)
class GumbelSumMoments:
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    difference_mean: MeanEstimate
    target_mean: float = EULER_GAMMA
    target_variance: float = 3.0 * GUMBEL_VARIANCE


def gumbel_sum_moments(reps: int, seed: SeedLike = None) -> GumbelSumMoments:
    """Momentos de Y1 + Y2 - Y3 com Y_i Gumbel padrão i.i.d. (e de Y1 - Y2 como controle)."""
    if reps < MIN_GUMBEL_REPS:
        raise InsufficientSampleError(f"reps deve ser >= {MIN_GUMBEL_REPS} (recebido {reps})")
    rng = as_generator(seed)
    y = sample_gumbel(rng, (reps, 3))
    total = y[:, 0] + y[:, 1] - y[:, 2]
    centered = total - total.mean()
    variance = float(np.var(total, ddof=1))
    fourth = float(np.mean(centered ** 4))
    return GumbelSumMoments(
        mean=float(total.mean()),
        mean_se=float(np.sqrt(variance / reps)),
        variance=variance,
        variance_se=float(np.sqrt(max(fourth - variance ** 2, 0.0) / reps)),
        difference_mean=mean_with_se(y[:, 0] - y[:, 1]),
    )
