# common/branching/coupling.py
"""
Acoplamento entre a exploração binomial (grafo de tamanho n) e o processo
com descendência de Poisson. As duas trajetórias consomem o mesmo fluxo
aleatório; enquanto os filhos por tipo coincidem elas são idênticas.
"""
import logging
from dataclasses import dataclass

import numpy as np

from common.branching.ctbp import BpState, run_bp
from common.branching.offspring import binomial_law, poisson_law
from common.exceptions import ConfigurationError
from common.kernel.finite import FiniteKernel, mean_offspring
from common.utils.seeding import SeedLike, as_seed_sequence

logger = logging.getLogger("fpp-ctbp")


@dataclass(frozen=True)
class CoupledRun:
    binomial: BpState
    poisson: BpState
    decouple_split: int | None


def decoupling_bound(kernel: FiniteKernel, n: int, m: int) -> float:
    """(m/n) * (lambda_tilde + 1) * max kappa."""
    lt = mean_offspring(kernel).lambda_tilde
    return m / n * (lt + 1.0) * kernel.max_kappa


def first_difference(a: BpState, b: BpState) -> int | None:
    steps = min(a.children.shape[0], b.children.shape[0])
    differs = np.flatnonzero(np.any(a.children[:steps] != b.children[:steps], axis=1))
    if differs.size:
        return int(differs[0]) + 1
    if a.m != b.m:
        return steps + 1
    return None


def coupled_bin_poi_run(kernel: FiniteKernel, n: int, root_type: int, m_max: int,
                        seed: SeedLike = None) -> CoupledRun:
    if m_max > n:
        raise ConfigurationError(f"m_max ({m_max}) não pode exceder n ({n})")
    seed = as_seed_sequence(seed)
    bin_state = run_bp(binomial_law(kernel, n), root_type, m_max, seed, sampler="inverse", record_children=True)
    poi_state = run_bp(poisson_law(mean_offspring(kernel)), root_type, m_max, seed,
                       sampler="inverse", record_children=True)
    return CoupledRun(binomial=bin_state, poisson=poi_state, decouple_split=first_difference(bin_state, poi_state))
