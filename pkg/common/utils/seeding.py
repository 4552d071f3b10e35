# common/utils/seeding.py
"""
Derivação determinística de sementes.

Cada replicação recebe uma ``SeedSequence`` derivada de
(semente mestre, nome do experimento, índice). A derivação é baseada em
contador (``spawn_key``), então o resultado não depende da ordem em que os
workers executam as tarefas.
"""
import zlib
from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def experiment_key(name: str) -> int:
    # crc32 é estável entre processos (hash() não é)
    return zlib.crc32(name.encode("utf-8"))


def replication_seed(master_seed: int, experiment: str, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(experiment_key(experiment), index))


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(0, 2**63)))
    return np.random.SeedSequence(seed)


def child_seed(seed: SeedLike, *keys: int) -> np.random.SeedSequence:
    """Sub-semente endereçada por chaves inteiras (ex.: número da tentativa)."""
    parent = as_seed_sequence(seed)
    return np.random.SeedSequence(entropy=parent.entropy, spawn_key=tuple(parent.spawn_key) + tuple(keys))


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(as_seed_sequence(seed))
