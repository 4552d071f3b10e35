# common/graph/components.py
import logging
from dataclasses import dataclass

import numpy as np

from common.exceptions import GraphError
from common.graph.generator import WeightedGraph
from common.utils.seeding import SeedLike, as_generator

logger = logging.getLogger("fpp-graph")

MAX_PAIR_ATTEMPTS = 1_000_000


class UnionFind:
    """Union-find com compressão de caminho e união por rank."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


@dataclass(frozen=True)
class ComponentLabeling:
    """``labels[v]`` numera as componentes por ordem do menor vértice; ``sizes[c]`` é o tamanho."""
    labels: np.ndarray
    sizes: np.ndarray

    @property
    def count(self) -> int:
        return int(self.sizes.size)

    @property
    def giant_label(self) -> int:
        return int(np.argmax(self.sizes))

    @property
    def giant_size(self) -> int:
        return int(self.sizes.max())

    @property
    def giant_fraction(self) -> float:
        return self.giant_size / self.labels.size

    def same_component(self, x: int, y: int) -> bool:
        return bool(self.labels[x] == self.labels[y])


@dataclass(frozen=True)
class ConnectedPair:
    x: int
    y: int
    attempts: int


def components(g: WeightedGraph) -> ComponentLabeling:
    uf = UnionFind(g.n)
    for u, v in zip(g.edges_u.tolist(), g.edges_v.tolist()):
        uf.union(u, v)
    roots = np.array([uf.find(v) for v in range(g.n)], dtype=np.int64)
    _, first, labels = np.unique(roots, return_index=True, return_inverse=True)
    # renumera pela ordem de aparição do menor vértice de cada componente
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    labels = rank[labels]
    return ComponentLabeling(labels=labels, sizes=np.bincount(labels))


def sample_connected_pair(g: WeightedGraph, seed: SeedLike = None,
                          labeling: ComponentLabeling | None = None,
                          max_attempts: int = MAX_PAIR_ATTEMPTS) -> ConnectedPair:
    """
    Sorteia pares ordenados (x, y), x != y, uniformes até os dois caírem na mesma
    componente. ``attempts`` conta os sorteios, então 1/attempts estima a aceitação.
    """
    labeling = components(g) if labeling is None else labeling
    if labeling.giant_size < 2:
        raise GraphError("nenhuma componente com pelo menos 2 vértices")
    rng = as_generator(seed)
    n = g.n
    for attempt in range(1, max_attempts + 1):
        x = int(rng.integers(n))
        y = int(rng.integers(n - 1))
        if y >= x:
            y += 1
        if labeling.same_component(x, y):
            return ConnectedPair(x=x, y=y, attempts=attempt)
    raise GraphError(f"nenhum par conectado em {max_attempts} tentativas")
