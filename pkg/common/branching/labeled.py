# common/branching/labeled.py
"""
Processo de ramificação rotulado (CTLBP) com poda ("thinning").

Cada partícula carrega um rótulo (vértice do grafo) do seu tipo. Os filhos de
um split recebem rótulos sorteados sem reposição dentro do split, do universo
do tipo menos o próprio rótulo de quem splitou. Uma partícula cujo rótulo já
morreu é podada quando o relógio dela toca: não conta como split e a
subárvore nunca é gerada.

Contagem: o split da raiz é o split 1 (em tau = 0), então D(k) tem k rótulos.
"""
import heapq
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from common.branching.ctbp import EventStream
from common.exceptions import ConfigurationError, GraphError, SimulationError
from common.graph.generator import TypedVertexSet, WeightedGraph, allocate_counts, sample_graph, sample_vertices
from common.graph.shortest_path import sssp_tree
from common.kernel.finite import FiniteKernel
from common.utils.seeding import SeedLike, as_generator, child_seed

logger = logging.getLogger("fpp-labelbp")

ALIVE = -1


def block_vertices(kernel: FiniteKernel, n: int) -> TypedVertexSet:
    """Rótulos 0..n-1 em blocos contíguos por tipo (sem aleatoriedade)."""
    counts = allocate_counts(kernel.mu, n)
    return TypedVertexSet(n=n, types=np.repeat(np.arange(kernel.r, dtype=np.int64), counts), counts=counts)


class LabelPool:
    """
    Universos [n]^(t) como permutações com mapa de posição. Rótulos proibidos
    ficam na cauda, fora da faixa sorteável ``available[t]``.
    """

    def __init__(self, vs: TypedVertexSet, forbidden: Iterable[int] = ()):
        self.types = vs.types.tolist()
        self.arrays = [vs.members(t).tolist() for t in range(vs.r)]
        self.pos = [0] * vs.n
        for arr in self.arrays:
            for i, label in enumerate(arr):
                self.pos[label] = i
        self.available = [len(arr) for arr in self.arrays]
        for label in forbidden:
            self._retire(int(label))

    def _swap(self, t: int, i: int, j: int):
        arr = self.arrays[t]
        a, b = arr[i], arr[j]
        arr[i], arr[j] = b, a
        self.pos[b], self.pos[a] = i, j

    def _retire(self, label: int):
        t = self.types[label]
        if self.pos[label] < self.available[t]:
            self._swap(t, self.pos[label], self.available[t] - 1)
            self.available[t] -= 1

    def contains(self, label: int) -> bool:
        return self.pos[label] < self.available[self.types[label]]

    def trials(self, t: int, exclude: int) -> int:
        own = self.types[exclude] == t and self.contains(exclude)
        return self.available[t] - (1 if own else 0)

    def draw(self, t: int, count: int, exclude: int, stream: EventStream) -> list[int]:
        """``count`` rótulos distintos do tipo t, sem ``exclude`` (Fisher-Yates parcial)."""
        size = self.available[t]
        if self.types[exclude] == t and self.contains(exclude):
            self._swap(t, self.pos[exclude], size - 1)
            size -= 1
        if count > size:
            raise SimulationError(f"pedido de {count} rótulos do tipo {t} com apenas {size} disponíveis")
        for i in range(count):
            self._swap(t, i, i + stream.index(size - i))
        return self.arrays[t][:count]


@dataclass(frozen=True)
class SplitEvent:
    k: int
    particle: int
    label: int
    ptype: int
    generation: int
    tau: float


@dataclass(frozen=True)
class FlowTree:
    """
    Árvore de exploração (SWT) depois de ``k`` splits.

    Por partícula: rótulo, tipo, geração, pai, ``birth`` (primeiro estado em que
    está viva), ``death`` (primeiro estado em que já não está; -1 se viva),
    ``thinned`` e ``ring_time`` (instante do split ou da poda; NaN se viva).
    """
    n: int
    label: np.ndarray
    ptype: np.ndarray
    generation: np.ndarray
    parent: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    thinned: np.ndarray
    ring_time: np.ndarray
    dead_labels: np.ndarray
    split_particles: np.ndarray
    tau: np.ndarray
    exhausted: bool
    forbidden_count: int = 0

    @property
    def k(self) -> int:
        return int(self.dead_labels.size)

    def _check(self, k: int):
        if k < 0 or k > self.k:
            raise SimulationError(f"split {k} fora da árvore (k = {self.k})")

    def alive_mask(self, k: int) -> np.ndarray:
        self._check(k)
        return (self.birth <= k) & ((self.death == ALIVE) | (self.death > k))

    def alive_labels(self, k: int) -> np.ndarray:
        return self.label[self.alive_mask(k)]

    def alive_count(self, k: int) -> int:
        return int(np.count_nonzero(self.alive_mask(k)))

    def label_split(self) -> np.ndarray:
        """Para cada rótulo, o split em que morreu (k + 1 se ainda não morreu)."""
        out = np.full(self.n, self.k + 1, dtype=np.int64)
        out[self.dead_labels] = np.arange(1, self.k + 1)
        return out

    def wetting_sequence(self) -> list[tuple[int, float, int]]:
        """(rótulo, tempo, geração) na ordem dos splits: o análogo da ordem de inundação no grafo."""
        return [
            (int(self.label[p]), float(self.ring_time[p]), int(self.generation[p]))
            for p in self.split_particles.tolist()
        ]


class _ParticleBook:
    def __init__(self):
        self.label, self.ptype, self.generation, self.parent = [], [], [], []
        self.birth, self.death, self.thinned, self.ring_time = [], [], [], []

    def add(self, label: int, t: int, generation: int, parent: int, birth: int) -> int:
        pid = len(self.label)
        self.label.append(label)
        self.ptype.append(t)
        self.generation.append(generation)
        self.parent.append(parent)
        self.birth.append(birth)
        self.death.append(ALIVE)
        self.thinned.append(False)
        self.ring_time.append(math.nan)
        return pid

    def freeze(self, n: int, dead_labels: list, split_particles: list, tau: list,
               exhausted: bool, forbidden_count: int = 0) -> FlowTree:
        return FlowTree(
            n=n,
            label=np.array(self.label, dtype=np.int64),
            ptype=np.array(self.ptype, dtype=np.int64),
            generation=np.array(self.generation, dtype=np.int64),
            parent=np.array(self.parent, dtype=np.int64),
            birth=np.array(self.birth, dtype=np.int64),
            death=np.array(self.death, dtype=np.int64),
            thinned=np.array(self.thinned, dtype=bool),
            ring_time=np.array(self.ring_time, dtype=float),
            dead_labels=np.array(dead_labels, dtype=np.int64),
            split_particles=np.array(split_particles, dtype=np.int64),
            tau=np.array(tau, dtype=float),
            exhausted=exhausted,
            forbidden_count=forbidden_count,
        )


class LabeledFlow:
    """
    CTLBP livre com descendência binomial Bin(|pool_t| - delta_st, kappa(s,t)/n),
    avançado um split por vez com ``step()``.
    """

    def __init__(self, kernel: FiniteKernel, vs: TypedVertexSet, root_label: int,
                 seed: SeedLike = None, forbidden_labels: Iterable[int] | None = None):
        if not 0 <= root_label < vs.n:
            raise GraphError(f"rótulo de raiz inválido: {root_label} (n={vs.n})")
        forbidden = set() if forbidden_labels is None else {int(v) for v in forbidden_labels}
        if root_label in forbidden:
            raise ConfigurationError(f"rótulo de raiz {root_label} está entre os proibidos")
        self.vs = vs
        self.n = vs.n
        self.r = vs.r
        self.prob = np.minimum(kernel.kappa / vs.n, 1.0).tolist()
        self.rng = as_generator(seed)
        self.stream = EventStream(self.rng)
        self.pool = LabelPool(vs, forbidden)
        self.forbidden_count = len(forbidden)
        self.book = _ParticleBook()
        self.alive: list[int] = []
        self.alive_per_label: dict[int, int] = defaultdict(int)
        self.dead_at: dict[int, int] = {}
        self.untainted = 0
        self.dead_labels: list[int] = []
        self.split_particles: list[int] = []
        self.tau = [0.0]
        self.clock = 0.0
        self.k = 0
        self.exhausted = False
        self.thinned_removed = 0
        self._add(root_label, int(vs.types[root_label]), 0, -1)

    def _add(self, label: int, t: int, generation: int, parent: int):
        pid = self.book.add(label, t, generation, parent, self.k)
        self.alive.append(pid)
        self.alive_per_label[label] += 1
        if label not in self.dead_at:
            self.untainted += 1

    def _take(self, idx: int) -> int:
        pid = self.alive[idx]
        self.alive[idx] = self.alive[-1]
        self.alive.pop()
        self.alive_per_label[self.book.label[pid]] -= 1
        return pid

    def step(self) -> SplitEvent | None:
        """Avança até o próximo split real; None quando não há mais partícula não podada viva."""
        book = self.book
        while True:
            if self.untainted == 0:
                self.exhausted = True
                return None
            if self.k == 0:
                idx = 0  # a raiz morre em tau = 0
            else:
                self.clock += self.stream.exponential() / len(self.alive)
                idx = self.stream.index(len(self.alive))
            pid = self._take(idx)
            label = book.label[pid]
            book.ring_time[pid] = self.clock
            if label in self.dead_at:
                book.death[pid] = self.k + 1
                book.thinned[pid] = True
                self.thinned_removed += 1
                continue
            break

        self.k += 1
        book.death[pid] = self.k
        self.dead_at[label] = self.k
        self.untainted -= 1 + self.alive_per_label[label]
        self.dead_labels.append(label)
        self.split_particles.append(pid)
        self.tau.append(self.clock)

        s = book.ptype[pid]
        child_gen = book.generation[pid] + 1
        prob = self.prob[s]
        for t in range(self.r):
            trials = self.pool.trials(t, label)
            if trials <= 0 or prob[t] <= 0:
                continue
            count = int(self.rng.binomial(trials, prob[t]))
            for child in self.pool.draw(t, count, label, self.stream):
                self._add(child, t, child_gen, pid)
        return SplitEvent(k=self.k, particle=pid, label=label, ptype=s, generation=book.generation[pid], tau=self.clock)

    def distinct_alive_labels(self) -> set[int]:
        return {label for label, count in self.alive_per_label.items() if count > 0}

    def to_tree(self) -> FlowTree:
        if self.thinned_removed:
            logger.debug(f"{self.thinned_removed} partículas podadas em {self.k} splits")
        return self.book.freeze(self.n, self.dead_labels, self.split_particles, self.tau,
                                self.exhausted, self.forbidden_count)


def run_labeled_bp(kernel: FiniteKernel, n: int, root_label: int, m_max: int, seed: SeedLike = None,
                   forbidden_labels: Iterable[int] | None = None,
                   vertices: TypedVertexSet | None = None) -> FlowTree:
    if m_max > n:
        raise ConfigurationError(f"m_max ({m_max}) não pode exceder n ({n})")
    vs = vertices if vertices is not None else block_vertices(kernel, n)
    flow = LabeledFlow(kernel, vs, root_label, seed, forbidden_labels)
    while flow.k < m_max and flow.step() is not None:
        pass
    if flow.untainted == 0:
        flow.exhausted = True
    return flow.to_tree()


def run_graph_driven(g: WeightedGraph, root: int, m_max: int | None = None) -> FlowTree:
    """
    Exploração podada lendo um grafo realizado: os filhos de um split são os
    vizinhos do rótulo e o relógio de cada filho é o peso da aresta. Empates
    saem na ordem (tempo, geração, rótulo, rótulo do pai).
    """
    if not 0 <= root < g.n:
        raise GraphError(f"vértice inválido: {root} (n={g.n})")
    types = g.vertices.types.tolist()
    adjacency = g.adjacency_lists
    book = _ParticleBook()
    book.add(root, types[root], 0, -1, 0)
    heap = [(0.0, 0, root, -1, 0)]
    dead: set[int] = set()
    dead_labels, split_particles, tau = [], [], [0.0]
    k = 0
    limit = g.n if m_max is None else m_max
    while heap and k < limit:
        clock, generation, label, _, pid = heapq.heappop(heap)
        book.ring_time[pid] = clock
        if label in dead:
            book.death[pid] = k + 1
            book.thinned[pid] = True
            continue
        k += 1
        book.death[pid] = k
        dead.add(label)
        dead_labels.append(label)
        split_particles.append(pid)
        tau.append(clock)
        for v, w in adjacency[label]:
            child = book.add(v, types[v], generation + 1, pid, k)
            heapq.heappush(heap, (clock + w, generation + 1, v, label, child))
    exhausted = not any(entry[2] not in dead for entry in heap)
    return book.freeze(g.n, dead_labels, split_particles, tau, exhausted)


@dataclass(frozen=True)
class EmbeddingReport:
    n: int
    root: int
    compared: int
    mismatches: int
    order_matches: bool

    @property
    def passed(self) -> bool:
        return self.mismatches == 0 and self.order_matches


def compare_embedding(g: WeightedGraph, x: int) -> EmbeddingReport:
    """Compara (peso, saltos) por vértice entre Dijkstra e a exploração podada no mesmo grafo."""
    tree = sssp_tree(g, x)
    flow = run_graph_driven(g, x)
    mismatches = 0
    reached = set()
    for label, time, generation in flow.wetting_sequence():
        reached.add(label)
        if time != tree.dist[label] or generation != tree.hops[label]:
            mismatches += 1
    reachable = set(tree.order.tolist())
    mismatches += len(reachable ^ reached)
    order_matches = [label for label, _, _ in flow.wetting_sequence()] == tree.order.tolist()
    return EmbeddingReport(n=g.n, root=x, compared=len(reached), mismatches=mismatches, order_matches=order_matches)


def embedding_equivalence(kernel: FiniteKernel, n: int, seed: SeedLike = None) -> EmbeddingReport:
    if n < 2:
        raise GraphError(f"n deve ser >= 2 (recebido {n})")
    vs = sample_vertices(kernel, n, child_seed(seed, 0))
    g = sample_graph(kernel, vs, child_seed(seed, 1))
    x = int(as_generator(child_seed(seed, 2)).integers(n))
    report = compare_embedding(g, x)
    if not report.passed:
        logger.warning(f"⚠️ Embedding divergiu: n={n}, raiz={x}, {report.mismatches} divergências")
    return report


def thinned_alive_fraction(tree: FlowTree, k: int, t: int) -> float | None:
    """thA^t(k) / A^t(k); None se não há vivas do tipo t."""
    mask = tree.alive_mask(k) & (tree.ptype == t)
    total = int(np.count_nonzero(mask))
    if total == 0:
        return None
    thinned = tree.label_split()[tree.label[mask]] <= k
    return float(np.count_nonzero(thinned) / total)


def multiple_label_count(tree: FlowTree, k: int, t: int) -> tuple[int, int]:
    """(rótulos vivos distintos do tipo t, partículas vivas do tipo t)."""
    labels = tree.label[tree.alive_mask(k) & (tree.ptype == t)]
    return int(np.unique(labels).size), int(labels.size)
