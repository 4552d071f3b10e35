# common/graph/generator.py
"""
Amostragem de G(n, kappa): vértices tipados, arestas de Bernoulli com
probabilidade min(kappa(s,t)/n, 1) e pesos Exp(1) independentes.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from common.exceptions import GraphError
from common.kernel.finite import FiniteKernel
from common.utils.seeding import SeedLike, as_generator

logger = logging.getLogger("fpp-graph")

# Até aqui percorremos todos os pares linha a linha; acima, salto geométrico por bloco de tipos
PAIRWISE_LIMIT = 20_000
GEOMETRIC_BATCH = 4096


@dataclass(frozen=True)
class TypedVertexSet:
    n: int
    types: np.ndarray
    counts: np.ndarray
    positions: np.ndarray | None = None

    @property
    def r(self) -> int:
        return int(self.counts.size)

    def members(self, t: int) -> np.ndarray:
        """Rótulos (vértices) do tipo t em ordem crescente: o universo [n]^(t)."""
        return np.flatnonzero(self.types == t)


@dataclass
class WeightedGraph:
    """
    Grafo não direcionado com pesos. ``edges_u < edges_v`` e a lista de arestas
    vem ordenada lexicograficamente; a adjacência é CSR (indptr / indices / weights).
    """
    vertices: TypedVertexSet
    edges_u: np.ndarray
    edges_v: np.ndarray
    weights: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    adj_weights: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.vertices.n

    @property
    def edge_count(self) -> int:
        return int(self.edges_u.size)

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.indices[lo:hi], self.adj_weights[lo:hi]

    @cached_property
    def adjacency_lists(self) -> list[list[tuple[int, float]]]:
        # listas Python: os laços de Dijkstra / exploração não pagam o custo de indexar numpy
        out: list[list[tuple[int, float]]] = []
        for v in range(self.n):
            nbrs, ws = self.neighbors(v)
            out.append(list(zip(nbrs.tolist(), ws.tolist())))
        return out

    def edge_list(self) -> list[tuple[int, int, float]]:
        return list(zip(self.edges_u.tolist(), self.edges_v.tolist(), self.weights.tolist()))


def build_graph(vs: TypedVertexSet, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> WeightedGraph:
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    w = np.asarray(w, dtype=float)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    if np.any(lo == hi):
        raise GraphError("laço (self-loop) na lista de arestas")
    order = np.lexsort((hi, lo))
    lo, hi, w = lo[order], hi[order], w[order]
    if lo.size > 1 and np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
        raise GraphError("aresta duplicada na lista de arestas")

    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    both = np.concatenate([w, w])
    adj = np.lexsort((dst, src))
    indptr = np.zeros(vs.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=vs.n), out=indptr[1:])
    return WeightedGraph(
        vertices=vs, edges_u=lo, edges_v=hi, weights=w,
        indptr=indptr, indices=dst[adj], adj_weights=both[adj],
    )


def exp_weights(rng: np.random.Generator, size: int) -> np.ndarray:
    # inversa da CDF com U em (0, 1]
    return -np.log(1.0 - rng.random(size))


def allocate_counts(mu: np.ndarray, n: int) -> np.ndarray:
    """Arredondamento de maior resto de n * mu (empates vão para o menor tipo)."""
    exact = n * np.asarray(mu, dtype=float)
    counts = np.floor(exact).astype(np.int64)
    missing = n - int(counts.sum())
    if missing > 0:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:missing]] += 1
    return counts


def sample_vertices(kernel: FiniteKernel, n: int, seed: SeedLike = None, iid: bool = False) -> TypedVertexSet:
    if n < 2:
        raise GraphError(f"n deve ser >= 2 (recebido {n})")
    rng = as_generator(seed)
    if iid:
        types = rng.choice(kernel.r, size=n, p=kernel.mu).astype(np.int64)
        counts = np.bincount(types, minlength=kernel.r)
    else:
        counts = allocate_counts(kernel.mu, n)
        types = np.repeat(np.arange(kernel.r, dtype=np.int64), counts)
        rng.shuffle(types)
    return TypedVertexSet(n=n, types=types, counts=counts)


def positional_vertices(positions: np.ndarray, cells: np.ndarray, r: int) -> TypedVertexSet:
    """Vértices com posição no círculo; o tipo é a célula da partição que contém a posição."""
    cells = np.asarray(cells, dtype=np.int64)
    if cells.size < 2:
        raise GraphError(f"n deve ser >= 2 (recebido {cells.size})")
    return TypedVertexSet(n=int(cells.size), types=cells, counts=np.bincount(cells, minlength=r),
                          positions=np.asarray(positions, dtype=float))


def _pairwise_edges(kappa: np.ndarray, vs: TypedVertexSet, rng: np.random.Generator):
    n = vs.n
    us, vs_ = [], []
    for i in range(n - 1):
        row = kappa[vs.types[i], vs.types[i + 1:]]
        p = np.minimum(row / n, 1.0)
        hit = np.flatnonzero(rng.random(n - i - 1) < p)
        if hit.size:
            us.append(np.full(hit.size, i, dtype=np.int64))
            vs_.append(hit + i + 1)
    if not us:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(us), np.concatenate(vs_)


def _geometric_positions(total: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Índices (em [0, total)) dos sucessos de ``total`` Bernoulli(p), via saltos geométricos."""
    if total <= 0 or p <= 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(total, dtype=np.int64)
    chunks = []
    last = -1
    while True:
        batch = max(GEOMETRIC_BATCH, int(1.2 * p * (total - last)))
        pos = last + np.cumsum(rng.geometric(p, size=batch))
        inside = pos[pos < total]
        chunks.append(inside)
        if inside.size < pos.size:
            break
        last = int(pos[-1])
    return np.concatenate(chunks)


def _triangular_decode(k: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    # k-ésimo par (a, b), a < b, em ordem lexicográfica sobre {0..size-1}
    k = k.astype(np.float64)
    a = size - 2 - np.floor(np.sqrt(-8.0 * k + 4.0 * size * (size - 1) - 7.0) / 2.0 - 0.5)
    a = a.astype(np.int64)
    b = (k + a + 1 - size * (size - 1) // 2 + (size - a) * ((size - a) - 1) // 2).astype(np.int64)
    return a, b


def _blocked_edges(kappa: np.ndarray, vs: TypedVertexSet, rng: np.random.Generator):
    n = vs.n
    members = [vs.members(t) for t in range(vs.r)]
    us, vs_ = [], []
    for s in range(vs.r):
        for t in range(s, vs.r):
            p = min(kappa[s, t] / n, 1.0)
            ns, nt = members[s].size, members[t].size
            if s == t:
                total = ns * (ns - 1) // 2
                pos = _geometric_positions(total, p, rng)
                a, b = _triangular_decode(pos, ns)
                us.append(members[s][a])
                vs_.append(members[s][b])
            else:
                pos = _geometric_positions(ns * nt, p, rng)
                us.append(members[s][pos // nt])
                vs_.append(members[t][pos % nt])
    return np.concatenate(us), np.concatenate(vs_)


def sample_graph(kernel: FiniteKernel, vs: TypedVertexSet, seed: SeedLike = None) -> WeightedGraph:
    if vs.r != kernel.r:
        raise GraphError(f"vértices com {vs.r} tipos, kernel com {kernel.r}")
    rng = as_generator(seed)
    if vs.n <= PAIRWISE_LIMIT:
        u, v = _pairwise_edges(kernel.kappa, vs, rng)
    else:
        u, v = _blocked_edges(kernel.kappa, vs, rng)
    w = exp_weights(rng, u.size)
    g = build_graph(vs, u, v, w)
    logger.debug(f"G(n={vs.n}) amostrado com {g.edge_count} arestas")
    return g


KernelRow = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CoupledGraphs:
    first: WeightedGraph
    second: WeightedGraph
    mismatches: int


def sample_coupled_graphs(vs: TypedVertexSet, kappa_first: KernelRow, kappa_second: KernelRow,
                          seed: SeedLike = None) -> CoupledGraphs:
    """
    Dois grafos sobre os mesmos vértices com um uniforme compartilhado por par
    e o mesmo peso nas arestas presentes em ambos. ``kappa_*(i, js)`` devolve
    os valores do kernel entre i e os vértices js.
    """
    rng = as_generator(seed)
    n = vs.n
    first_u, first_v, second_u, second_v = [], [], [], []
    mismatches = 0
    for i in range(n - 1):
        js = np.arange(i + 1, n)
        uniform = rng.random(js.size)
        in_first = uniform < np.minimum(kappa_first(i, js) / n, 1.0)
        in_second = uniform < np.minimum(kappa_second(i, js) / n, 1.0)
        mismatches += int(np.count_nonzero(in_first != in_second))
        first_u.append(np.full(np.count_nonzero(in_first), i, dtype=np.int64))
        first_v.append(js[in_first])
        second_u.append(np.full(np.count_nonzero(in_second), i, dtype=np.int64))
        second_v.append(js[in_second])

    fu, fv = np.concatenate(first_u), np.concatenate(first_v)
    su, sv = np.concatenate(second_u), np.concatenate(second_v)
    # um peso por par da união, indexado pelo número do par
    def pair_id(a, b):
        return a * n + b

    union = np.union1d(pair_id(fu, fv), pair_id(su, sv))
    union_w = exp_weights(rng, union.size)
    fw = union_w[np.searchsorted(union, pair_id(fu, fv))]
    sw = union_w[np.searchsorted(union, pair_id(su, sv))]
    return CoupledGraphs(first=build_graph(vs, fu, fv, fw), second=build_graph(vs, su, sv, sw), mismatches=mismatches)


def expected_edge_count(kernel: FiniteKernel, n: int) -> float:
    """n * (1/2) * sum_{s,t} kappa(s,t) mu_s mu_t, ignorando o corte em 1."""
    return 0.5 * n * float(kernel.mu @ kernel.kappa @ kernel.mu)

