# common/graph/shortest_path.py
"""
Caminhos de peso mínimo exatos (Dijkstra com heap binário).

Chave do heap: (distância, saltos, vértice). Entre caminhos de mesmo peso
vence o de menos saltos e depois o de menor pai.
"""
import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass

import networkx as nx
import numpy as np

from common.exceptions import GraphError
from common.graph.generator import WeightedGraph

logger = logging.getLogger("fpp-graph")

UNREACHED = -1


@dataclass(frozen=True)
class PathResult:
    weight: float
    hops: float
    path: tuple[int, ...]

    @property
    def connected(self) -> bool:
        return math.isfinite(self.weight)


@dataclass(frozen=True)
class SsspTree:
    """Árvore de caminhos mínimos a partir de ``root``; ``order`` é a ordem de assentamento."""
    root: int
    dist: np.ndarray
    hops: np.ndarray
    parent: np.ndarray
    order: np.ndarray

    def reachable(self) -> np.ndarray:
        return np.isfinite(self.dist)

    def path_to(self, y: int) -> tuple[int, ...]:
        if not math.isfinite(self.dist[y]):
            return ()
        path = [y]
        while path[-1] != self.root:
            path.append(int(self.parent[path[-1]]))
        return tuple(reversed(path))


def _check_vertex(g: WeightedGraph, v: int):
    if not 0 <= v < g.n:
        raise GraphError(f"vértice inválido: {v} (n={g.n})")


def _dijkstra(g: WeightedGraph, x: int, target: int | None = None) -> SsspTree:
    n = g.n
    adjacency = g.adjacency_lists
    dist = [math.inf] * n
    hops = [math.inf] * n
    parent = [UNREACHED] * n
    settled = [False] * n
    order = []
    dist[x], hops[x] = 0.0, 0
    heap = [(0.0, 0, x)]
    while heap:
        d, h, u = heapq.heappop(heap)
        if settled[u]:
            continue
        settled[u] = True
        order.append(u)
        if u == target:
            break
        for v, w in adjacency[u]:
            if settled[v]:
                continue
            nd, nh = d + w, h + 1
            if nd < dist[v] or (nd == dist[v] and (nh < hops[v] or (nh == hops[v] and u < parent[v]))):
                dist[v], hops[v], parent[v] = nd, nh, u
                heapq.heappush(heap, (nd, nh, v))
    # vértices não assentados (parada antecipada) ficam como provisórios
    return SsspTree(
        root=x,
        dist=np.array(dist, dtype=float),
        hops=np.array(hops, dtype=float),
        parent=np.array(parent, dtype=np.int64),
        order=np.array(order, dtype=np.int64),
    )


def sssp_tree(g: WeightedGraph, x: int) -> SsspTree:
    _check_vertex(g, x)
    return _dijkstra(g, x)


def shortest_weight_path(g: WeightedGraph, x: int, y: int) -> PathResult:
    _check_vertex(g, x)
    _check_vertex(g, y)
    if x == y:
        raise GraphError("x e y devem ser distintos")
    tree = _dijkstra(g, x, target=y)
    if not tree.order.size or tree.order[-1] != y:
        return PathResult(weight=math.inf, hops=math.inf, path=())
    return PathResult(weight=float(tree.dist[y]), hops=int(tree.hops[y]), path=tree.path_to(y))


def flooding_order(g: WeightedGraph, x: int, k: int) -> list[tuple[int, float]]:
    """Os k primeiros vértices molhados a partir de x, com o tempo de chegada."""
    tree = sssp_tree(g, x)
    if tree.order.size < k:
        raise GraphError(f"componente de {x} tem {tree.order.size} vértices, menos que k={k}")
    return [(int(v), float(tree.dist[v])) for v in tree.order[:k]]


def unweighted_distances(g: WeightedGraph, x: int) -> np.ndarray:
    """Distância em arestas (BFS); -1 para vértices fora da componente de x."""
    _check_vertex(g, x)
    dist = np.full(g.n, UNREACHED, dtype=np.int64)
    dist[x] = 0
    queue = deque([x])
    adjacency = g.adjacency_lists
    while queue:
        u = queue.popleft()
        for v, _ in adjacency[u]:
            if dist[v] == UNREACHED:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def to_networkx(g: WeightedGraph) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from((v, {"type": int(t)}) for v, t in enumerate(g.vertices.types.tolist()))
    graph.add_weighted_edges_from(g.edge_list())
    return graph
