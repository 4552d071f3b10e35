# tests/test_graph.py
import itertools
import math

import networkx as nx
import numpy as np
import pytest

from common.exceptions import GraphError
from common.graph.components import components, sample_connected_pair
from common.graph.dump import read_edge_list, write_edge_list
from common.graph.generator import (
    TypedVertexSet,
    _blocked_edges,
    _pairwise_edges,
    _triangular_decode,
    allocate_counts,
    build_graph,
    expected_edge_count,
    sample_coupled_graphs,
    sample_graph,
    sample_vertices,
)
from common.graph.shortest_path import (
    flooding_order,
    shortest_weight_path,
    sssp_tree,
    to_networkx,
    unweighted_distances,
)
from common.kernel.finite import build_finite_kernel, survival_probability
from common.stats.distributions import cdf_exp
from common.stats.goodness import ks_critical_value, ks_statistic
from common.utils.seeding import as_generator, child_seed

# --- CONFIGURAÇÕES ---
SEED = 20240611


# --- HELPERS ---

def single_type_vertices(n: int) -> TypedVertexSet:
    types = np.zeros(n, dtype=np.int64)
    return TypedVertexSet(n=n, types=types, counts=np.array([n]))


def path_graph(weights):
    """Caminho 0 - 1 - ... - k com os pesos dados."""
    n = len(weights) + 1
    u = np.arange(n - 1)
    return build_graph(single_type_vertices(n), u, u + 1, np.asarray(weights, dtype=float))


@pytest.fixture
def er_graph(er_kernel):
    vs = sample_vertices(er_kernel, 400, SEED)
    return sample_graph(er_kernel, vs, SEED + 1)


# --- TESTES DE VÉRTICES ---

def test_largest_remainder_counts():
    """CENÁRIO: empate de restos vai para o menor tipo."""
    assert allocate_counts(np.array([0.5, 0.5]), 5).tolist() == [3, 2]
    assert allocate_counts(np.array([0.2, 0.3, 0.5]), 10).tolist() == [2, 3, 5]
    assert allocate_counts(np.array([1 / 3, 1 / 3, 1 / 3]), 7).sum() == 7
    assert allocate_counts(np.array([1 / 3, 2 / 3]), 100).tolist() == [33, 67]


def test_sample_vertices_matches_counts(two_type_kernel):
    vs = sample_vertices(two_type_kernel, 101, SEED)
    assert vs.counts.sum() == 101
    assert np.bincount(vs.types, minlength=2).tolist() == vs.counts.tolist()


def test_sample_vertices_rejects_tiny_n(er_kernel):
    with pytest.raises(GraphError):
        sample_vertices(er_kernel, 1)


# --- TESTES DO GERADOR ---

def test_sample_graph_is_reproducible(er_kernel):
    vs = sample_vertices(er_kernel, 300, SEED)
    a = sample_graph(er_kernel, vs, SEED)
    b = sample_graph(er_kernel, vs, SEED)
    assert a.edge_list() == b.edge_list()


def test_edge_count_close_to_expected(er_kernel):
    vs = sample_vertices(er_kernel, 2000, SEED)
    g = sample_graph(er_kernel, vs, SEED + 1)
    assert abs(g.edge_count - expected_edge_count(er_kernel, 2000)) < 250
    assert np.all(g.weights > 0)


def test_edge_weights_are_standard_exponential(er_kernel):
    vs = sample_vertices(er_kernel, 3000, SEED)
    g = sample_graph(er_kernel, vs, SEED + 2)
    assert ks_statistic(g.weights, cdf_exp) <= 1.5 * ks_critical_value(g.edge_count)


@pytest.mark.parametrize("sampler", ["pairwise", "blocked"])
def test_pair_inclusion_frequency(two_type_kernel, sampler):
    """CENÁRIO: cada par {i, j} entra com frequência kappa(tipo_i, tipo_j) / n em R grafos."""
    n, reps = 10, 3000
    vs = sample_vertices(two_type_kernel, n, SEED)
    draw = _pairwise_edges if sampler == "pairwise" else _blocked_edges
    hits = np.zeros((n, n))
    for i in range(reps):
        u, v = draw(two_type_kernel.kappa, vs, as_generator(child_seed(SEED, i)))
        hits[u, v] += 1
        hits[v, u] += 1
    p = np.minimum(two_type_kernel.kappa[vs.types[:, None], vs.types[None, :]] / n, 1.0)
    a, b = np.triu_indices(n, k=1)
    deviation = np.abs(hits[a, b] / reps - p[a, b]) / np.sqrt(p[a, b] * (1 - p[a, b]) / reps)
    assert deviation.max() <= 4.0
    # 45 pares: sob a lei binomial, poucos passam de 3 desvios
    assert np.count_nonzero(deviation > 3.0) <= 4


def test_probability_is_clamped_at_one():
    """CENÁRIO: kappa = 150 com n = 100 dá p = 1 e o grafo completo."""
    kernel, _ = build_finite_kernel([1.0], [[150.0]])
    vs = sample_vertices(kernel, 100, SEED)
    g = sample_graph(kernel, vs, SEED)
    assert g.edge_count == 100 * 99 // 2
    assert all(g.degree(v) == 99 for v in range(100))
    u, _ = _blocked_edges(kernel.kappa, vs, as_generator(SEED))
    assert u.size == 4950


def test_triangular_decode_enumerates_pairs():
    """CENÁRIO: o índice linear k percorre os pares a < b em ordem lexicográfica."""
    size = 9
    total = size * (size - 1) // 2
    a, b = _triangular_decode(np.arange(total), size)
    assert list(zip(a.tolist(), b.tolist())) == list(itertools.combinations(range(size), 2))


def test_blocked_sampler_matches_density(two_type_kernel):
    """CENÁRIO: o amostrador por blocos geométricos gera a densidade certa sem arestas repetidas."""
    vs = sample_vertices(two_type_kernel, 3000, SEED)
    u, v = _blocked_edges(two_type_kernel.kappa, vs, as_generator(SEED))
    g = build_graph(vs, u, v, np.ones(u.size))
    assert abs(g.edge_count - expected_edge_count(two_type_kernel, 3000)) < 300


def test_build_graph_rejects_loops_and_duplicates():
    vs = single_type_vertices(3)
    with pytest.raises(GraphError):
        build_graph(vs, [0, 1], [0, 2], [1.0, 1.0])
    with pytest.raises(GraphError):
        build_graph(vs, [0, 1], [1, 0], [1.0, 2.0])


def test_coupled_graphs_with_equal_kernels_coincide():
    vs = single_type_vertices(200)

    def row(i, js):
        return np.full(js.size, 3.0)

    coupled = sample_coupled_graphs(vs, row, row, SEED)
    assert coupled.mismatches == 0
    assert coupled.first.edge_list() == coupled.second.edge_list()


def test_coupled_graphs_share_weights_on_common_edges():
    vs = single_type_vertices(200)
    coupled = sample_coupled_graphs(vs, lambda i, js: np.full(js.size, 2.0),
                                    lambda i, js: np.full(js.size, 4.0), SEED)
    # o segundo kernel domina o primeiro: toda aresta do primeiro existe no segundo com o mesmo peso
    second = {(u, v): w for u, v, w in coupled.second.edge_list()}
    for u, v, w in coupled.first.edge_list():
        assert second[(u, v)] == w
    assert coupled.mismatches == coupled.second.edge_count - coupled.first.edge_count


# --- TESTES DE COMPONENTES ---

def test_components_match_networkx(er_graph):
    labeling = components(er_graph)
    expected = sorted((len(c) for c in nx.connected_components(to_networkx(er_graph))), reverse=True)
    assert sorted(labeling.sizes.tolist(), reverse=True) == expected
    assert labeling.labels[0] == 0


def test_connected_pair_is_in_one_component(er_graph):
    labeling = components(er_graph)
    for s in range(20):
        pair = sample_connected_pair(er_graph, SEED + s, labeling)
        assert pair.x != pair.y
        assert labeling.same_component(pair.x, pair.y)
        assert pair.attempts >= 1


def test_connected_pair_requires_an_edge():
    g = build_graph(single_type_vertices(5), [], [], [])
    with pytest.raises(GraphError):
        sample_connected_pair(g, SEED)


@pytest.fixture(scope="module")
def large_er_graph():
    kernel, _ = build_finite_kernel([1.0], [[2.0]])
    vs = sample_vertices(kernel, 30_000, SEED)
    return sample_graph(kernel, vs, SEED + 3)


def test_giant_fraction_matches_survival(large_er_graph):
    """CENÁRIO: ER com c = 2, a componente gigante ocupa rho(1) = 0.796812 dos vértices."""
    assert components(large_er_graph).giant_fraction == pytest.approx(survival_probability(1.0), abs=0.02)


def test_connected_pair_acceptance_is_rho_squared(large_er_graph):
    """CENÁRIO: um par uniforme cai na mesma componente com probabilidade ~ rho^2."""
    labeling = components(large_er_graph)
    attempts = sum(sample_connected_pair(large_er_graph, child_seed(SEED, i), labeling).attempts
                   for i in range(4000))
    assert 4000 / attempts == pytest.approx(survival_probability(1.0) ** 2, abs=0.03)


# --- TESTES DE CAMINHOS MÍNIMOS ---

def test_dijkstra_matches_networkx(er_graph):
    """CENÁRIO: distâncias e hopcounts batem com o networkx (oráculo)."""
    tree = sssp_tree(er_graph, 0)
    lengths, paths = nx.single_source_dijkstra(to_networkx(er_graph), 0)
    reachable = np.flatnonzero(tree.reachable())
    assert set(reachable.tolist()) == set(lengths)
    for v in reachable.tolist():
        assert tree.dist[v] == pytest.approx(lengths[v], abs=1e-9)
        assert tree.hops[v] == len(paths[v]) - 1


def test_shortest_path_is_consistent(er_graph):
    labeling = components(er_graph)
    pair = sample_connected_pair(er_graph, SEED, labeling)
    result = shortest_weight_path(er_graph, pair.x, pair.y)
    assert result.connected
    assert result.path[0] == pair.x and result.path[-1] == pair.y
    assert result.hops == len(result.path) - 1
    weights = {(u, v): w for u, v, w in er_graph.edge_list()}
    total = sum(weights[(min(a, b), max(a, b))] for a, b in zip(result.path, result.path[1:]))
    assert total == pytest.approx(result.weight)


def test_shortest_path_small_example():
    """CENÁRIO: o atalho de 2 arestas mais leve ganha da aresta direta."""
    vs = single_type_vertices(3)
    g = build_graph(vs, [0, 0, 1], [2, 1, 2], [5.0, 1.0, 1.5])
    result = shortest_weight_path(g, 0, 2)
    assert result.weight == pytest.approx(2.5)
    assert result.hops == 2
    assert result.path == (0, 1, 2)


def test_disconnected_pair_has_infinite_weight():
    g = build_graph(single_type_vertices(4), [0, 2], [1, 3], [1.0, 1.0])
    result = shortest_weight_path(g, 0, 3)
    assert math.isinf(result.weight) and math.isinf(result.hops)
    assert not result.connected
    assert unweighted_distances(g, 0).tolist() == [0, 1, -1, -1]


def test_same_vertex_is_rejected():
    with pytest.raises(GraphError):
        shortest_weight_path(path_graph([1.0]), 0, 0)


def test_flooding_order_on_a_path():
    g = path_graph([0.5, 0.25, 2.0])
    order = flooding_order(g, 0, 4)
    assert [v for v, _ in order] == [0, 1, 2, 3]
    assert [t for _, t in order] == pytest.approx([0.0, 0.5, 0.75, 2.75])
    with pytest.raises(GraphError):
        flooding_order(g, 0, 5)


def test_bfs_matches_networkx(er_graph):
    dist = unweighted_distances(er_graph, 0)
    expected = nx.single_source_shortest_path_length(to_networkx(er_graph), 0)
    for v in range(er_graph.n):
        assert dist[v] == expected.get(v, -1)


# --- TESTES DE DUMP ---

def test_edge_list_dump_preserves_graph(tmp_path, two_type_kernel):
    vs = sample_vertices(two_type_kernel, 120, SEED)
    g = sample_graph(two_type_kernel, vs, SEED)
    path = write_edge_list(g, tmp_path / "g.txt", seed=SEED)
    loaded, seed = read_edge_list(path)
    assert seed == SEED
    assert loaded.edge_list() == g.edge_list()
    assert loaded.vertices.types.tolist() == g.vertices.types.tolist()


def test_dump_without_header_is_rejected(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 1 0.5\n", encoding="utf-8")
    with pytest.raises(GraphError):
        read_edge_list(path)
