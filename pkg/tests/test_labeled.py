# tests/test_labeled.py
import numpy as np
import pytest

from common.branching.labeled import (
    LabeledFlow,
    block_vertices,
    compare_embedding,
    embedding_equivalence,
    multiple_label_count,
    run_graph_driven,
    run_labeled_bp,
    thinned_alive_fraction,
)
from common.exceptions import ConfigurationError, GraphError
from common.graph.generator import TypedVertexSet, build_graph, sample_graph, sample_vertices
from common.graph.shortest_path import sssp_tree
from common.utils.seeding import child_seed

# --- CONFIGURAÇÕES ---
SEED = 7031


# --- HELPERS ---

def grown_tree(kernel, n, m_max, seed=SEED):
    """Primeira árvore (variando a semente) que alcança m_max splits."""
    for attempt in range(50):
        tree = run_labeled_bp(kernel, n, 0, m_max, child_seed(seed, attempt))
        if tree.k == m_max:
            return tree
    pytest.fail(f"nenhuma árvore alcançou {m_max} splits")


# --- TESTES DE ESTRUTURA ---

def test_block_vertices_are_contiguous(two_type_kernel):
    vs = block_vertices(two_type_kernel, 7)
    assert vs.types.tolist() == [0, 0, 0, 0, 1, 1, 1]


def test_single_vertex_exhausts_immediately(er_kernel):
    """CENÁRIO: n = 1, a raiz splita e não há rótulo para filhos."""
    tree = run_labeled_bp(er_kernel, 1, 0, 1, SEED)
    assert tree.k == 1
    assert tree.exhausted
    assert tree.dead_labels.tolist() == [0]
    assert tree.tau.tolist() == [0.0, 0.0]


def test_m_max_above_n_is_rejected(er_kernel):
    with pytest.raises(ConfigurationError):
        run_labeled_bp(er_kernel, 10, 0, 11, SEED)


def test_root_cannot_be_forbidden(er_kernel):
    with pytest.raises(ConfigurationError):
        LabeledFlow(er_kernel, block_vertices(er_kernel, 10), 3, SEED, forbidden_labels={3})
    with pytest.raises(GraphError):
        LabeledFlow(er_kernel, block_vertices(er_kernel, 10), 10, SEED)


def test_dead_labels_are_distinct_and_typed(two_type_kernel):
    tree = grown_tree(two_type_kernel, 600, 200)
    assert np.unique(tree.dead_labels).size == tree.k
    vs = block_vertices(two_type_kernel, 600)
    assert np.array_equal(vs.types[tree.label], tree.ptype)
    assert np.all(np.diff(tree.tau) >= 0)


def test_children_never_reuse_parent_label(er_kernel):
    tree = grown_tree(er_kernel, 500, 150)
    children = np.flatnonzero(tree.parent >= 0)
    assert np.all(tree.label[children] != tree.label[tree.parent[children]])


def test_thinned_particles_ring_after_their_label_died(er_kernel):
    """CENÁRIO: uma partícula podada só sai quando o rótulo dela já morreu."""
    tree = grown_tree(er_kernel, 300, 250)
    label_split = tree.label_split()
    thinned = np.flatnonzero(tree.thinned)
    assert np.all(label_split[tree.label[thinned]] < tree.death[thinned])
    # nenhuma partícula podada splitou
    assert not np.any(np.isin(tree.split_particles, thinned))


def test_prefix_does_not_depend_on_horizon(er_kernel):
    short = run_labeled_bp(er_kernel, 400, 0, 50, SEED)
    long = run_labeled_bp(er_kernel, 400, 0, 100, SEED)
    k = short.k
    assert np.array_equal(short.dead_labels, long.dead_labels[:k])
    assert np.array_equal(short.tau, long.tau[:k + 1])


def test_forbidden_labels_never_appear(er_kernel):
    forbidden = set(range(1, 101))
    tree = run_labeled_bp(er_kernel, 500, 0, 200, SEED, forbidden_labels=forbidden)
    assert not set(tree.label.tolist()) & forbidden
    assert tree.forbidden_count == 100


def test_forbidden_labels_accept_numpy_arrays(er_kernel):
    """CENÁRIO: os mortos do fluxo x chegam como array numpy com vários elementos."""
    forbidden = np.arange(1, 101, dtype=np.int64)
    tree = run_labeled_bp(er_kernel, 500, 0, 200, SEED, forbidden_labels=forbidden)
    assert not np.isin(tree.label, forbidden).any()
    assert tree.forbidden_count == 100
    empty = run_labeled_bp(er_kernel, 500, 0, 20, SEED, forbidden_labels=np.array([], dtype=np.int64))
    assert empty.forbidden_count == 0


# --- TESTES DE PODA ---

def test_no_thinned_particles_after_root_split(er_kernel):
    tree = grown_tree(er_kernel, 200, 1)
    fraction = thinned_alive_fraction(tree, 1, 0)
    assert fraction in (0.0, None)
    distinct, alive = multiple_label_count(tree, 1, 0)
    assert distinct == alive


def test_multiple_labels_only_shrink_the_count(two_type_kernel):
    tree = grown_tree(two_type_kernel, 400, 300)
    for k in (1, 50, 150, 300):
        for t in range(2):
            distinct, alive = multiple_label_count(tree, k, t)
            assert 0 <= distinct <= alive
            fraction = thinned_alive_fraction(tree, k, t)
            assert fraction is None or 0.0 <= fraction <= 1.0


# --- TESTES DE EMBEDDING NO GRAFO ---

def test_embedding_equivalence_on_random_graphs(er_kernel, two_type_kernel):
    """CENÁRIO: a exploração podada no grafo realizado reproduz Dijkstra vértice a vértice."""
    for i in range(20):
        for kernel in (er_kernel, two_type_kernel):
            report = embedding_equivalence(kernel, 60, child_seed(SEED, i))
            assert report.passed, report


def test_embedding_on_two_vertices():
    vs = TypedVertexSet(n=2, types=np.zeros(2, dtype=np.int64), counts=np.array([2]))
    g = build_graph(vs, [0], [1], [0.7])
    report = compare_embedding(g, 0)
    assert report.passed and report.compared == 2
    isolated = build_graph(vs, [], [], [])
    assert compare_embedding(isolated, 1).compared == 1


def test_graph_driven_wetting_matches_dijkstra(er_kernel):
    vs = sample_vertices(er_kernel, 300, SEED)
    g = sample_graph(er_kernel, vs, SEED)
    tree = sssp_tree(g, 5)
    flow = run_graph_driven(g, 5)
    assert [label for label, _, _ in flow.wetting_sequence()] == tree.order.tolist()
    assert flow.exhausted
    truncated = run_graph_driven(g, 5, m_max=10)
    assert truncated.k == min(10, tree.order.size)
