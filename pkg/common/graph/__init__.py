from common.graph.components import ComponentLabeling, ConnectedPair, UnionFind, components, sample_connected_pair
from common.graph.dump import read_edge_list, write_edge_list
from common.graph.generator import (
    TypedVertexSet,
    WeightedGraph,
    build_graph,
    positional_vertices,
    sample_coupled_graphs,
    sample_graph,
    sample_vertices,
)
from common.graph.shortest_path import (
    PathResult,
    SsspTree,
    flooding_order,
    shortest_weight_path,
    sssp_tree,
    to_networkx,
    unweighted_distances,
)
