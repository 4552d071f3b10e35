# common/graph/dump.py
"""
Dump texto do grafo para testes de regressão:

    # n r seed
    # types t_0 t_1 ... t_{n-1}
    u v weight
"""
import logging
from pathlib import Path

import numpy as np

from common.exceptions import GraphError
from common.graph.generator import TypedVertexSet, WeightedGraph, build_graph

logger = logging.getLogger("fpp-graph")


def write_edge_list(g: WeightedGraph, path: str | Path, seed: int | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# {g.n} {g.vertices.r} {seed if seed is not None else -1}\n")
        fh.write("# types " + " ".join(str(t) for t in g.vertices.types.tolist()) + "\n")
        for u, v, w in g.edge_list():
            fh.write(f"{u} {v} {w!r}\n")
    logger.debug(f"Grafo salvo em {path} ({g.edge_count} arestas)")
    return path


def read_edge_list(path: str | Path) -> tuple[WeightedGraph, int | None]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise GraphError(f"{path}: cabeçalho '# n r seed' ausente")
    try:
        n, r, seed = (int(tok) for tok in lines[0][1:].split())
    except ValueError as e:
        raise GraphError(f"{path}: cabeçalho inválido: {lines[0]!r}") from e

    body = lines[1:]
    types = np.zeros(n, dtype=np.int64)
    if body and body[0].startswith("# types"):
        types = np.array([int(tok) for tok in body[0].split()[2:]], dtype=np.int64)
        body = body[1:]
    if types.size != n:
        raise GraphError(f"{path}: {types.size} tipos para n={n}")

    rows = [line.split() for line in body if line.strip() and not line.startswith("#")]
    u = np.array([int(row[0]) for row in rows], dtype=np.int64)
    v = np.array([int(row[1]) for row in rows], dtype=np.int64)
    w = np.array([float(row[2]) for row in rows], dtype=float)
    vs = TypedVertexSet(n=n, types=types, counts=np.bincount(types, minlength=r))
    return build_graph(vs, u, v, w), (seed if seed >= 0 else None)
