# services/experiment_runner/src/experiments/step_kernel.py
"""
Acoplamento entre G(n, kappa) com o kernel exato do toro e G(n, kappa_m) com
a aproximação em degraus: um uniforme por par, as arestas só diferem onde
o uniforme cai entre kappa/n e kappa_m/n.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from common.exceptions import ConfigurationError
from common.graph.components import components, sample_connected_pair
from common.graph.generator import WeightedGraph, positional_vertices, sample_coupled_graphs
from common.graph.shortest_path import shortest_weight_path
from common.kernel.spec import TorusKernelSpec
from common.kernel.torus import TorusStepKernel, build_torus_step_kernel
from common.stats.goodness import ks_two_sample, mean_with_se
from common.utils.seeding import child_seed
from services.experiment_runner.src.experiments.base import (
    BatchCollector,
    CriteriaBook,
    ExperimentReport,
    RunContext,
    column,
    finite,
)
from services.experiment_runner.src.runner import ReplicationOutput, run_replications

logger = logging.getLogger("experiment-runner")

STEP_COLUMNS = ["run_id", "n", "m_parts", "epsilon", "bound", "mismatches", "edges_exact", "edges_step",
                "Hn_exact", "Hn_step"]
EPSILON_ROW_BLOCK = 256


@lru_cache(maxsize=16)
def _step_kernel(spec_json: str, m_parts: int) -> TorusStepKernel:
    # o perfil guarda funções locais: cada processo reconstrói a partir do JSON
    spec = TorusKernelSpec.model_validate_json(spec_json)
    step, _, _ = build_torus_step_kernel(spec.build_profile(), spec.scale, m_parts,
                                         quad_points=spec.quad_points, method=spec.method)
    return step


def vertex_positions(n: int) -> np.ndarray:
    """Posições determinísticas (v + 1/2) / n."""
    return (np.arange(n) + 0.5) / n


def measured_epsilon(step: TorusStepKernel, positions: np.ndarray) -> float:
    """max |kappa(x_i, x_j) - kappa_m(x_i, x_j)| sobre os pares de vértices i != j."""
    cells = step.cell_of(positions)
    worst = 0.0
    for start in range(0, positions.size, EPSILON_ROW_BLOCK):
        rows = slice(start, start + EPSILON_ROW_BLOCK)
        diff = np.abs(step.exact(positions[rows, np.newaxis], positions[np.newaxis, :])
                      - step.averaged[cells[rows, np.newaxis], cells[np.newaxis, :]])
        idx = np.arange(start, min(start + EPSILON_ROW_BLOCK, positions.size))
        diff[idx - start, idx] = 0.0
        worst = max(worst, float(diff.max()))
    return worst


def _hopcount(g: WeightedGraph, seed) -> int | None:
    labeling = components(g)
    if labeling.giant_size < 2:
        return None
    pair = sample_connected_pair(g, seed, labeling)
    return shortest_weight_path(g, pair.x, pair.y).hops


@dataclass(frozen=True)
class StepContext:
    spec_json: str
    n: int
    m_parts: int
    epsilon: float
    hopcount: bool


def step_replication(ctx: StepContext, index: int, seed) -> ReplicationOutput:
    step = _step_kernel(ctx.spec_json, ctx.m_parts)
    positions = vertex_positions(ctx.n)
    cells = step.cell_of(positions)
    vs = positional_vertices(positions, cells, ctx.m_parts)

    def exact_row(i, js):
        return step.exact(positions[i], positions[js])

    def step_row(i, js):
        return step.averaged[cells[i], cells[js]]

    coupled = sample_coupled_graphs(vs, exact_row, step_row, child_seed(seed, 0))
    row = dict(run_id=index, n=ctx.n, m_parts=ctx.m_parts, epsilon=ctx.epsilon, bound=ctx.n * ctx.epsilon,
               mismatches=coupled.mismatches, edges_exact=coupled.first.edge_count,
               edges_step=coupled.second.edge_count, Hn_exact=None, Hn_step=None)
    if ctx.hopcount:
        row.update(Hn_exact=_hopcount(coupled.first, child_seed(seed, 1)),
                   Hn_step=_hopcount(coupled.second, child_seed(seed, 1)))
    return ReplicationOutput(rows=[row])


def run_step_kernel_convergence(ctx: RunContext) -> ExperimentReport:
    config = ctx.config
    spec = config.kernel_spec()
    if not isinstance(spec, TorusKernelSpec):
        raise ConfigurationError("step_kernel_convergence exige um kernel torus_step")
    spec_json = spec.model_dump_json()
    m_values = sorted(int(m) for m in config.param("m_parts", [spec.m_parts]))
    hopcount = bool(config.param("hopcount", True))
    collector = BatchCollector()
    book = CriteriaBook(config)
    stats, ecdfs = {}, {}

    for n in config.n_values:
        means = []
        for m_parts in m_values:
            epsilon = measured_epsilon(_step_kernel(spec_json, m_parts), vertex_positions(n))
            context = StepContext(spec_json, n, m_parts, epsilon, hopcount)
            collector.add(run_replications(step_replication, context, config.replications, config.master_seed,
                                           config.experiment, ctx.workers,
                                           seed_key=f"{config.label}:n={n}:m={m_parts}"))
            tag = f"[n={n},m={m_parts}]"
            mismatches = column(collector.rows, "mismatches", n=n, m_parts=m_parts)
            estimate = mean_with_se(mismatches) if mismatches.size > 1 else None
            mean = float(mismatches.mean())
            se = estimate.se if estimate else 0.0
            means.append((mean, se))
            stats[f"epsilon{tag}"] = epsilon
            stats[f"mismatch_mean{tag}"] = mean
            book.check(f"mismatch_bound{tag}", mean, n * epsilon + 3.0 * se, key="mismatch_bound")

            if hopcount:
                h_exact = finite(column(collector.rows, "Hn_exact", n=n, m_parts=m_parts))
                h_step = finite(column(collector.rows, "Hn_step", n=n, m_parts=m_parts))
                stats[f"hopcount_mean_exact{tag}"] = float(h_exact.mean()) if h_exact.size else None
                stats[f"hopcount_mean_step{tag}"] = float(h_step.mean()) if h_step.size else None
                if h_exact.size and h_step.size:
                    stats[f"hopcount_drift_ks{tag}"] = ks_two_sample(h_exact, h_step)
                ecdfs[f"hopcount_step{tag}"] = h_step

        if config.param("expect_monotone", len(m_values) > 1):
            # aumento só conta se passar do ruído das duas médias
            excess = max((b - a - 3.0 * np.hypot(sa, sb) for (a, sa), (b, sb) in zip(means, means[1:])),
                         default=0.0)
            book.check(f"mismatch_monotone[n={n}]", excess, 0.0, key="mismatch_monotone")
    return collector.report(STEP_COLUMNS, stats, book, ecdfs)
