# services/experiment_runner/src/experiments/embedding.py
"""Receitas do CTLBP rotulado: embedding exato no grafo e limites da poda."""
import logging
import math
from dataclasses import dataclass

import numpy as np

from common.branching.labeled import (
    embedding_equivalence,
    multiple_label_count,
    run_labeled_bp,
    thinned_alive_fraction,
)
from common.exceptions import ProcessExtinctError
from common.kernel.finite import FiniteKernel, stationary_type_vector
from common.utils.seeding import as_generator, child_seed
from services.experiment_runner.src.experiments.base import (
    BatchCollector,
    CriteriaBook,
    ExperimentReport,
    RunContext,
    column,
    finite,
    require_supercritical,
)
from services.experiment_runner.src.runner import ReplicationOutput, run_replications

logger = logging.getLogger("experiment-runner")

MAX_TREE_ATTEMPTS = 100


@dataclass(frozen=True)
class EmbeddingContext:
    kernel: FiniteKernel
    n: int


def embedding_replication(ctx: EmbeddingContext, index: int, seed) -> ReplicationOutput:
    report = embedding_equivalence(ctx.kernel, ctx.n, seed)
    return ReplicationOutput(rows=[dict(run_id=index, n=ctx.n, root=report.root, compared=report.compared,
                                        mismatches=report.mismatches, order_matches=report.order_matches)])


def run_embedding(ctx: RunContext) -> ExperimentReport:
    config = ctx.config
    collector = BatchCollector()
    book = CriteriaBook(config)
    stats = {}
    for n in config.n_values:
        collector.add(run_replications(embedding_replication, EmbeddingContext(ctx.kernel.kernel, n),
                                       config.replications, config.master_seed, config.experiment, ctx.workers,
                                       seed_key=f"{config.label}:n={n}"))
        stats[f"mean_compared[n={n}]"] = float(column(collector.rows, "compared", n=n).mean())

    rows = collector.rows
    book.check("vertex_mismatches", float(column(rows, "mismatches").sum()), 0.0, "==")
    book.check("order_mismatches", float(np.count_nonzero(column(rows, "order_matches") == 0)), 0.0, "==")
    return collector.report(["run_id", "n", "root", "compared", "mismatches", "order_matches"], stats, book)


@dataclass(frozen=True)
class ThinningContext:
    kernel: FiniteKernel
    n: int
    k_values: tuple[int, ...]


def thinning_replication(ctx: ThinningContext, index: int, seed) -> ReplicationOutput:
    k_max = max(ctx.k_values)
    # condiciona em alcançar k_max splits
    for attempt in range(MAX_TREE_ATTEMPTS):
        root = int(as_generator(child_seed(seed, 0, attempt)).integers(ctx.n))
        tree = run_labeled_bp(ctx.kernel, ctx.n, root, k_max, child_seed(seed, 1, attempt))
        if tree.k >= k_max:
            break
    else:
        raise ProcessExtinctError(f"CTLBP não alcançou {k_max} splits", attempts=MAX_TREE_ATTEMPTS)

    rows = []
    for k in ctx.k_values:
        for t in range(ctx.kernel.r):
            distinct, alive = multiple_label_count(tree, k, t)
            rows.append(dict(
                run_id=index, n=ctx.n, k=k, ptype=t, attempts=attempt + 1,
                thinned_fraction=thinned_alive_fraction(tree, k, t),
                distinct=distinct, alive=alive,
                relative_deficit=(alive - distinct) / alive if alive else None,
            ))
    return ReplicationOutput(rows=rows)


def bound_steps(k: int) -> int:
    return max(k - 1, 1)


def run_thinning_bounds(ctx: RunContext) -> ExperimentReport:
    config = ctx.config
    require_supercritical(ctx.kernel)
    m = ctx.kernel.m
    lt = m.lambda_tilde
    mu = ctx.kernel.kernel.mu
    pi = stationary_type_vector(m).pi
    collector = BatchCollector()
    book = CriteriaBook(config)
    stats = {"lambda_tilde": lt}
    many = len(config.n_values) > 1

    for n in config.n_values:
        k_thin = int(config.param("k_thinned", math.ceil(math.sqrt(n))))
        k_deficit = int(config.param("k_deficit", min(4 * k_thin, n)))
        context = ThinningContext(ctx.kernel.kernel, n, tuple(sorted({k_thin, k_deficit})))
        collector.add(run_replications(thinning_replication, context, config.replications, config.master_seed,
                                       config.experiment, ctx.workers, seed_key=f"{config.label}:n={n}"))
        tag = f"[n={n}]" if many else ""

        fraction = finite(column(collector.rows, "thinned_fraction", n=n, k=k_thin))
        # o split da raiz conta como split 1: após k splits houve k - 1 passos depois da raiz
        bound = (lt + 1.0) / lt * bound_steps(k_thin) / n
        stats[f"thinned_fraction_mean{tag}"] = float(fraction.mean())
        stats[f"thinned_fraction_bound{tag}"] = bound
        book.check(f"thinned_fraction{tag}", float(fraction.mean()), bound * config.threshold("thinned_slack", 1.2),
                   detail=f"k={k_thin}", key="thinned_fraction")

        factor = config.threshold("deficit_factor", 1.5)
        for t in range(ctx.kernel.kernel.r):
            deficit = finite(column(collector.rows, "relative_deficit", n=n, k=k_deficit, ptype=t))
            predicted = lt * pi[t] / (2.0 * mu[t]) * bound_steps(k_deficit) / n
            ratio = float(deficit.mean()) / predicted
            stats[f"relative_deficit_mean[type={t}]{tag}"] = float(deficit.mean())
            stats[f"relative_deficit_predicted[type={t}]{tag}"] = predicted
            book.check(f"deficit_ratio_upper[type={t}]{tag}", ratio, factor, detail=f"k={k_deficit}",
                       key="deficit_ratio_upper")
            book.check(f"deficit_ratio_lower[type={t}]{tag}", ratio, 1.0 / factor, ">=", detail=f"k={k_deficit}",
                       key="deficit_ratio_lower")
    return collector.report(["run_id", "n", "k", "ptype", "attempts", "thinned_fraction", "distinct", "alive",
                             "relative_deficit"], stats, book)
