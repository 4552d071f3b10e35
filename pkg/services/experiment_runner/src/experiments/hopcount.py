# services/experiment_runner/src/experiments/hopcount.py
"""Regime esparso: CLT da contagem de saltos e limite do peso (rota do grafo x rota do BP)."""
import logging
import math
from dataclasses import dataclass

import numpy as np

from common.branching.ctbp import estimate_w, run_until_survival
from common.branching.offspring import poisson_law
from common.branching.twoflow import run_two_flow
from common.exceptions import ConfigurationError
from common.graph.components import components, sample_connected_pair
from common.graph.generator import sample_graph, sample_vertices
from common.graph.shortest_path import shortest_weight_path, unweighted_distances
from common.kernel.finite import FiniteKernel, mean_offspring, scale_kernel, survival_probability
from common.stats.distributions import cdf_normal, sample_gumbel
from common.stats.goodness import ks_statistic, ks_two_sample
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

HOPCOUNT_COLUMNS = ["run_id", "n", "x", "y", "attempts", "giant_fraction", "Pn", "Hn", "Hn_unweighted",
                    "bp_Pn", "bp_Hn"]
WEIGHT_COLUMNS = ["run_id", "n", "lambda_n", "Pn", "Hn", "centered", "wx_hat", "wy_hat", "gumbel", "composite"]
DEFAULT_W_SPLITS = 2_000


def sample_connected_path(kernel: FiniteKernel, n: int, seed):
    """G(n, kappa), par conectado uniforme e o caminho de peso mínimo entre eles."""
    vs = sample_vertices(kernel, n, child_seed(seed, 0))
    g = sample_graph(kernel, vs, child_seed(seed, 1))
    labeling = components(g)
    pair = sample_connected_pair(g, child_seed(seed, 2), labeling)
    return vs, g, labeling, pair, shortest_weight_path(g, pair.x, pair.y)


@dataclass(frozen=True)
class HopcountContext:
    kernel: FiniteKernel
    n: int
    a_n: int
    i_max: int
    bp_route: bool


def hopcount_replication(ctx: HopcountContext, index: int, seed) -> ReplicationOutput:
    vs, g, labeling, pair, path = sample_connected_path(ctx.kernel, ctx.n, seed)
    row = dict(run_id=index, n=ctx.n, x=pair.x, y=pair.y, attempts=pair.attempts,
               giant_fraction=labeling.giant_fraction, Pn=path.weight, Hn=path.hops,
               Hn_unweighted=int(unweighted_distances(g, pair.x)[pair.y]))
    if ctx.bp_route:
        result = run_two_flow(ctx.kernel, ctx.n, ctx.a_n, ctx.i_max, child_seed(seed, 3), vertices=vs)
        row.update(bp_Pn=result.P_n, bp_Hn=result.H_n)
    return ReplicationOutput(rows=[row])


def standardize_hopcount(h: np.ndarray, n: int, lambda_tilde: float, centering: float | None = None) -> np.ndarray:
    c = (lambda_tilde + 1.0) / lambda_tilde
    center = c * math.log(n) if centering is None else centering
    return (h - center) / math.sqrt(c * math.log(n))


def run_hopcount_clt(ctx: RunContext) -> ExperimentReport:
    config = ctx.config
    require_supercritical(ctx.kernel)
    lt = ctx.kernel.m.lambda_tilde
    bp_route = bool(config.param("bp_route", True))
    i_max = int(config.param("i_max", 10))
    collector = BatchCollector()
    book = CriteriaBook(config)
    stats, ecdfs = {"lambda_tilde": lt, "rho": survival_probability(lt)}, {}
    many = len(config.n_values) > 1

    for n in config.n_values:
        context = HopcountContext(ctx.kernel.kernel, n, config.freeze_for(n), i_max, bp_route)
        collector.add(run_replications(hopcount_replication, context, config.replications, config.master_seed,
                                       config.experiment, ctx.workers, seed_key=f"{config.label}:n={n}"))
        tag = f"[n={n}]" if many else ""
        rows = collector.rows
        h = column(rows, "Hn", n=n)
        z = standardize_hopcount(h, n, lt)
        wrong = standardize_hopcount(h, n, lt, centering=math.log(n))
        stats[f"hopcount_mean{tag}"] = float(h.mean())
        stats[f"hopcount_center{tag}"] = (lt + 1.0) / lt * math.log(n)
        stats[f"unweighted_hopcount_mean{tag}"] = float(column(rows, "Hn_unweighted", n=n).mean())
        stats[f"giant_fraction_mean{tag}"] = float(column(rows, "giant_fraction", n=n).mean())
        stats[f"pair_acceptance{tag}"] = float(1.0 / column(rows, "attempts", n=n).mean())
        ecdfs[f"hopcount_standardized{tag}"] = z

        book.check(f"hopcount_ks{tag}", ks_statistic(z, cdf_normal), 0.06, key="hopcount_ks")
        book.check(f"miscentered_ks{tag}", ks_statistic(wrong, cdf_normal), 0.15, ">", key="miscentered_ks")
        book.check(f"weighted_minus_unweighted_hops{tag}",
                   stats[f"hopcount_mean{tag}"] - stats[f"unweighted_hopcount_mean{tag}"], 0.0, ">",
                   key="weighted_minus_unweighted_hops")
        if bp_route:
            bp_h = finite(column(rows, "bp_Hn", n=n))
            bp_p = finite(column(rows, "bp_Pn", n=n))
            p = column(rows, "Pn", n=n)
            ecdfs[f"bp_hopcount_standardized{tag}"] = standardize_hopcount(bp_h, n, lt)
            book.check(f"bp_route_hopcount_ks{tag}", ks_two_sample(h, bp_h), 0.08, key="bp_route_ks")
            book.check(f"bp_route_weight_ks{tag}", ks_two_sample(p, bp_p), 0.08, key="bp_route_ks")
    return collector.report(HOPCOUNT_COLUMNS, stats, book, ecdfs)


@dataclass(frozen=True)
class WeightContext:
    kernel: FiniteKernel
    n: int
    lambda_n: float
    w_splits: int


def composite_weight(wx: float, wy: float, gumbel: float, lambda_tilde: float) -> float:
    """-(1/l) log(wx wy) - X/l + (1/l) log(l (l + 1))."""
    lt = lambda_tilde
    return (-math.log(wx * wy) - gumbel + math.log(lt * (lt + 1.0))) / lt


def weight_replication(ctx: WeightContext, index: int, seed) -> ReplicationOutput:
    vs, _, _, pair, path = sample_connected_path(ctx.kernel, ctx.n, seed)
    law = poisson_law(mean_offspring(ctx.kernel))
    # W independentes, com a raiz do tipo de cada extremidade
    state_x, _ = run_until_survival(law, int(vs.types[pair.x]), ctx.w_splits, child_seed(seed, 4))
    state_y, _ = run_until_survival(law, int(vs.types[pair.y]), ctx.w_splits, child_seed(seed, 5))
    wx, wy = estimate_w(state_x).w_hat, estimate_w(state_y).w_hat
    gumbel = float(sample_gumbel(as_generator(child_seed(seed, 6)), None))
    return ReplicationOutput(rows=[dict(
        run_id=index, n=ctx.n, lambda_n=ctx.lambda_n, Pn=path.weight, Hn=path.hops,
        centered=path.weight - math.log(ctx.n) / ctx.lambda_n,
        wx_hat=wx, wy_hat=wy, gumbel=gumbel, composite=composite_weight(wx, wy, gumbel, ctx.lambda_n),
    )])


def lambda_sequence(rule: str, lambda_tilde: float, n: int) -> float:
    if rule == "fixed":
        return lambda_tilde
    if rule == "drifting":
        return lambda_tilde + 1.0 / math.log(n)
    raise ConfigurationError(f"lambda_rule desconhecida: {rule}")


def run_weight_limit(ctx: RunContext) -> ExperimentReport:
    config = ctx.config
    require_supercritical(ctx.kernel)
    lt = ctx.kernel.m.lambda_tilde
    rule = config.param("lambda_rule", "fixed")
    w_splits = int(config.param("w_splits", DEFAULT_W_SPLITS))
    collector = BatchCollector()
    book = CriteriaBook(config)
    stats, ecdfs = {"lambda_tilde": lt}, {}
    many = len(config.n_values) > 1
    means = []

    for n in config.n_values:
        lambda_n = lambda_sequence(rule, lt, n)
        kernel, _ = scale_kernel(ctx.kernel.kernel, lambda_n)
        context = WeightContext(kernel, n, lambda_n, w_splits)
        collector.add(run_replications(weight_replication, context, config.replications, config.master_seed,
                                       config.experiment, ctx.workers, seed_key=f"{config.label}:n={n}"))
        tag = f"[n={n}]" if many else ""
        centered = column(collector.rows, "centered", n=n)
        composite = column(collector.rows, "composite", n=n)
        means.append(float(centered.mean()))
        stats[f"lambda_n{tag}"] = lambda_n
        stats[f"centered_mean{tag}"] = means[-1]
        stats[f"composite_mean{tag}"] = float(composite.mean())
        ecdfs[f"weight_centered{tag}"] = centered
        ecdfs[f"weight_composite{tag}"] = composite
        book.check(f"composite_ks{tag}", ks_two_sample(centered, composite), 0.08, key="composite_ks")

    for (n_a, m_a), (n_b, m_b) in zip(zip(config.n_values, means), zip(config.n_values[1:], means[1:])):
        book.check(f"location_shift[n={n_a}->{n_b}]", abs(m_b - m_a), 0.1, key="location_shift")
    return collector.report(WEIGHT_COLUMNS, stats, book, ecdfs)
