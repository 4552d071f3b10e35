# services/experiment_runner/src/experiments/collisions.py
"""
Receitas das colisões entre os dois fluxos (collision_ppp) e do mínimo
indexado por um PPP (gumbel_min), com as identidades do regime denso.
"""
import logging
from dataclasses import dataclass

from common.branching.twoflow import (
    MIN_PPP_RUNS,
    argmin_tail_check,
    collision_label_uniformity,
    conditional_generation_correlation,
    freeze_point_invariance,
    geometric_dominance_check,
    gumbel_min_ks,
    gumbel_min_sampler,
    ppp_check,
    run_two_flow,
    thinned_collision_fraction,
)
from common.exceptions import InsufficientSampleError
from common.kernel.finite import FiniteKernel, collision_rate
from common.stats.distributions import EULER_GAMMA, GUMBEL_VARIANCE, gumbel_min_mean
from common.stats.goodness import ks_two_sample_critical_value, proportion_se
from common.stats.identities import gumbel_sum_moments, max_exp_identity_check
from common.utils.seeding import replication_seed
from services.experiment_runner.src.experiments.base import (
    BatchCollector,
    CriteriaBook,
    ExperimentReport,
    RunContext,
    column,
    require_supercritical,
)
from services.experiment_runner.src.runner import ReplicationOutput, run_replications

logger = logging.getLogger("experiment-runner")

COLLISION_COLUMNS = ["run_id", "n", "a_n", "tau_x", "C1", "C2", "C3", "Ccon", "argmin", "Pn", "Hn", "col_type",
                     "Gx", "Gy", "wx_hat", "wy_hat", "truncated", "attempts"]
GUMBEL_COLUMNS = ["run_id", "draw", "value", "argmin", "truncated_value"]
TAIL_GRID = tuple(range(1, 9))


@dataclass(frozen=True)
class CollisionContext:
    kernel: FiniteKernel
    n: int
    a_n: int
    i_max: int


def collision_replication(ctx: CollisionContext, index: int, seed) -> ReplicationOutput:
    result = run_two_flow(ctx.kernel, ctx.n, ctx.a_n, ctx.i_max, seed)
    chosen = result.chosen
    splits = [c.split for c in result.collisions]
    row = dict(
        run_id=index, n=ctx.n, a_n=ctx.a_n, tau_x=result.tau_x_an,
        C1=splits[0], C2=splits[1] if len(splits) > 1 else None, C3=splits[2] if len(splits) > 2 else None,
        Ccon=chosen.split, argmin=result.argmin_index, Pn=result.P_n, Hn=result.H_n, col_type=chosen.ptype,
        Gx=chosen.g_x, Gy=chosen.g_y, wx_hat=result.wx_hat, wy_hat=result.wy_hat,
        truncated=result.truncated, attempts=result.attempts,
    )
    return ReplicationOutput(rows=[row], payload=result)


def run_collision_ppp(ctx: RunContext) -> ExperimentReport:
    config = ctx.config
    require_supercritical(ctx.kernel, homogeneous=False)
    lt = ctx.kernel.m.lambda_tilde
    lambda_hat = collision_rate(ctx.kernel.kernel, ctx.kernel.m)
    i_max = int(config.param("i_max", 10))
    min_runs = int(config.param("min_runs", MIN_PPP_RUNS))
    collector = BatchCollector()
    book = CriteriaBook(config)
    stats, ecdfs = {"lambda_tilde": lt, "lambda_hat": lambda_hat}, {}
    many = len(config.n_values) > 1

    for n in config.n_values:
        a_n = config.freeze_for(n)
        context = CollisionContext(ctx.kernel.kernel, n, a_n, i_max)
        batch = collector.add(run_replications(collision_replication, context, config.replications,
                                               config.master_seed, config.experiment, ctx.workers,
                                               seed_key=f"{config.label}:n={n}"))
        results = batch.payloads
        tag = f"[n={n}]" if many else ""
        stats[f"a_n{tag}"] = a_n
        if not results:
            book.check(f"accepted_runs{tag}", 0.0, 1.0, ">=", key="accepted_runs")
            continue
        ecdfs[f"scaled_first_collision{tag}"] = column(batch.rows, "C1") * a_n / n
        stats[f"truncated_fraction{tag}"] = float(column(batch.rows, "truncated").mean())

        try:
            ppp = ppp_check(results, lambda_hat, min_runs=min_runs)
        except InsufficientSampleError as e:
            book.check(f"first_collision_ks{tag}", None, 0.05, detail=str(e), key="first_collision_ks")
        else:
            stats[f"rate_estimate{tag}"] = ppp.rate_estimate
            stats[f"gap_ks{tag}"] = ppp.gap_ks
            book.check(f"first_collision_ks{tag}", ppp.first_ks, 0.05, key="first_collision_ks")
            book.check(f"third_collision_ks{tag}", ppp.third_ks, 0.05, key="third_collision_ks")
            book.check(f"gap_correlation{tag}", None if ppp.gap_correlation is None else abs(ppp.gap_correlation),
                       0.05, key="gap_correlation")

        for gc in conditional_generation_correlation(results):
            book.check(f"generation_correlation[type={gc.ptype}]{tag}", abs(gc.correlation), 3.0 * gc.se,
                       key="generation_correlation")

        uniformity = collision_label_uniformity(results, replication_seed(
            config.master_seed, f"{config.label}:uniformity", n))
        stats[f"label_uniformity_ks{tag}"] = uniformity.ks
        book.check(f"label_uniformity_chi2{tag}", uniformity.chi_square, uniformity.critical,
                   key="label_uniformity_chi2")

        thinned = thinned_collision_fraction(results)
        stats[f"thinned_collision_bound{tag}"] = thinned.mean_bound
        book.check(f"thinned_collision_fraction{tag}", thinned.fraction,
                   thinned.mean_bound + 3.0 * proportion_se(thinned.mean_bound, thinned.count),
                   key="thinned_collision_fraction")

        dominance = geometric_dominance_check(results, replication_seed(
            config.master_seed, f"{config.label}:dominance", n))
        stats[f"dominance_mean_connection{tag}"] = dominance.mean_connection
        stats[f"dominance_mean_dominating{tag}"] = dominance.mean_dominating
        book.check(f"geometric_dominance_effect{tag}", dominance.effect, 0.5 + 3.0 * dominance.effect_se,
                   key="geometric_dominance_effect")

        for tail in argmin_tail_check(column(batch.rows, "argmin").astype(int), lt, TAIL_GRID):
            if tail.k >= i_max:
                continue
            book.check(f"argmin_tail[k={tail.k}]{tag}", tail.empirical, tail.bound + 3.0 * tail.se,
                       key="argmin_tail")

    freeze_reps = int(config.param("freeze_reps", 0))
    if freeze_reps:
        n = config.n_values[-1]
        invariance = freeze_point_invariance(ctx.kernel.kernel, n, freeze_reps,
                                             replication_seed(config.master_seed, f"{config.label}:freeze", n),
                                             tuple(config.param("freeze_exponents", (0.4, 0.5, 0.6))), i_max)
        for p, sample in invariance.samples.items():
            ecdfs[f"freeze_weight[p={p}]"] = sample
        smallest = min(sample.size for sample in invariance.samples.values())
        book.check("freeze_point_ks", invariance.max_ks,
                   ks_two_sample_critical_value(smallest, smallest) if smallest else 0.0)
    return collector.report(COLLISION_COLUMNS, stats, book, ecdfs)


@dataclass(frozen=True)
class GumbelContext:
    lambda_tilde: float
    i_max: int
    draws: int
    truncate_at: int


def gumbel_replication(ctx: GumbelContext, index: int, seed) -> ReplicationOutput:
    sample = gumbel_min_sampler(ctx.lambda_tilde, ctx.i_max, ctx.draws, seed, truncate_at=ctx.truncate_at)
    rows = [
        dict(run_id=index, draw=j, value=v, argmin=a, truncated_value=t)
        for j, (v, a, t) in enumerate(zip(sample.values.tolist(), sample.argmins.tolist(),
                                          sample.truncated.tolist()))
    ]
    return ReplicationOutput(rows=rows)


def run_gumbel_min(ctx: RunContext) -> ExperimentReport:
    """Cada replicação é um lote de ``draws`` sorteios do mínimo."""
    config = ctx.config
    lt = float(config.param("lambda_tilde", ctx.kernel.m.lambda_tilde))
    context = GumbelContext(lambda_tilde=lt, i_max=int(config.param("i_max", 200)),
                            draws=int(config.param("draws", 10_000)),
                            truncate_at=int(config.param("truncate_at", 50)))
    collector = BatchCollector()
    collector.add(run_replications(gumbel_replication, context, config.replications, config.master_seed,
                                   config.experiment, ctx.workers, seed_key=config.label))
    rows = collector.rows
    book = CriteriaBook(config)
    values = column(rows, "value")
    truncated = column(rows, "truncated_value")
    target = gumbel_min_mean(lt)
    stats = {"lambda_tilde": lt, "target_mean": target, "draws": int(values.size),
             "mean": float(values.mean()), "truncated_mean": float(truncated.mean())}

    book.check("gumbel_min_mean_gap", abs(stats["mean"] - target), 0.01)
    book.check("gumbel_min_ks", gumbel_min_ks(values, lt), 0.01)
    book.check("truncation_gap", abs(stats["mean"] - stats["truncated_mean"]), 1e-3, "<")
    for tail in argmin_tail_check(column(rows, "argmin").astype(int), lt, TAIL_GRID):
        stats[f"argmin_tail[k={tail.k}]"] = tail.empirical
        book.check(f"argmin_tail[k={tail.k}]", tail.empirical, tail.bound + 3.0 * tail.se, key="argmin_tail")

    identity_reps = int(config.param("identity_reps", 100_000))
    if identity_reps:
        identity = max_exp_identity_check(int(config.param("max_exp_m", 100)), identity_reps,
                                          replication_seed(config.master_seed, f"{config.label}:max_exp", 0))
        stats.update(max_exp_harmonic=identity.harmonic, max_exp_sum_mean=identity.sum_mean.mean,
                     max_exp_max_mean=identity.max_mean.mean)
        book.check("max_exp_identity_ks", identity.ks, 0.0061)

        moments = gumbel_sum_moments(identity_reps,
                                     replication_seed(config.master_seed, f"{config.label}:gumbel_sum", 0))
        stats.update(gumbel_sum_mean=moments.mean, gumbel_sum_variance=moments.variance)
        book.check("gumbel_sum_mean_gap", abs(moments.mean - EULER_GAMMA), 3.0 * moments.mean_se)
        book.check("gumbel_sum_variance_gap", abs(moments.variance - 3.0 * GUMBEL_VARIANCE),
                   3.0 * moments.variance_se)
    return collector.report(GUMBEL_COLUMNS, stats, book, {"gumbel_min": values})
