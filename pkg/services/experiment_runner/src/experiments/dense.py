# services/experiment_runner/src/experiments/dense.py
"""
Regime denso: lambda_tilde_n cresce com n (regra ``power`` n^p ou ``log`` log n).
lambda_n * P_n - log n deve ter a lei de Y1 + Y2 - Y3 (Gumbel padrão i.i.d.).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from common.exceptions import ConfigurationError
from common.kernel.finite import FiniteKernel, scale_kernel
from common.stats.distributions import EULER_GAMMA, GUMBEL_VARIANCE, cdf_normal
from common.stats.goodness import ks_statistic
from services.experiment_runner.src.experiments.base import (
    BatchCollector,
    CriteriaBook,
    ExperimentReport,
    RunContext,
    column,
    require_supercritical,
)
from services.experiment_runner.src.experiments.hopcount import sample_connected_path
from services.experiment_runner.src.runner import ReplicationOutput, run_replications

logger = logging.getLogger("experiment-runner")

MIN_DENSE_N = 64
DENSE_RULES = ("power", "log")
DENSE_COLUMNS = ["run_id", "n", "rule", "lambda_n", "Pn", "Hn", "rescaled_weight", "hop_z", "hop_z_log_centered"]


def dense_lambda(rule: str, n: int, power: float = 0.3) -> float:
    if rule == "power":
        if power <= 0:
            raise ConfigurationError(f"expoente da regra power deve ser positivo (recebido {power})")
        return n ** power
    if rule == "log":
        return math.log(n)
    raise ConfigurationError(f"regra densa desconhecida: {rule} (use {DENSE_RULES})")


def _check_increasing(rule: str, n_values, power: float):
    """A sequência lambda_n precisa crescer com n; basta comparar n com 2n."""
    for n in n_values:
        if n < MIN_DENSE_N:
            raise ConfigurationError(f"regime denso exige n >= {MIN_DENSE_N} (recebido {n})")
        if not dense_lambda(rule, 2 * n, power) > dense_lambda(rule, n, power) > 0:
            raise ConfigurationError(f"lambda_n da regra {rule} não é crescente em n={n}")


@dataclass(frozen=True)
class DenseContext:
    kernel: FiniteKernel
    n: int
    rule: str
    lambda_n: float


def dense_replication(ctx: DenseContext, index: int, seed) -> ReplicationOutput:
    _, _, _, _, path = sample_connected_path(ctx.kernel, ctx.n, seed)
    log_n = math.log(ctx.n)
    lt = ctx.lambda_n
    return ReplicationOutput(rows=[dict(
        run_id=index, n=ctx.n, rule=ctx.rule, lambda_n=lt, Pn=path.weight, Hn=path.hops,
        rescaled_weight=lt * path.weight - log_n,
        hop_z=(path.hops - (lt + 1.0) / lt * log_n) / math.sqrt(log_n),
        hop_z_log_centered=(path.hops - log_n) / math.sqrt(log_n),
    )])


def run_dense_setting(ctx: RunContext) -> ExperimentReport:
    config = ctx.config
    require_supercritical(ctx.kernel)
    primary = config.param("rule", "power")
    power = float(config.param("power", 0.3))
    rules = [primary]
    if config.param("compare_rules", True):
        rules += [r for r in DENSE_RULES if r != primary]
    for rule in rules:
        _check_increasing(rule, config.n_values, power)

    collector = BatchCollector()
    book = CriteriaBook(config)
    stats, ecdfs = {}, {}
    many = len(config.n_values) > 1

    for rule in rules:
        for n in config.n_values:
            lambda_n = dense_lambda(rule, n, power)
            kernel, _ = scale_kernel(ctx.kernel.kernel, lambda_n)
            context = DenseContext(kernel, n, rule, lambda_n)
            collector.add(run_replications(dense_replication, context, config.replications, config.master_seed,
                                           config.experiment, ctx.workers,
                                           seed_key=f"{config.label}:{rule}:n={n}"))
            tag = f"[{rule}{f',n={n}' if many else ''}]"
            weight = column(collector.rows, "rescaled_weight", n=n, rule=rule)
            z = column(collector.rows, "hop_z", n=n, rule=rule)
            z_log = column(collector.rows, "hop_z_log_centered", n=n, rule=rule)
            stats[f"lambda_n{tag}"] = lambda_n
            stats[f"lambda_over_sqrt_log{tag}"] = lambda_n / math.sqrt(math.log(n))
            stats[f"rescaled_weight_mean{tag}"] = float(weight.mean())
            stats[f"rescaled_weight_variance{tag}"] = float(np.var(weight, ddof=1))
            stats[f"hopcount_ks{tag}"] = ks_statistic(z, cdf_normal)
            stats[f"log_centered_hopcount_ks{tag}"] = ks_statistic(z_log, cdf_normal)
            # deslocamento da média ao trocar a centragem por log n: sqrt(log n) / lambda_n
            stats[f"centering_shift{tag}"] = float(z_log.mean() - z.mean())
            stats[f"centering_shift_predicted{tag}"] = math.sqrt(math.log(n)) / lambda_n
            ecdfs[f"dense_rescaled_weight{tag}"] = weight
            ecdfs[f"dense_hopcount_standardized{tag}"] = z

            if rule != primary:
                continue
            book.check(f"rescaled_weight_mean_gap{tag}", abs(stats[f"rescaled_weight_mean{tag}"] - EULER_GAMMA),
                       0.15, key="rescaled_weight_mean_gap")
            book.check(f"rescaled_weight_variance_gap{tag}",
                       abs(stats[f"rescaled_weight_variance{tag}"] - 3.0 * GUMBEL_VARIANCE), 0.6,
                       key="rescaled_weight_variance_gap")
            book.check(f"hopcount_ks{tag}", stats[f"hopcount_ks{tag}"], 0.06, key="hopcount_ks")
    return collector.report(DENSE_COLUMNS, stats, book, ecdfs)
