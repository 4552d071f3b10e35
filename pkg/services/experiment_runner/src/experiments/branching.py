# services/experiment_runner/src/experiments/branching.py
"""
Receitas do processo de ramificação: bp_asymptotics (perfil, gerações, W, tau_m)
e coupling_error (exploração binomial contra Poisson).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from common.branching.coupling import coupled_bin_poi_run, decoupling_bound
from common.branching.ctbp import (
    alive_dead_profile,
    check_summable_errors,
    estimate_w,
    generation_sample,
    mgf_self_consistency,
    run_bp,
    run_until_survival,
)
from common.branching.offspring import OffspringLaw, poisson_law
from common.exceptions import ConfigurationError
from common.kernel.finite import FiniteKernel, stationary_type_vector, survival_probability
from common.stats.distributions import cdf_normal
from common.stats.goodness import ks_statistic, mean_with_se, proportion_se
from common.utils.seeding import child_seed
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

UNCONDITIONED_CHECKS = ("survival", "w_mean", "mgf")
CONDITIONED_CHECKS = ("profile", "generation", "tau", "summable")
DEFAULT_SPLITS = 10_000
DEFAULT_SUMMABLE_C = 5.0


@dataclass(frozen=True)
class BpContext:
    law: OffspringLaw
    root_type: int
    m: int
    conditioned: bool
    type_set: tuple[int, ...] | None
    summable_c: float


def bp_replication(ctx: BpContext, index: int, seed) -> ReplicationOutput:
    if ctx.conditioned:
        state, attempts = run_until_survival(ctx.law, ctx.root_type, ctx.m, child_seed(seed, 0))
    else:
        state, attempts = run_bp(ctx.law, ctx.root_type, ctx.m, child_seed(seed, 0)), 1
    lt = state.lambda_tilde
    w_hat = estimate_w(state, ctx.m).w_hat
    row = dict(run_id=index, survived=state.survived_to(ctx.m), m=ctx.m, attempts=attempts,
               tau_m=None, S_m=None, w_hat=w_hat, G_sample=None, tau_gap=None, summable=None)
    if row["survived"]:
        tau_m = float(state.tau[ctx.m])
        profile = alive_dead_profile(state, ctx.m)
        row.update(tau_m=tau_m, S_m=int(state.alive_total[ctx.m]),
                   G_sample=generation_sample(state, ctx.m, ctx.type_set, child_seed(seed, 1)),
                   tau_gap=tau_m - math.log(ctx.m) / lt + math.log(w_hat / lt) / lt,
                   summable=check_summable_errors([state], ctx.summable_c, ctx.m) == 1.0)
        for t in range(ctx.law.r):
            row[f"alive_share_{t}"] = profile.alive[t] / (lt * ctx.m)
            row[f"dead_share_{t}"] = profile.dead[t] / ctx.m
    return ReplicationOutput(rows=[row])


def _selected_checks(config, conditioned: bool) -> list[str]:
    allowed = CONDITIONED_CHECKS if conditioned else UNCONDITIONED_CHECKS
    checks = list(config.param("checks", allowed))
    invalid = [c for c in checks if c not in allowed]
    if invalid:
        mode = "condicionado" if conditioned else "livre"
        raise ConfigurationError(f"checks {invalid} não se aplicam ao modo {mode} (permitidos: {list(allowed)})")
    return checks


def run_bp_asymptotics(ctx: RunContext) -> ExperimentReport:
    config = ctx.config
    require_supercritical(ctx.kernel)
    m_matrix = ctx.kernel.m
    lt = m_matrix.lambda_tilde
    r = m_matrix.r
    conditioned = bool(config.param("condition_on_survival", True))
    checks = _selected_checks(config, conditioned)
    m = int(config.param("m", DEFAULT_SPLITS))
    type_set = config.param("type_set")
    context = BpContext(law=poisson_law(m_matrix), root_type=int(config.param("root_type", 0)), m=m,
                        conditioned=conditioned, type_set=tuple(type_set) if type_set else None,
                        summable_c=float(config.param("summable_C", DEFAULT_SUMMABLE_C)))

    collector = BatchCollector()
    collector.add(run_replications(bp_replication, context, config.replications, config.master_seed,
                                   config.experiment, ctx.workers, seed_key=config.label))
    rows = collector.rows
    book = CriteriaBook(config)
    rho = survival_probability(lt)
    stats = {"lambda_tilde": lt, "rho": rho, "m": m}
    ecdfs = {}
    columns = ["run_id", "survived", "m", "attempts", "tau_m", "S_m", "w_hat", "G_sample", "tau_gap", "summable"]
    columns += [f"{kind}_share_{t}" for t in range(r) for kind in ("alive", "dead")]

    survived = column(rows, "survived")
    w = column(rows, "w_hat")
    surviving = [row for row in rows if row["survived"]]

    if "survival" in checks:
        p = float(survived.mean())
        se = proportion_se(rho, survived.size)
        stats.update(survival_fraction=p, survival_se=se)
        book.check("survival_gap", abs(p - rho), 3.0 * se, detail=f"rho={rho:.6f}")
    if "w_mean" in checks:
        estimate = mean_with_se(w)
        stats.update(w_mean=estimate.mean, w_mean_se=estimate.se)
        book.check("w_mean_gap", abs(estimate.mean - 1.0), 3.0 * estimate.se)
    if "mgf" in checks:
        for check in mgf_self_consistency(w, lt, config.param("mgf_t", (-0.25, -0.5, -1.0))):
            stats[f"mgf_empirical[t={check.t}]"] = check.empirical
            book.check(f"mgf_discrepancy[t={check.t}]", check.discrepancy, 0.02, key="mgf_discrepancy")

    if "profile" in checks and surviving:
        pi = stationary_type_vector(m_matrix).pi
        within = []
        for row in surviving:
            gaps = [abs(row[f"{kind}_share_{t}"] - pi[t]) for t in range(r) for kind in ("alive", "dead")]
            within.append(max(gaps) <= config.threshold("profile_tolerance", 0.05))
        sizes = column(surviving, "S_m") / (lt * m)
        size_ok = float(np.mean((sizes >= 0.9) & (sizes <= 1.1)))
        stats.update(size_ratio_mean=float(sizes.mean()))
        book.check("profile_within_fraction", float(np.mean(within)), 0.9, ">=")
        book.check("size_ratio_within_fraction", size_ok, 0.95, ">=")
    if "generation" in checks and surviving:
        g = column(surviving, "G_sample")
        c = (lt + 1.0) / lt
        scale = math.sqrt(c * math.log(m))
        z = (g - c * math.log(m)) / scale
        wrong = (g - math.log(m)) / scale
        ecdfs["generation_standardized"] = z
        stats["generation_mean"] = float(g.mean())
        book.check("generation_ks", ks_statistic(z, cdf_normal), 0.05)
        book.check("generation_miscentered_ks", ks_statistic(wrong, cdf_normal), 0.15, ">")
    if "tau" in checks and surviving:
        gaps = finite(column(surviving, "tau_gap"))
        ecdfs["tau_gap"] = gaps
        stats["tau_gap_mean"] = float(gaps.mean())
        book.check("tau_within_fraction", float(np.mean(np.abs(gaps) < config.threshold("tau_tolerance", 0.05))),
                   0.9, ">=")
    if "summable" in checks and surviving:
        book.check("summable_fraction", float(column(surviving, "summable").mean()), 0.99, ">=",
                   detail=f"C={context.summable_c}")
    if conditioned and not surviving:
        book.check("surviving_runs", 0.0, 1.0, ">=")
    return collector.report(columns, stats, book, ecdfs)


@dataclass(frozen=True)
class CouplingContext:
    kernel: FiniteKernel
    n: int
    m: int
    root_type: int


def coupling_replication(ctx: CouplingContext, index: int, seed) -> ReplicationOutput:
    run = coupled_bin_poi_run(ctx.kernel, ctx.n, ctx.root_type, ctx.m, seed)
    return ReplicationOutput(rows=[dict(
        run_id=index, n=ctx.n, m=ctx.m, decoupled=run.decouple_split is not None,
        decouple_split=run.decouple_split, binomial_splits=run.binomial.m, poisson_splits=run.poisson.m,
    )])


def run_coupling_error(ctx: RunContext) -> ExperimentReport:
    config = ctx.config
    m = int(config.param("m", 100))
    root_type = int(config.param("root_type", 0))
    collector = BatchCollector()
    book = CriteriaBook(config)
    stats = {"lambda_tilde": ctx.kernel.m.lambda_tilde, "max_kappa": ctx.kernel.kernel.max_kappa}
    many = len(config.n_values) > 1

    for n in config.n_values:
        context = CouplingContext(ctx.kernel.kernel, n, m, root_type)
        collector.add(run_replications(coupling_replication, context, config.replications, config.master_seed,
                                       config.experiment, ctx.workers, seed_key=f"{config.label}:n={n}"))
        tag = f"[n={n}]" if many else ""
        frequency = float(column(collector.rows, "decoupled", n=n).mean())
        bound = decoupling_bound(ctx.kernel.kernel, n, m)
        stats[f"decouple_frequency{tag}"] = frequency
        stats[f"decouple_bound{tag}"] = bound
        slack = config.threshold("bound_factor", 1.2)
        book.check(f"decouple_frequency{tag}", frequency, slack * bound, detail=f"bound={bound:.3g}",
                   key="decouple_frequency")
    return collector.report(["run_id", "n", "m", "decoupled", "decouple_split", "binomial_splits",
                             "poisson_splits"], stats, book)
