# common/branching/twoflow.py
"""
Tempo de conexão por dois fluxos.

O fluxo de x roda a_n splits e é congelado. O fluxo de y cresce sem os
rótulos D^x(a_n); cada split de y cujo rótulo está entre os rótulos vivos
distintos de x é uma aresta de colisão possível, com resíduo E_i ~ Exp(1)
(falta de memória do relógio da partícula viva de x). Então

    P_n = tau^x_{a_n} + min_i (tau^y_{C_i} + E_i),   H_n = G_x + G_y + 1.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from common.branching.labeled import LabeledFlow
from common.exceptions import InsufficientSampleError, NoCollisionError, ProcessExtinctError, SimulationError
from common.graph.generator import TypedVertexSet, sample_vertices
from common.kernel.finite import FiniteKernel, collision_rate, mean_offspring
from common.stats.distributions import cdf_exp, cdf_gamma, cdf_gumbel_min, cdf_uniform
from common.stats.goodness import correlation, ks_statistic, ks_two_sample, proportion_se
from common.utils.seeding import SeedLike, as_generator, child_seed

logger = logging.getLogger("fpp-twoflow")

MAX_FLOW_ATTEMPTS = 1_000
SPLIT_CAP_FACTOR = 20.0
MIN_PPP_RUNS = 500
GUMBEL_CHUNK = 10_000
UNIFORMITY_BINS = 10
DEFAULT_FREEZE_I_MAX = 10


@dataclass(frozen=True)
class CollisionRecord:
    index: int
    split: int
    split_time: float
    residual: float
    label: int
    ptype: int
    g_x: int
    g_y: int
    label_rank: int = 0
    type_pool_size: int = 1
    x_multiple: bool = False
    y_multiple: bool = False

    @property
    def connection_time(self) -> float:
        return self.split_time + self.residual


@dataclass(frozen=True)
class TwoFlowResult:
    n: int
    a_n: int
    lambda_tilde: float
    tau_x_an: float
    collisions: tuple[CollisionRecord, ...]
    wx_hat: float = math.nan
    wy_hat: float = math.nan
    lambda_hat: float = math.nan
    truncated: bool = False
    y_splits: int = 0
    attempts: int = 1

    @property
    def argmin_index(self) -> int:
        """i* (1-based) do termo tau_{C_i} + E_i mínimo."""
        if not self.collisions:
            raise NoCollisionError("nenhuma colisão registrada")
        times = [c.connection_time for c in self.collisions]
        return int(np.argmin(times)) + 1

    @property
    def chosen(self) -> CollisionRecord:
        return self.collisions[self.argmin_index - 1]

    @property
    def P_n(self) -> float:
        return self.tau_x_an + self.chosen.connection_time

    @property
    def H_n(self) -> int:
        c = self.chosen
        return c.g_x + c.g_y + 1

    def scaled_split(self, i: int) -> float:
        """C_n^(i) * a_n / n."""
        return self.collisions[i - 1].split * self.a_n / self.n


@dataclass(frozen=True)
class PathDecomposition:
    tau_x_an: float
    min_term: float
    wx_hat: float
    wy_hat: float
    implied_gumbel: float


@dataclass(frozen=True)
class PathStatistics:
    P_n: float
    H_n: int
    argmin_index: int
    collision_type: int
    g_x: int
    g_y: int
    decomposition: PathDecomposition


def default_freeze(n: int) -> int:
    return math.ceil(math.sqrt(n))


def split_cap(n: int, a_n: int, i_max: int, lambda_tilde: float) -> int:
    return math.ceil(SPLIT_CAP_FACTOR * n / a_n * i_max / lambda_tilde)


def _freeze_x(kernel, vs, a_n, seed, max_attempts):
    n = vs.n
    for attempt in range(max_attempts):
        x = int(as_generator(child_seed(seed, 1, attempt)).integers(n))
        flow = LabeledFlow(kernel, vs, x, child_seed(seed, 2, attempt))
        while flow.k < a_n and flow.step() is not None:
            pass
        if flow.k == a_n and flow.untainted > 0:
            return flow, attempt + 1
    raise ProcessExtinctError(f"fluxo de x não chegou a {a_n} splits em {max_attempts} tentativas",
                              attempts=max_attempts)


def run_two_flow(kernel: FiniteKernel, n: int, a_n: int | None = None, i_max: int = 1, seed: SeedLike = None,
                 vertices: TypedVertexSet | None = None, max_attempts: int = MAX_FLOW_ATTEMPTS) -> TwoFlowResult:
    a_n = default_freeze(n) if a_n is None else a_n
    if a_n < 1 or a_n >= n:
        raise SimulationError(f"a_n deve estar em [1, n) (recebido {a_n}, n={n})")
    if i_max < 1:
        raise SimulationError(f"i_max deve ser >= 1 (recebido {i_max})")
    m = mean_offspring(kernel)
    lt = m.lambda_tilde
    vs = vertices if vertices is not None else sample_vertices(kernel, n, child_seed(seed, 0))
    types = vs.types

    x_flow, x_attempts = _freeze_x(kernel, vs, a_n, seed, max_attempts)
    tau_x = x_flow.clock
    wx = math.exp(-lt * tau_x) * len(x_flow.alive)
    dead_x = np.array(x_flow.dead_labels, dtype=np.int64)

    # rótulos vivos distintos de x (não mortos), com a primeira partícula de cada um
    representative: dict[int, int] = {}
    multiplicity: dict[int, int] = defaultdict(int)
    for pid in sorted(x_flow.alive):
        label = x_flow.book.label[pid]
        if label in x_flow.dead_at:
            continue
        representative.setdefault(label, pid)
        multiplicity[label] += 1
    by_type: dict[int, list[int]] = defaultdict(list)
    for label in sorted(representative):
        by_type[int(types[label])].append(label)
    rank = {label: (i, len(labels)) for labels in by_type.values() for i, label in enumerate(labels)}

    complement = np.setdiff1d(np.arange(n), dead_x)
    cap = split_cap(n, a_n, i_max, lt)
    for attempt in range(max_attempts):
        y = int(complement[as_generator(child_seed(seed, 3, attempt)).integers(complement.size)])
        y_flow = LabeledFlow(kernel, vs, y, child_seed(seed, 4, attempt), forbidden_labels=dead_x)
        residuals = as_generator(child_seed(seed, 5, attempt))
        collisions: list[CollisionRecord] = []
        wy = math.nan
        while len(collisions) < i_max and y_flow.k < cap:
            event = y_flow.step()
            if event is None:
                break
            if event.k <= a_n:
                wy = math.exp(-lt * event.tau) * len(y_flow.alive)
            pid_x = representative.get(event.label)
            if pid_x is None:
                continue
            label_rank, pool_size = rank[event.label]
            collisions.append(CollisionRecord(
                index=len(collisions) + 1,
                split=event.k,
                split_time=event.tau,
                residual=float(residuals.standard_exponential()),
                label=event.label,
                ptype=event.ptype,
                g_x=x_flow.book.generation[pid_x] - 1,
                g_y=event.generation,
                label_rank=label_rank,
                type_pool_size=pool_size,
                x_multiple=multiplicity[event.label] > 1,
                y_multiple=y_flow.alive_per_label[event.label] > 0,
            ))
        if collisions:
            return TwoFlowResult(
                n=n, a_n=a_n, lambda_tilde=lt, tau_x_an=tau_x, collisions=tuple(collisions),
                wx_hat=wx, wy_hat=wy, lambda_hat=collision_rate(kernel, m),
                truncated=len(collisions) < i_max, y_splits=y_flow.k, attempts=x_attempts + attempt,
            )
        if not y_flow.exhausted:
            raise NoCollisionError(f"nenhuma colisão em {cap} splits do fluxo de y (n={n}, a_n={a_n})")
    raise ProcessExtinctError(f"fluxo de y sem colisão em {max_attempts} tentativas", attempts=max_attempts)


def assemble_path_statistics(result: TwoFlowResult) -> PathStatistics:
    chosen = result.chosen
    lt = result.lambda_tilde
    P_n = result.P_n
    if result.wx_hat > 0 and result.wy_hat > 0:
        implied = (math.log(result.n) - math.log(result.wx_hat * result.wy_hat)
                   + math.log(lt * (lt + 1.0)) - lt * P_n)
    else:
        implied = math.nan
    return PathStatistics(
        P_n=P_n,
        H_n=result.H_n,
        argmin_index=result.argmin_index,
        collision_type=chosen.ptype,
        g_x=chosen.g_x,
        g_y=chosen.g_y,
        decomposition=PathDecomposition(
            tau_x_an=result.tau_x_an,
            min_term=chosen.connection_time,
            wx_hat=result.wx_hat,
            wy_hat=result.wy_hat,
            implied_gumbel=implied,
        ),
    )


@dataclass(frozen=True)
class PppReport:
    count: int
    lambda_hat: float
    rate_estimate: float
    first_ks: float
    third_ks: float | None
    gap_ks: float | None
    gap_correlation: float | None


def ppp_check(results: Sequence[TwoFlowResult], lambda_hat: float | None = None,
              min_runs: int = MIN_PPP_RUNS) -> PppReport:
    """{C^(i) a_n / n}: primeira chegada ~ Exp(lambda_hat), terceira ~ Gamma(3, lambda_hat), gaps i.i.d."""
    if len(results) < min_runs:
        raise InsufficientSampleError(f"ppp_check exige >= {min_runs} execuções (recebido {len(results)})")
    rate = results[0].lambda_hat if lambda_hat is None else lambda_hat
    first = np.array([r.scaled_split(1) for r in results])
    report = dict(count=len(results), lambda_hat=rate, rate_estimate=float(1.0 / first.mean()),
                  first_ks=ks_statistic(first, lambda x: cdf_exp(x, rate)),
                  third_ks=None, gap_ks=None, gap_correlation=None)

    with_two = [r for r in results if len(r.collisions) >= 2]
    if with_two:
        a = np.array([r.scaled_split(1) for r in with_two])
        gaps = np.array([r.scaled_split(2) for r in with_two]) - a
        report["gap_ks"] = ks_statistic(gaps, lambda x: cdf_exp(x, rate))
        report["gap_correlation"] = correlation(a, gaps)
    with_three = [r.scaled_split(3) for r in results if len(r.collisions) >= 3]
    if with_three:
        report["third_ks"] = ks_statistic(with_three, lambda x: cdf_gamma(x, 3, rate))
    return PppReport(**report)


@dataclass(frozen=True)
class GumbelMinSample:
    values: np.ndarray
    argmins: np.ndarray
    truncated: np.ndarray | None = field(default=None, repr=False)


def gumbel_min_sampler(lambda_tilde: float, i_max: int, size: int, seed: SeedLike = None,
                       truncate_at: int | None = None) -> GumbelMinSample:
    """
    min_{i<=i_max} {(1/lambda_tilde) log P_i + E_i} com P_1 < P_2 < ... um PPP(1).
    ``truncate_at`` devolve também o mínimo sobre os primeiros pontos da mesma amostra.
    """
    if lambda_tilde <= 0 or i_max < 1:
        raise SimulationError(f"parâmetros inválidos: lambda_tilde={lambda_tilde}, i_max={i_max}")
    rng = as_generator(seed)
    values, argmins, truncated = [], [], []
    for start in range(0, size, GUMBEL_CHUNK):
        rows = min(GUMBEL_CHUNK, size - start)
        points = np.cumsum(rng.standard_exponential((rows, i_max)), axis=1)
        candidates = np.log(points) / lambda_tilde + rng.standard_exponential((rows, i_max))
        idx = np.argmin(candidates, axis=1)
        values.append(candidates[np.arange(rows), idx])
        argmins.append(idx + 1)
        if truncate_at is not None:
            truncated.append(candidates[:, :min(truncate_at, i_max)].min(axis=1))
    return GumbelMinSample(
        values=np.concatenate(values),
        argmins=np.concatenate(argmins),
        truncated=np.concatenate(truncated) if truncate_at is not None else None,
    )


def gumbel_min_ks(sample: Sequence[float], lambda_tilde: float) -> float:
    return ks_statistic(sample, lambda z: cdf_gumbel_min(z, lambda_tilde))


@dataclass(frozen=True)
class TailCheck:
    k: int
    empirical: float
    bound: float
    se: float

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + 3.0 * self.se


def argmin_tail_check(argmins: Iterable[int], lambda_tilde: float, k_grid: Iterable[int]) -> list[TailCheck]:
    """P(argmin > k) empírico contra (lambda_tilde / (lambda_tilde + 1))^k."""
    arr = np.asarray(list(argmins), dtype=np.int64)
    if arr.size == 0:
        raise InsufficientSampleError("nenhum argmin")
    ratio = lambda_tilde / (lambda_tilde + 1.0)
    checks = []
    for k in k_grid:
        p = float(np.mean(arr > k))
        checks.append(TailCheck(k=k, empirical=p, bound=ratio ** k, se=proportion_se(p, arr.size)))
    return checks


@dataclass(frozen=True)
class DominanceReport:
    mean_connection: float
    mean_dominating: float
    effect: float
    effect_se: float

    @property
    def passed(self) -> bool:
        # efeito = P(P_con > soma dominante); dominância estocástica exige <= 1/2
        return self.effect <= 0.5 + 3.0 * self.effect_se


def dominating_sums(lambda_tilde: float, size: int, seed: SeedLike = None) -> np.ndarray:
    """sum_{i<=N} E_i com N ~ Geom(1/(lambda_tilde+1)) e E_i ~ Exp(lambda_tilde)."""
    rng = as_generator(seed)
    counts = rng.geometric(1.0 / (lambda_tilde + 1.0), size=size)
    return rng.gamma(shape=counts, scale=1.0 / lambda_tilde)


def geometric_dominance_check(results: Sequence[TwoFlowResult], seed: SeedLike = None) -> DominanceReport:
    if not results:
        raise InsufficientSampleError("nenhum resultado")
    lt = results[0].lambda_tilde
    connection = np.array([r.scaled_split(r.argmin_index) for r in results])
    dominating = dominating_sums(lt, connection.size, seed)
    u = stats.mannwhitneyu(connection, dominating, alternative="greater").statistic
    n1, n2 = connection.size, dominating.size
    return DominanceReport(
        mean_connection=float(connection.mean()),
        mean_dominating=float(dominating.mean()),
        effect=float(u / (n1 * n2)),
        effect_se=float(math.sqrt((n1 + n2 + 1) / (12.0 * n1 * n2))),
    )


@dataclass(frozen=True)
class ThinnedCollisionReport:
    fraction: float
    mean_bound: float
    count: int


def thinned_collision_fraction(results: Sequence[TwoFlowResult]) -> ThinnedCollisionReport:
    """
    Fração de execuções cuja colisão escolhida passa por um rótulo com mais de
    uma cópia viva (uma delas seria podada), contra
    ((lambda_tilde+1)/lambda_tilde) * (a_n/n + C_con/(n - a_n)).
    """
    if not results:
        raise InsufficientSampleError("nenhum resultado")
    flags, bounds = [], []
    for r in results:
        c = r.chosen
        flags.append(c.x_multiple or c.y_multiple)
        factor = (r.lambda_tilde + 1.0) / r.lambda_tilde
        bounds.append(factor * (r.a_n / r.n + c.split / (r.n - r.a_n)))
    return ThinnedCollisionReport(fraction=float(np.mean(flags)), mean_bound=float(np.mean(bounds)), count=len(results))


@dataclass(frozen=True)
class GenerationCorrelation:
    ptype: int
    correlation: float
    se: float
    count: int

    @property
    def passed(self) -> bool:
        return abs(self.correlation) <= 3.0 * self.se


def conditional_generation_correlation(results: Sequence[TwoFlowResult]) -> list[GenerationCorrelation]:
    """Correlação de (G_x, G_y) condicionada ao tipo da colisão."""
    grouped: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for r in results:
        c = r.chosen
        grouped[c.ptype].append((c.g_x, c.g_y))
    out = []
    for t in sorted(grouped):
        pairs = np.array(grouped[t], dtype=float)
        if pairs.shape[0] < 3:
            continue
        out.append(GenerationCorrelation(ptype=t, correlation=correlation(pairs[:, 0], pairs[:, 1]),
                                         se=1.0 / math.sqrt(pairs.shape[0]), count=pairs.shape[0]))
    return out


@dataclass(frozen=True)
class UniformityReport:
    ks: float
    chi_square: float
    critical: float
    count: int

    @property
    def passed(self) -> bool:
        return self.chi_square <= self.critical


def collision_label_uniformity(results: Sequence[TwoFlowResult], seed: SeedLike = None) -> UniformityReport:
    """
    Posição do rótulo de colisão entre os rótulos vivos de x do mesmo tipo,
    suavizada por um uniforme: (posição + U) / tamanho deve ser U(0, 1).
    """
    if not results:
        raise InsufficientSampleError("nenhum resultado")
    rng = as_generator(seed)
    ranks = np.array([r.chosen.label_rank for r in results], dtype=float)
    sizes = np.array([r.chosen.type_pool_size for r in results], dtype=float)
    fractions = (ranks + rng.random(ranks.size)) / sizes
    observed, _ = np.histogram(fractions, bins=UNIFORMITY_BINS, range=(0.0, 1.0))
    chi = stats.chisquare(observed).statistic
    return UniformityReport(
        ks=ks_statistic(fractions, cdf_uniform),
        chi_square=float(chi),
        critical=float(stats.chi2.ppf(0.95, UNIFORMITY_BINS - 1)),
        count=int(ranks.size),
    )


@dataclass(frozen=True)
class FreezeInvariance:
    freezes: dict[float, int]
    samples: dict[float, np.ndarray] = field(repr=False)
    max_ks: float


def freeze_point_invariance(kernel: FiniteKernel, n: int, reps: int, seed: SeedLike = None,
                            exponents: Sequence[float] = (0.4, 0.5, 0.6),
                            i_max: int = DEFAULT_FREEZE_I_MAX) -> FreezeInvariance:
    """
    Lei de P_n para a_n = ceil(n^p); o ponto de congelamento não deve importar.
    P_n é o mínimo sobre as primeiras ``i_max`` colisões, então i_max precisa
    cobrir a cauda do argmin.
    """
    freezes = {p: max(1, math.ceil(n ** p)) for p in exponents}
    samples = {}
    for j, (p, a_n) in enumerate(freezes.items()):
        values = []
        for i in range(reps):
            try:
                values.append(run_two_flow(kernel, n, a_n, i_max, child_seed(seed, j, i)).P_n)
            except (NoCollisionError, ProcessExtinctError) as e:
                logger.warning(f"⚠️ Replicação {i} (a_n={a_n}) rejeitada: {e}")
        samples[p] = np.array(values)
    keys = list(samples)
    max_ks = max((ks_two_sample(samples[a], samples[b]) for i, a in enumerate(keys) for b in keys[i + 1:]),
                 default=0.0)
    return FreezeInvariance(freezes=freezes, samples=samples, max_ks=float(max_ks))
