# common/branching/ctbp.py
"""
Processo de ramificação multi-tipo em tempo contínuo.

Cada partícula vive um tempo Exp(1); ao morrer (um "split") gera filhos
conforme a lei de descendência. Pela falta de memória, o split j escolhe uma
partícula uniforme entre as S_{j-1} vivas e tau_j - tau_{j-1} ~ Exp(S_{j-1}).
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from common.branching.offspring import BUFFER_SIZE, OffspringLaw, make_sampler
from common.exceptions import InsufficientSampleError, ProcessExtinctError, SimulationError
from common.utils.seeding import SeedLike, as_generator, child_seed

logger = logging.getLogger("fpp-ctbp")

MAX_SURVIVAL_ATTEMPTS = 10_000
ALIVE = -1


class EventStream:
    """Exponenciais padrão e uniformes em lote, consumidos um a um."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._exp: list[float] = []
        self._unif: list[float] = []

    def exponential(self) -> float:
        if not self._exp:
            self._exp = self.rng.standard_exponential(BUFFER_SIZE).tolist()[::-1]
        return self._exp.pop()

    def index(self, k: int) -> int:
        if not self._unif:
            self._unif = self.rng.random(BUFFER_SIZE).tolist()[::-1]
        return min(int(self._unif.pop() * k), k - 1)


@dataclass(frozen=True)
class BpState:
    """
    Trajetória completa até ``m`` splits (ou extinção).

    tau[j], alive_total[j] para j = 0..m; registros por partícula (tipo, geração,
    pai, split de nascimento, split de morte ou -1). ``children[j-1]`` guarda os
    filhos por tipo do split j quando a trajetória foi gravada com esse detalhe.
    """
    law: OffspringLaw
    root_type: int
    tau: np.ndarray
    alive_total: np.ndarray
    ptype: np.ndarray
    generation: np.ndarray
    parent: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    split_particle: np.ndarray
    children: np.ndarray | None = None

    @property
    def m(self) -> int:
        return int(self.tau.size - 1)

    @property
    def extinct(self) -> bool:
        return bool(self.alive_total[-1] == 0)

    @property
    def lambda_tilde(self) -> float:
        return self.law.lambda_tilde

    def survived_to(self, m: int) -> bool:
        return self.m >= m and self.alive_total[m] > 0

    def alive_mask(self, m: int) -> np.ndarray:
        return (self.birth <= m) & ((self.death == ALIVE) | (self.death > m))


@dataclass(frozen=True)
class AliveDeadProfile:
    alive: np.ndarray
    dead: np.ndarray


@dataclass(frozen=True)
class MartingaleEstimate:
    w_hat: float
    m_used: int
    survived: bool


@dataclass(frozen=True)
class SplitTimeDecomposition:
    """tau_k = martingale_term + ratio_term + log_term (identidade exata)."""
    k: int
    tau_k: float
    martingale_term: float
    ratio_term: float
    log_term: float

    @property
    def total(self) -> float:
        return self.martingale_term + self.ratio_term + self.log_term


def run_bp(law: OffspringLaw, root_type: int, m_max: int, seed: SeedLike = None,
           sampler: str = "direct", record_children: bool = False) -> BpState:
    if m_max < 1:
        raise SimulationError(f"m_max deve ser >= 1 (recebido {m_max})")
    if not 0 <= root_type < law.r:
        raise SimulationError(f"tipo de raiz inválido: {root_type}")
    rng = as_generator(seed)
    events = EventStream(rng)
    offspring = make_sampler(law, rng, sampler)
    r = law.r

    ptype, generation, parent, birth, death = [root_type], [0], [-1], [0], [ALIVE]
    alive = [0]
    tau, alive_total, split_particle = [0.0], [1], []
    children = [] if record_children else None
    clock = 0.0

    for j in range(1, m_max + 1):
        k = len(alive)
        if k == 0:
            break
        clock += events.exponential() / k
        idx = events.index(k)
        p = alive[idx]
        alive[idx] = alive[-1]
        alive.pop()
        death[p] = j
        split_particle.append(p)

        counts = offspring.draw(ptype[p])
        child_gen = generation[p] + 1
        for t in range(r):
            for _ in range(counts[t]):
                alive.append(len(ptype))
                ptype.append(t)
                generation.append(child_gen)
                parent.append(p)
                birth.append(j)
                death.append(ALIVE)
        if children is not None:
            children.append(counts)
        tau.append(clock)
        alive_total.append(len(alive))

    return BpState(
        law=law,
        root_type=root_type,
        tau=np.array(tau),
        alive_total=np.array(alive_total, dtype=np.int64),
        ptype=np.array(ptype, dtype=np.int64),
        generation=np.array(generation, dtype=np.int64),
        parent=np.array(parent, dtype=np.int64),
        birth=np.array(birth, dtype=np.int64),
        death=np.array(death, dtype=np.int64),
        split_particle=np.array(split_particle, dtype=np.int64),
        children=np.array(children, dtype=np.int64).reshape(-1, r) if children is not None else None,
    )


def run_until_survival(law: OffspringLaw, root_type: int, m_max: int, seed: SeedLike = None,
                       max_attempts: int = MAX_SURVIVAL_ATTEMPTS, sampler: str = "direct") -> tuple[BpState, int]:
    """Condiciona na sobrevivência por rejeição: chegar a m_max splits conta como sobreviver."""
    for attempt in range(max_attempts):
        state = run_bp(law, root_type, m_max, child_seed(seed, attempt), sampler=sampler)
        if state.survived_to(m_max):
            return state, attempt + 1
    raise ProcessExtinctError(f"nenhuma trajetória chegou a {m_max} splits em {max_attempts} tentativas",
                              attempts=max_attempts)


def _check_reached(state: BpState, m: int):
    if m < 0 or m > state.m:
        raise SimulationError(f"split {m} fora da trajetória (m = {state.m})")


def alive_dead_profile(state: BpState, m: int) -> AliveDeadProfile:
    _check_reached(state, m)
    r = state.law.r
    alive = np.bincount(state.ptype[state.alive_mask(m)], minlength=r)
    dead_mask = (state.death != ALIVE) & (state.death <= m)
    dead = np.bincount(state.ptype[dead_mask], minlength=r)
    return AliveDeadProfile(alive=alive, dead=dead)


def generation_sample(state: BpState, m: int, type_set: Iterable[int] | None = None,
                      seed: SeedLike = None) -> int:
    """Geração de uma partícula viva uniforme (após m splits) com tipo em ``type_set``."""
    _check_reached(state, m)
    mask = state.alive_mask(m)
    if type_set is not None:
        mask &= np.isin(state.ptype, list(type_set))
    candidates = np.flatnonzero(mask)
    if candidates.size == 0:
        raise SimulationError(f"nenhuma partícula viva dos tipos pedidos no split {m}")
    rng = as_generator(seed)
    return int(state.generation[candidates[rng.integers(candidates.size)]])


def estimate_w(state: BpState, m: int | None = None) -> MartingaleEstimate:
    """W estimado por exp(-lambda_tilde * tau_m) * S_m; zero se extinto antes de m."""
    m = state.m if m is None else m
    m_used = min(m, state.m)
    if state.alive_total[m_used] == 0:
        return MartingaleEstimate(w_hat=0.0, m_used=m_used, survived=False)
    if m_used < m:
        # trajetória truncada sem extinção: não deveria acontecer com run_bp
        raise SimulationError(f"trajetória parou em {state.m} < {m} sem extinção")
    w = math.exp(-state.lambda_tilde * state.tau[m_used]) * int(state.alive_total[m_used])
    return MartingaleEstimate(w_hat=w, m_used=m_used, survived=True)


def summable_error_cutoff(m: int) -> int:
    return max(3, math.ceil(math.log(math.log(m)))) if m > 1 else 3


def check_summable_errors(trajectories: Sequence[BpState], C: float, m: int) -> float:
    """
    Fração das trajetórias sobreviventes com |S_j - lambda_tilde*j| <= C*sqrt(j log j)
    para todo j em [max(3, ceil(log log m)), m].
    """
    surviving = [s for s in trajectories if s.survived_to(m)]
    if not surviving:
        raise InsufficientSampleError("nenhuma trajetória sobrevivente")
    j = np.arange(summable_error_cutoff(m), m + 1)
    bound = C * np.sqrt(j * np.log(j))
    ok = 0
    for state in surviving:
        deviation = np.abs(state.alive_total[j] - state.lambda_tilde * j)
        ok += bool(np.all(deviation <= bound))
    return ok / len(surviving)


def split_time_decomposition(state: BpState, k: int) -> SplitTimeDecomposition:
    _check_reached(state, k)
    if k < 1 or state.alive_total[k] == 0:
        raise SimulationError(f"decomposição exige S_k > 0 e k >= 1 (k = {k})")
    lt = state.lambda_tilde
    s_k = float(state.alive_total[k])
    tau_k = float(state.tau[k])
    martingale = math.exp(-lt * tau_k) * s_k
    return SplitTimeDecomposition(
        k=k,
        tau_k=tau_k,
        martingale_term=-math.log(martingale / lt) / lt,
        ratio_term=math.log(s_k / (lt * k)) / lt,
        log_term=math.log(k) / lt,
    )


def normalized_split_gaps(state: BpState) -> np.ndarray:
    """S_{j-1} * (tau_j - tau_{j-1}): i.i.d. Exp(1) pela construção."""
    return state.alive_total[:-1] * np.diff(state.tau)


@dataclass(frozen=True)
class MgfCheck:
    t: float
    empirical: float
    functional: float

    @property
    def discrepancy(self) -> float:
        return abs(self.empirical - self.functional)


def mgf_self_consistency(w_samples: Sequence[float], lambda_tilde: float,
                         t_values: Sequence[float] = (-0.25, -0.5, -1.0)) -> list[MgfCheck]:
    """
    Confere M_W(t) = int_0^inf exp{(lambda_tilde+1)(M_W(t e^{-lambda_tilde y}) - 1)} e^{-y} dy
    usando a MGF empírica dos dois lados (t <= 0, amostras incluindo os zeros da extinção).
    """
    w = np.asarray(w_samples, dtype=float)
    if w.size == 0:
        raise InsufficientSampleError("amostra de W vazia")
    c = lambda_tilde + 1.0

    def mgf(t: float) -> float:
        return float(np.mean(np.exp(t * w)))

    checks = []
    for t in t_values:
        rhs, _ = integrate.quad(lambda y: math.exp(c * (mgf(t * math.exp(-lambda_tilde * y)) - 1.0) - y),
                                0.0, np.inf, limit=200)
        checks.append(MgfCheck(t=t, empirical=mgf(t), functional=rhs))
    return checks
