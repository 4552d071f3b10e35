# common/kernel/finite.py
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from common.exceptions import ConvergenceError, KernelValidationError

logger = logging.getLogger("fpp-kernel")

MU_SUM_TOLERANCE = 1e-12
HOMOGENEITY_TOLERANCE = 1e-9
POWER_ITERATION_TOLERANCE = 1e-14
POWER_ITERATION_CAP = 100_000
SURVIVAL_ITERATION_CAP = 10_000_000


@dataclass(frozen=True)
class FiniteKernel:
    """Kernel de tipos finitos: medida ``mu`` sobre r tipos e matriz simétrica ``kappa``."""
    r: int
    mu: np.ndarray
    kappa: np.ndarray

    @property
    def max_kappa(self) -> float:
        return float(self.kappa.max())


@dataclass(frozen=True)
class MeanOffspringMatrix:
    """
    lam[s][t] = kappa[s][t] * mu[t]  (média de vizinhos do tipo t de um vértice do tipo s)
    a_matrix  = lam - I
    lambda_tilde = soma da primeira linha de A
    """
    lam: np.ndarray
    a_matrix: np.ndarray
    lambda_tilde: float

    @property
    def r(self) -> int:
        return self.lam.shape[0]


@dataclass(frozen=True)
class HomogeneityReport:
    passed: bool
    lambda_tilde: float
    max_deviation: float


@dataclass(frozen=True)
class IrreducibilityReport:
    passed: bool
    primitive: bool
    power: int | None


@dataclass(frozen=True)
class StationaryVector:
    pi: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class OperatorNorm:
    value: float
    singular_value: float

    @property
    def discrepancy(self) -> float:
        return abs(self.value - self.singular_value)


def mean_offspring(kernel: FiniteKernel) -> MeanOffspringMatrix:
    lam = kernel.kappa * kernel.mu[np.newaxis, :]
    a_matrix = lam - np.eye(kernel.r)
    return MeanOffspringMatrix(lam=lam, a_matrix=a_matrix, lambda_tilde=float(a_matrix[0].sum()))


def build_finite_kernel(mu: Sequence[float], kappa: Sequence[Sequence[float]]) -> tuple[FiniteKernel, MeanOffspringMatrix]:
    """
    Valida (mu, kappa) e devolve o kernel junto com as matrizes derivadas.

    Rejeita kappa assimétrico, entradas negativas / NaN / infinitas e mu com
    entradas não positivas ou que não somam 1.
    """
    mu_arr = np.asarray(mu, dtype=float)
    kappa_arr = np.asarray(kappa, dtype=float)

    if mu_arr.ndim != 1 or mu_arr.size == 0:
        raise KernelValidationError("mu deve ser um vetor não vazio")
    r = mu_arr.size
    if kappa_arr.shape != (r, r):
        raise KernelValidationError(f"kappa deve ser {r}x{r}, recebido {kappa_arr.shape}")
    if not np.all(np.isfinite(mu_arr)) or np.any(mu_arr <= 0):
        raise KernelValidationError(f"mu precisa ter todas as entradas > 0: {mu_arr.tolist()}")
    if abs(mu_arr.sum() - 1.0) > MU_SUM_TOLERANCE:
        raise KernelValidationError(f"mu deve somar 1 (soma = {mu_arr.sum()!r})")
    if not np.all(np.isfinite(kappa_arr)):
        raise KernelValidationError("kappa contém NaN ou infinito")
    if np.any(kappa_arr < 0):
        raise KernelValidationError("kappa contém entradas negativas")
    if not np.array_equal(kappa_arr, kappa_arr.T):
        raise KernelValidationError("kappa não é simétrico")

    kernel = FiniteKernel(r=r, mu=mu_arr, kappa=kappa_arr)
    return kernel, mean_offspring(kernel)


def scale_kernel(kernel: FiniteKernel, lambda_tilde: float) -> tuple[FiniteKernel, MeanOffspringMatrix]:
    """Reescala kappa para que a soma de linha homogênea de A valha ``lambda_tilde``."""
    current = mean_offspring(kernel).lambda_tilde + 1.0
    if current <= 0:
        raise KernelValidationError("kernel nulo não pode ser reescalado")
    return build_finite_kernel(kernel.mu, kernel.kappa * ((lambda_tilde + 1.0) / current))


def check_homogeneity(m: MeanOffspringMatrix, tol: float = HOMOGENEITY_TOLERANCE) -> HomogeneityReport:
    row_sums = m.a_matrix.sum(axis=1)
    deviation = float(np.max(np.abs(row_sums - m.lambda_tilde)))
    return HomogeneityReport(
        passed=deviation <= tol and m.lambda_tilde > 0,
        lambda_tilde=m.lambda_tilde,
        max_deviation=deviation,
    )


def check_irreducibility(m: MeanOffspringMatrix, k_max: int | None = None) -> IrreducibilityReport:
    """
    Irredutível se toda entrada de lam + lam^2 + ... + lam^k_max for positiva.
    ``primitive`` indica se alguma potência isolada já é estritamente positiva.
    """
    r = m.r
    k_max = k_max if k_max is not None else max(r * r, 1)
    support = (m.lam > 0).astype(np.int64)
    power = support.copy()
    reach = support.copy()
    primitive = bool(np.all(power > 0))
    first = 1 if np.all(reach > 0) else None
    for k in range(2, k_max + 1):
        power = np.minimum(power @ support, 1)
        reach = np.minimum(reach + power, 1)
        primitive = primitive or bool(np.all(power > 0))
        if first is None and np.all(reach > 0):
            first = k
    return IrreducibilityReport(passed=first is not None, primitive=primitive, power=first)


def stationary_type_vector(m: MeanOffspringMatrix) -> StationaryVector:
    """
    Autovetor à esquerda de A para o autovalor lambda_tilde, normalizado.

    Itera sobre (lam + I)^T: mesmos autovetores de A, mas aperiódica, então a
    iteração converge mesmo para matrizes como [[0,1],[1,0]].
    """
    r = m.r
    shifted = m.lam + np.eye(r)
    pi = np.full(r, 1.0 / r)
    for iteration in range(1, POWER_ITERATION_CAP + 1):
        nxt = pi @ shifted
        nxt /= nxt.sum()
        change = float(np.max(np.abs(nxt - pi)) / np.max(np.abs(nxt)))
        pi = nxt
        if change < POWER_ITERATION_TOLERANCE:
            residual = float(np.max(np.abs(pi @ m.a_matrix - m.lambda_tilde * pi)))
            return StationaryVector(pi=pi, residual=residual, iterations=iteration)
    raise ConvergenceError(f"iteração de potência não convergiu em {POWER_ITERATION_CAP} passos")


def operator_norm(kernel: FiniteKernel, m: MeanOffspringMatrix) -> OperatorNorm:
    """||T_kappa|| = lambda_tilde + 1, conferido pelo maior valor singular de D^1/2 kappa D^1/2."""
    root = np.sqrt(kernel.mu)
    symmetric = root[:, np.newaxis] * kernel.kappa * root[np.newaxis, :]
    singular = float(np.linalg.svd(symmetric, compute_uv=False)[0])
    return OperatorNorm(value=m.lambda_tilde + 1.0, singular_value=singular)


def survival_probability(lambda_tilde: float, tol: float = 1e-13) -> float:
    """
    Maior raiz de rho = 1 - exp(-(lambda_tilde + 1) rho).

    Iteração de ponto fixo monótona a partir de 1.0 (decresce até a raiz maximal).
    """
    if lambda_tilde <= 0:
        raise KernelValidationError(f"processo subcrítico (lambda_tilde = {lambda_tilde}): sem raiz positiva")
    c = lambda_tilde + 1.0
    rho = 1.0
    for _ in range(SURVIVAL_ITERATION_CAP):
        nxt = 1.0 - math.exp(-c * rho)
        if abs(nxt - rho) <= tol:
            return nxt
        rho = nxt
    raise ConvergenceError(f"ponto fixo de sobrevivência não convergiu (lambda_tilde = {lambda_tilde})")


def collision_rate(kernel: FiniteKernel, m: MeanOffspringMatrix, pi: np.ndarray | None = None) -> float:
    """Taxa do processo de colisões: lambda_tilde * sum_s pi_s^2 / mu_s (= lambda_tilde se homogêneo)."""
    pi = stationary_type_vector(m).pi if pi is None else np.asarray(pi, dtype=float)
    return float(m.lambda_tilde * np.sum(pi ** 2 / kernel.mu))
