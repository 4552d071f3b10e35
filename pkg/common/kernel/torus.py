# common/kernel/torus.py
"""
Kernels de translação no círculo [0,1) e suas aproximações em degraus.

O kernel é kappa(x, y) = scale * h(d(x, y)), com d a distância no toro.
A média sobre cada par de células de uma partição em m partes iguais dá uma
matriz circulante; como kappa só depende de (y - x), basta integrar a
primeira linha.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from common.exceptions import KernelValidationError
from common.kernel.finite import FiniteKernel, MeanOffspringMatrix, build_finite_kernel

logger = logging.getLogger("fpp-kernel")

DEFAULT_QUAD_POINTS = 32
QUAD_TOLERANCE = 1e-12


def torus_distance(x, y):
    diff = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    return np.minimum(diff, 1.0 - diff)


@dataclass(frozen=True)
class TorusProfile:
    """
    Perfil par h >= 0 avaliado na distância do toro d em [0, 1/2].
    ``kinks`` são as distâncias onde h não é suave (pontos de quebra da quadratura).
    """
    name: str
    h: Callable[[np.ndarray], np.ndarray]
    kinks: tuple[float, ...] = ()
    integral: float | None = None

    def __call__(self, d):
        return self.h(np.asarray(d, dtype=float))


def indicator_profile(radius: float = 0.25) -> TorusProfile:
    return TorusProfile(
        name="indicator",
        h=lambda d: (d < radius).astype(float),
        kinks=(radius,),
        integral=min(2.0 * radius, 1.0),
    )


def quadratic_profile() -> TorusProfile:
    # h(z) = z^2 no domínio fundamental [-1/2, 1/2)
    return TorusProfile(name="quadratic", h=lambda d: d * d, kinks=(0.0, 0.5), integral=1.0 / 12.0)


def constant_profile() -> TorusProfile:
    return TorusProfile(name="constant", h=lambda d: np.ones_like(d), integral=1.0)


def table_profile(values: Sequence[float]) -> TorusProfile:
    """Tabela de h em pontos igualmente espaçados de d em [0, 1/2], interpolada linearmente."""
    table = np.asarray(values, dtype=float)
    if table.ndim != 1 or table.size < 2:
        raise KernelValidationError("a tabela do perfil precisa de pelo menos 2 valores")
    if np.any(table < 0) or not np.all(np.isfinite(table)):
        raise KernelValidationError("o perfil tabelado contém valores negativos ou não finitos")
    grid = np.linspace(0.0, 0.5, table.size)
    return TorusProfile(name="table", h=lambda d: np.interp(d, grid, table), kinks=tuple(grid.tolist()))


def profile_integral(profile: TorusProfile) -> float:
    """Integral de h(d(z)) sobre o círculo (= 2 * integral de 0 a 1/2)."""
    if profile.integral is not None:
        return profile.integral
    points = [p for p in profile.kinks if 0.0 < p < 0.5]
    value, _ = integrate.quad(lambda d: float(profile(d)), 0.0, 0.5, points=points or None,
                              epsabs=QUAD_TOLERANCE, epsrel=QUAD_TOLERANCE, limit=200)
    return 2.0 * value


@dataclass(frozen=True)
class TorusStepKernel:
    m_parts: int
    profile: TorusProfile
    scale: float
    averaged: np.ndarray = field(repr=False)

    def exact(self, x, y):
        return self.scale * self.profile(torus_distance(x, y))

    def cell_of(self, x) -> np.ndarray:
        cells = np.floor(np.asarray(x, dtype=float) * self.m_parts).astype(np.int64)
        return np.clip(cells, 0, self.m_parts - 1)

    def step(self, x, y):
        return self.averaged[self.cell_of(x), self.cell_of(y)]

    def weighted_row_sums(self) -> np.ndarray:
        return self.averaged.sum(axis=1) / self.m_parts


def _circulant(first_row: np.ndarray) -> np.ndarray:
    m = first_row.size
    idx = (np.arange(m)[np.newaxis, :] - np.arange(m)[:, np.newaxis]) % m
    return first_row[idx]


def _triangle_average(profile: TorusProfile, m: int, k: int) -> float:
    """
    Média de h(d(x, y)) com x na célula 0 e y na célula k.

    A convolução de duas indicadoras de largura 1/m é um triângulo, então a
    média dupla vira m * int_{-1/m}^{1/m} (1 - m|u|) h(d(k/m + u)) du.
    """
    center = k / m
    half = 1.0 / m
    breaks = set()
    for kink in profile.kinks:
        for base in (kink, -kink, 1.0 - kink, kink - 1.0, 1.0 + kink, -1.0 - kink):
            u = base - center
            if -half < u < half:
                breaks.add(u)
    breaks.add(0.0)

    def integrand(u: float) -> float:
        return (1.0 - m * abs(u)) * float(profile(torus_distance(center + u, 0.0)))

    value, _ = integrate.quad(integrand, -half, half, points=sorted(breaks),
                              epsabs=QUAD_TOLERANCE, epsrel=QUAD_TOLERANCE, limit=200)
    return m * value


def _midpoint_row(profile: TorusProfile, m: int, quad_points: int) -> np.ndarray:
    offsets = (np.arange(quad_points) + 0.5) / (quad_points * m)
    row = np.empty(m)
    for k in range(m):
        d = torus_distance(offsets[:, np.newaxis], k / m + offsets[np.newaxis, :])
        row[k] = float(profile(d).mean())
    return row


def build_torus_step_kernel(
    profile: TorusProfile,
    scale: float,
    m_parts: int,
    quad_points: int = DEFAULT_QUAD_POINTS,
    method: str = "exact",
) -> tuple[TorusStepKernel, FiniteKernel, MeanOffspringMatrix]:
    """
    Aproximação em degraus de scale * h(d(x, y)) numa partição com ``m_parts`` células.

    method="exact": quadratura adaptativa da forma triangular (erro <= 1e-10).
    method="midpoint": regra do ponto médio tensorial com ``quad_points`` por eixo.
    """
    if m_parts < 1:
        raise KernelValidationError("m_parts deve ser >= 1")
    if scale < 0 or not np.isfinite(scale):
        raise KernelValidationError(f"escala inválida: {scale}")
    samples = profile(np.linspace(0.0, 0.5, 1025))
    if np.any(samples < 0) or not np.all(np.isfinite(samples)):
        raise KernelValidationError(f"o perfil {profile.name} tem valores negativos ou não finitos")

    if method == "exact":
        half = np.array([_triangle_average(profile, m_parts, k) for k in range(m_parts // 2 + 1)])
        row = np.concatenate([half, half[1:(m_parts + 1) // 2][::-1]])
    elif method == "midpoint":
        row = _midpoint_row(profile, m_parts, quad_points)
    else:
        raise KernelValidationError(f"método de quadratura desconhecido: {method}")

    averaged = scale * _circulant(row)
    # circulante e par: simétrica, mas a soma em ponto flutuante pode deixar ruído
    averaged = 0.5 * (averaged + averaged.T)
    step = TorusStepKernel(m_parts=m_parts, profile=profile, scale=scale, averaged=averaged)
    kernel, m = build_finite_kernel(np.full(m_parts, 1.0 / m_parts), averaged)
    logger.debug(f"kernel em degraus {profile.name}: m={m_parts}, lambda_tilde={m.lambda_tilde:.10f}")
    return step, kernel, m
