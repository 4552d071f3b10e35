# common/stats/distributions.py
"""Funções de distribuição usadas pelos critérios de aceitação (scipy.special por baixo)."""
import numpy as np
from scipy import special

from common.exceptions import DistributionParameterError

EULER_GAMMA = float(np.euler_gamma)
GUMBEL_VARIANCE = float(np.pi ** 2 / 6.0)


def _positive(name: str, value: float):
    if not value > 0 or not np.isfinite(value):
        raise DistributionParameterError(f"{name} deve ser positivo e finito (recebido {value})")


def cdf_normal(x):
    return special.ndtr(x)


def cdf_gumbel(x):
    """Lambda(x) = exp(-e^{-x})."""
    return np.exp(-np.exp(-np.asarray(x, dtype=float)))


def cdf_gamma(x, shape: float, rate: float):
    _positive("shape", shape)
    _positive("rate", rate)
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, special.gammainc(shape, rate * np.maximum(x, 0.0)), 0.0)


def cdf_exp(x, rate: float = 1.0):
    _positive("rate", rate)
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, -np.expm1(-rate * np.maximum(x, 0.0)), 0.0)


def cdf_uniform(x):
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


def cdf_gumbel_min(z, lambda_tilde: float):
    """
    Lei de min_i {(1/lambda_tilde) log P_i + E_i} com P_i um PPP(1) e E_i ~ Exp(1):
    P(min >= z) = exp(-e^{lambda_tilde z} / (lambda_tilde + 1)).
    """
    _positive("lambda_tilde", lambda_tilde)
    z = np.asarray(z, dtype=float)
    return -np.expm1(-np.exp(lambda_tilde * z) / (lambda_tilde + 1.0))


def gumbel_min_mean(lambda_tilde: float) -> float:
    _positive("lambda_tilde", lambda_tilde)
    return (np.log(lambda_tilde + 1.0) - EULER_GAMMA) / lambda_tilde


def sample_gumbel(rng: np.random.Generator, size) -> np.ndarray:
    # inversa de exp(-e^{-x})
    return -np.log(-np.log(1.0 - rng.random(size)))
