# tests/conftest.py
from pathlib import Path

import pytest

from common.kernel.finite import build_finite_kernel

ROOT = Path(__file__).resolve().parents[1]
KERNELS_DIR = ROOT / "infra" / "local" / "kernels"
EXPERIMENTS_DIR = ROOT / "infra" / "local" / "experiments"


@pytest.fixture
def er_kernel():
    """Erdős–Rényi com c = 2 (lambda_tilde = 1)."""
    kernel, _ = build_finite_kernel([1.0], [[2.0]])
    return kernel


@pytest.fixture
def two_type_kernel():
    """Dois tipos simétrico e homogêneo, lambda_tilde = 1 e max kappa = 3."""
    kernel, _ = build_finite_kernel([0.5, 0.5], [[1.0, 3.0], [3.0, 1.0]])
    return kernel


@pytest.fixture
def kernel_file():
    def _path(name: str) -> Path:
        return KERNELS_DIR / f"{name}.json"
    return _path
