# common/kernel/spec.py
"""
Arquivo de especificação de kernel (JSON).

  { "type": "finite", "mu": [...], "kappa": [[...]] }
  { "type": "torus_step", "profile": "indicator|quadratic|table|constant",
    "scale": s, "m_parts": m, "table": [...] }
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, Field, TypeAdapter, ValidationError, model_validator

from common.exceptions import KernelValidationError
from common.kernel.finite import FiniteKernel, MeanOffspringMatrix, build_finite_kernel
from common.kernel.torus import (
    DEFAULT_QUAD_POINTS,
    TorusProfile,
    TorusStepKernel,
    build_torus_step_kernel,
    constant_profile,
    indicator_profile,
    quadratic_profile,
    table_profile,
)

logger = logging.getLogger("fpp-kernel")


class FiniteKernelSpec(BaseModel):
    type: Literal["finite"] = "finite"
    name: Optional[str] = None
    mu: List[float] = Field(..., min_length=1)
    kappa: List[List[float]]


class TorusKernelSpec(BaseModel):
    type: Literal["torus_step"] = "torus_step"
    name: Optional[str] = None
    profile: str = Field(..., pattern="^(indicator|quadratic|table|constant)$")
    scale: float = Field(..., ge=0)
    m_parts: int = Field(..., ge=1)
    table: Optional[List[float]] = None
    quad_points: int = Field(DEFAULT_QUAD_POINTS, ge=1)
    method: str = Field("exact", pattern="^(exact|midpoint)$")

    @model_validator(mode="after")
    def _table_required(self):
        if self.profile == "table" and not self.table:
            raise ValueError("perfil 'table' exige o campo 'table'")
        return self

    def build_profile(self) -> TorusProfile:
        if self.profile == "indicator":
            return indicator_profile()
        if self.profile == "quadratic":
            return quadratic_profile()
        if self.profile == "constant":
            return constant_profile()
        return table_profile(self.table)


KernelSpec = Annotated[Union[FiniteKernelSpec, TorusKernelSpec], Field(discriminator="type")]
_KERNEL_ADAPTER = TypeAdapter(KernelSpec)


@dataclass(frozen=True)
class LoadedKernel:
    """Kernel pronto para uso; ``torus`` só existe para especificações torus_step."""
    name: str
    kernel: FiniteKernel
    m: MeanOffspringMatrix
    torus: TorusStepKernel | None = None


def parse_kernel_spec(data: dict) -> FiniteKernelSpec | TorusKernelSpec:
    try:
        return _KERNEL_ADAPTER.validate_python(data)
    except ValidationError as e:
        raise KernelValidationError(f"especificação de kernel inválida: {e}") from e


def build_kernel(spec: FiniteKernelSpec | TorusKernelSpec) -> LoadedKernel:
    if isinstance(spec, FiniteKernelSpec):
        kernel, m = build_finite_kernel(spec.mu, spec.kappa)
        return LoadedKernel(name=spec.name or f"finite-r{kernel.r}", kernel=kernel, m=m)
    step, kernel, m = build_torus_step_kernel(
        spec.build_profile(), spec.scale, spec.m_parts, quad_points=spec.quad_points, method=spec.method
    )
    return LoadedKernel(name=spec.name or f"torus-{spec.profile}-m{spec.m_parts}", kernel=kernel, m=m, torus=step)


def load_kernel(path: str | Path) -> LoadedKernel:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise KernelValidationError(f"não foi possível ler o kernel {path}: {e}") from e
    loaded = build_kernel(parse_kernel_spec(data))
    logger.info(f"Kernel carregado de {path.name}: {loaded.name} (r={loaded.kernel.r}, lambda_tilde={loaded.m.lambda_tilde:.6f})")
    return loaded
