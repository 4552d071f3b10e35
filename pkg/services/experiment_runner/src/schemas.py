# services/experiment_runner/src/schemas.py
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from common.exceptions import ConfigurationError
from common.kernel.spec import (
    FiniteKernelSpec,
    LoadedKernel,
    TorusKernelSpec,
    build_kernel,
    load_kernel,
    parse_kernel_spec,
)

logger = logging.getLogger("experiment-runner")

ExperimentName = Literal[
    "hopcount_clt",
    "weight_limit",
    "dense_setting",
    "bp_asymptotics",
    "collision_ppp",
    "gumbel_min",
    "embedding",
    "thinning_bounds",
    "coupling_error",
    "step_kernel_convergence",
]

MIN_N = 4


class ExperimentConfig(BaseModel):
    """
    Configuração de um experimento (arquivo JSON).
    ``params`` guarda os parâmetros específicos de cada receita e
    ``thresholds`` sobrescreve os limiares padrão dos critérios.
    """
    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = None
    experiment: ExperimentName
    kernel: Union[str, FiniteKernelSpec, TorusKernelSpec]
    n_values: List[int] = [10_000]
    replications: int = Field(..., ge=1)
    a_n_rule: str = Field("sqrt", pattern="^(sqrt|power)$")
    a_n_power: float = Field(0.5, gt=0, lt=1)
    master_seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)
    output: Optional[str] = None
    params: Dict[str, Any] = {}
    thresholds: Dict[str, float] = {}

    # diretório do arquivo de origem, para resolver caminhos relativos do kernel
    base_dir: Optional[str] = Field(None, exclude=True)

    @field_validator("n_values")
    @classmethod
    def _check_n(cls, values: List[int]) -> List[int]:
        if not values:
            raise ValueError("n_values não pode ser vazio")
        small = [n for n in values if n < MIN_N]
        if small:
            raise ValueError(f"n deve ser >= {MIN_N} (recebido {small})")
        return values

    @property
    def label(self) -> str:
        return self.name or self.experiment

    def param(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)

    def threshold(self, key: str, default: float) -> float:
        return float(self.thresholds.get(key, default))

    def kernel_spec(self) -> FiniteKernelSpec | TorusKernelSpec:
        if not isinstance(self.kernel, str):
            return self.kernel
        path = self._resolve(self.kernel)
        try:
            return parse_kernel_spec(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"não foi possível ler o kernel {path}: {e}") from e

    def load_kernel(self) -> LoadedKernel:
        if isinstance(self.kernel, str):
            return load_kernel(self._resolve(self.kernel))
        return build_kernel(self.kernel)

    def _resolve(self, relative: str) -> Path:
        path = Path(relative)
        if not path.is_absolute() and self.base_dir and not path.exists():
            path = Path(self.base_dir) / path
        return path

    def freeze_for(self, n: int) -> int:
        if self.a_n_rule == "sqrt":
            return math.ceil(math.sqrt(n))
        return max(1, math.ceil(n ** self.a_n_power))


class SuiteConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiments: List[Union[str, Dict[str, Any]]] = []
    output: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)


def parse_experiment_config(data: dict, base_dir: str | Path | None = None) -> ExperimentConfig:
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"configuração inválida: {e}") from e
    if base_dir is not None:
        config.base_dir = str(base_dir)
    return config


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"não foi possível ler {path}: {e}") from e


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_experiment_config(_read_json(path), base_dir=path.parent)


def load_suite_config(path: str | Path) -> SuiteConfig:
    path = Path(path)
    try:
        return SuiteConfig.model_validate(_read_json(path))
    except ValidationError as e:
        raise ConfigurationError(f"suite inválida: {e}") from e
