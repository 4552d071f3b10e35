# common/schemas/results.py
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


# Veredito de um critério de aceitação: value <op> threshold
class CriterionVerdict(BaseModel):
    name: str
    value: Optional[float] = None
    threshold: Optional[float] = None
    comparison: str = Field(..., pattern="^(<=|>=|<|>|==)$")
    passed: bool
    detail: Optional[str] = None


class ExperimentSummary(BaseModel):
    """
    Bloco de resumo de um experimento. ``statistics`` é recalculável a partir
    das linhas do CSV; ``wall_clock_seconds`` é o único valor que não é.
    """
    name: str
    experiment: str
    kernel: str
    master_seed: int
    n_values: List[int]
    requested: int
    accepted: int
    rejected: int
    rejection_reasons: Dict[str, int] = {}
    statistics: Dict[str, Optional[float]] = {}
    criteria: List[CriterionVerdict] = []
    passed: bool
    wall_clock_seconds: float
    rows_file: Optional[str] = None
    ecdf_files: List[str] = []


class SuiteEntry(BaseModel):
    config: str
    experiment: Optional[str] = None
    status: str = Field(..., pattern="^(passed|failed|invalid|error)$")
    failed_criteria: List[str] = []
    error: Optional[str] = None
    summary_file: Optional[str] = None


class SuiteReport(BaseModel):
    entries: List[SuiteEntry] = []
    passed: bool = True
    wall_clock_seconds: float = 0.0


class KernelCheckReport(BaseModel):
    name: str
    r: int
    lambda_tilde: float
    homogeneous: bool
    max_row_deviation: float
    irreducible: bool
    primitive: bool
    pi: List[float]
    pi_residual: float
    pi_mu_distance: float
    operator_norm: float
    singular_value: float
    collision_rate: float
    survival_probability: Optional[float] = None
