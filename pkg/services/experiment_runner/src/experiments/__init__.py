# services/experiment_runner/src/experiments/__init__.py
"""Registro nome do experimento -> receita."""
from typing import Callable

from services.experiment_runner.src.experiments.base import ExperimentReport, RunContext
from services.experiment_runner.src.experiments.branching import run_bp_asymptotics, run_coupling_error
from services.experiment_runner.src.experiments.collisions import run_collision_ppp, run_gumbel_min
from services.experiment_runner.src.experiments.dense import run_dense_setting
from services.experiment_runner.src.experiments.embedding import run_embedding, run_thinning_bounds
from services.experiment_runner.src.experiments.hopcount import run_hopcount_clt, run_weight_limit
from services.experiment_runner.src.experiments.step_kernel import run_step_kernel_convergence

Recipe = Callable[[RunContext], ExperimentReport]

EXPERIMENTS: dict[str, Recipe] = {
    "hopcount_clt": run_hopcount_clt,
    "weight_limit": run_weight_limit,
    "dense_setting": run_dense_setting,
    "bp_asymptotics": run_bp_asymptotics,
    "collision_ppp": run_collision_ppp,
    "gumbel_min": run_gumbel_min,
    "embedding": run_embedding,
    "thinning_bounds": run_thinning_bounds,
    "coupling_error": run_coupling_error,
    "step_kernel_convergence": run_step_kernel_convergence,
}
