# tests/test_runner.py
import json
import math
from pathlib import Path

import numpy as np
import pytest

from common.exceptions import ConfigurationError, ProcessExtinctError
from common.utils.io import read_rows_csv
from services.experiment_runner.src.experiments import EXPERIMENTS
from services.experiment_runner.src.experiments.base import CriteriaBook, column, finite
from services.experiment_runner.src.experiments.dense import _check_increasing, dense_lambda
from services.experiment_runner.src.experiments.embedding import EmbeddingContext, bound_steps, embedding_replication
from services.experiment_runner.src.main import main
from services.experiment_runner.src.pipeline import ROWS_FILE, SUMMARY_FILE, run_experiment
from services.experiment_runner.src.runner import ReplicationOutput, run_replications
from services.experiment_runner.src.schemas import (
    load_experiment_config,
    load_suite_config,
    parse_experiment_config,
)
from services.experiment_runner.src.suite import SUITE_REPORT_FILE, run_suite

# --- CONFIGURAÇÕES ---
EXPERIMENTS_DIR = Path(__file__).resolve().parents[1] / "infra" / "local" / "experiments"
ER_KERNEL = {"type": "finite", "name": "er-c2", "mu": [1.0], "kappa": [[2.0]]}


# --- HELPERS ---

def embedding_config(**overrides) -> dict:
    config = {"name": "embedding-pequeno", "experiment": "embedding", "kernel": ER_KERNEL,
              "n_values": [10, 20], "replications": 6, "master_seed": 11}
    config.update(overrides)
    return config


def write_config(tmp_path, data: dict, name: str = "config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def flaky_replication(ctx, index, seed):
    if index % 2:
        raise ProcessExtinctError("extinto", attempts=1)
    return ReplicationOutput(rows=[{"run_id": index}])


# --- TESTES DE CONFIGURAÇÃO ---

@pytest.mark.parametrize("overrides", [
    {"experiment": "nope"},
    {"n_values": [3]},
    {"n_values": []},
    {"replications": 0},
    {"a_n_rule": "cubic"},
    {"campo_extra": 1},
])
def test_invalid_configs_are_rejected(overrides):
    with pytest.raises(ConfigurationError):
        parse_experiment_config(embedding_config(**overrides))


def test_freeze_rules():
    config = parse_experiment_config(embedding_config())
    assert config.freeze_for(10_000) == 100
    power = parse_experiment_config(embedding_config(a_n_rule="power", a_n_power=0.4))
    assert power.freeze_for(10_000) == 40


def test_bundled_configs_are_valid():
    """CENÁRIO: todo arquivo de experimento do repositório valida e carrega o kernel."""
    paths = [p for p in sorted(EXPERIMENTS_DIR.glob("*.json")) if p.name != "suite.json"]
    assert paths
    for path in paths:
        config = load_experiment_config(path)
        assert config.experiment in EXPERIMENTS
        assert config.load_kernel().m.lambda_tilde > 0
    suite = load_suite_config(EXPERIMENTS_DIR / "suite.json")
    assert len(suite.experiments) == len(paths)


# --- TESTES DE CRITÉRIOS ---

def test_criteria_book_thresholds():
    config = parse_experiment_config(embedding_config(thresholds={"ks": 0.5}))
    book = CriteriaBook(config)
    assert book.check("ks", 0.3, 0.1).passed          # limiar sobrescrito
    assert not book.check("gap", 0.3, 0.1).passed
    assert not book.check("nan", math.nan, 1.0).passed
    assert not book.check("none", None, 1.0).passed
    assert book.check("shift", 2.0, 1.0, ">").passed
    assert book.check("ks[n=10]", 0.4, 0.1, key="ks").threshold == 0.5


def test_column_helpers():
    rows = [{"n": 10, "x": 1.0}, {"n": 10, "x": None}, {"n": 20, "x": 3.0}]
    assert finite(column(rows, "x", n=10)).tolist() == [1.0]
    assert column(rows, "x").size == 3


# --- TESTES DO RUNNER ---

def test_rejected_replications_are_counted():
    batch = run_replications(flaky_replication, None, 6, 0, "teste")
    assert [o.index for o in batch.accepted] == [0, 2, 4]
    assert batch.rejection_reasons() == {"ProcessExtinctError": 3}
    assert [row["run_id"] for row in batch.rows] == [0, 2, 4]


def test_results_do_not_depend_on_worker_count(er_kernel):
    context = EmbeddingContext(er_kernel, 30)
    serial = run_replications(embedding_replication, context, 8, 5, "embedding", workers=1)
    parallel = run_replications(embedding_replication, context, 8, 5, "embedding", workers=2)
    assert serial.rows == parallel.rows


def test_run_experiment_writes_outputs(tmp_path):
    summary = run_experiment(parse_experiment_config(embedding_config()), out=tmp_path)
    out_dir = tmp_path / "embedding-pequeno"
    assert summary.passed
    assert summary.requested == 12 and summary.accepted == 12 and summary.rejected == 0
    assert (out_dir / SUMMARY_FILE).exists()
    rows = read_rows_csv(out_dir / ROWS_FILE)
    assert len(rows) == summary.accepted
    assert {row["n"] for row in rows} == {"10", "20"}


def test_csv_is_byte_identical_across_workers(tmp_path):
    config = parse_experiment_config(embedding_config())
    run_experiment(config, workers=1, out=tmp_path / "serial")
    run_experiment(config, workers=2, out=tmp_path / "parallel")
    serial = (tmp_path / "serial" / "embedding-pequeno" / ROWS_FILE).read_bytes()
    parallel = (tmp_path / "parallel" / "embedding-pequeno" / ROWS_FILE).read_bytes()
    assert serial == parallel


def test_seed_override(tmp_path):
    config = parse_experiment_config(embedding_config())
    summary = run_experiment(config, seed=99, out=tmp_path)
    assert summary.master_seed == 99
    assert config.master_seed == 11


def test_summary_is_recomputable_from_rows(tmp_path):
    """CENÁRIO: a média do resumo sai das linhas do CSV."""
    config = parse_experiment_config({
        "name": "gumbel-pequeno", "experiment": "gumbel_min", "kernel": ER_KERNEL, "replications": 3,
        "params": {"draws": 500, "identity_reps": 0, "i_max": 60},
    })
    summary = run_experiment(config, out=tmp_path)
    rows = read_rows_csv(tmp_path / "gumbel-pequeno" / ROWS_FILE)
    values = np.array([float(row["value"]) for row in rows])
    assert values.size == summary.statistics["draws"] == 1500
    assert values.mean() == pytest.approx(summary.statistics["mean"], abs=1e-12)


SMOKE_CONFIGS = [
    {"experiment": "hopcount_clt", "n_values": [300], "params": {"i_max": 3}},
    {"experiment": "weight_limit", "n_values": [200, 400], "params": {"w_splits": 200}},
    {"experiment": "dense_setting", "n_values": [100], "params": {"rule": "power", "power": 0.3}},
    {"experiment": "bp_asymptotics", "params": {"m": 50}},
    {"experiment": "bp_asymptotics", "params": {"m": 50, "condition_on_survival": False}},
    {"experiment": "coupling_error", "n_values": [10_000], "params": {"m": 20}},
    {"experiment": "collision_ppp", "n_values": [500], "params": {"i_max": 3, "min_runs": 5, "freeze_reps": 4}},
    {"experiment": "thinning_bounds", "n_values": [200]},
    {"experiment": "step_kernel_convergence", "n_values": [200],
     "kernel": {"type": "torus_step", "profile": "indicator", "scale": 4.0, "m_parts": 16},
     "params": {"m_parts": [8, 16]}},
]


@pytest.mark.parametrize("overrides", SMOKE_CONFIGS, ids=lambda c: c["experiment"])
def test_every_recipe_runs_at_small_scale(tmp_path, overrides):
    """CENÁRIO: cada receita roda em escala mínima e grava linhas e critérios."""
    data = {"experiment": overrides["experiment"], "kernel": ER_KERNEL, "replications": 8, "master_seed": 3}
    data.update(overrides)
    summary = run_experiment(parse_experiment_config(data), out=tmp_path)
    assert summary.accepted > 0
    assert summary.criteria
    rows = read_rows_csv(tmp_path / summary.name / ROWS_FILE)
    assert len(rows) >= summary.accepted


def test_thinning_bounds_use_steps_after_root(tmp_path):
    """CENÁRIO: k splits incluem o da raiz, então o limite usa k - 1 passos."""
    assert bound_steps(1) == 1 and bound_steps(100) == 99
    config = parse_experiment_config({"experiment": "thinning_bounds", "kernel": ER_KERNEL, "n_values": [200],
                                      "replications": 4, "master_seed": 5})
    summary = run_experiment(config, out=tmp_path)
    # k = ceil(sqrt(200)) = 15, lambda_tilde = 1
    assert summary.statistics["thinned_fraction_bound"] == pytest.approx(2.0 * 14 / 200)


def test_step_kernel_requires_torus_kernel(tmp_path):
    config = parse_experiment_config({"experiment": "step_kernel_convergence", "kernel": ER_KERNEL,
                                      "replications": 1})
    with pytest.raises(ConfigurationError):
        run_experiment(config, out=tmp_path)


def test_dense_rules():
    assert dense_lambda("power", 10_000, 0.5) == pytest.approx(100.0)
    assert dense_lambda("log", 100) == pytest.approx(math.log(100))
    with pytest.raises(ConfigurationError):
        dense_lambda("sqrt", 100)
    with pytest.raises(ConfigurationError):
        dense_lambda("power", 100, 0.0)
    with pytest.raises(ConfigurationError):
        _check_increasing("log", [32], 0.3)


# --- TESTES DA CLI ---

def test_kernel_check_command(capsys, kernel_file):
    code = main(["kernel-check", "--kernel", str(kernel_file("two_type_symmetric"))])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["lambda_tilde"] == pytest.approx(1.0)
    assert report["homogeneous"] and report["irreducible"]
    assert report["operator_norm"] == pytest.approx(report["singular_value"])
    assert report["survival_probability"] == pytest.approx(0.796812, abs=1e-6)


def test_run_command_exit_codes(tmp_path):
    ok = write_config(tmp_path, embedding_config(), "ok.json")
    assert main(["run", "--config", str(ok), "--out", str(tmp_path / "out")]) == 0

    # limiar impossível: o critério falha e a saída é 1
    failing = write_config(tmp_path, embedding_config(thresholds={"vertex_mismatches": -1}), "failing.json")
    assert main(["run", "--config", str(failing), "--out", str(tmp_path / "out")]) == 1

    invalid = write_config(tmp_path, embedding_config(experiment="nope"), "invalid.json")
    assert main(["run", "--config", str(invalid), "--out", str(tmp_path / "out")]) == 2
    assert main(["run", "--config", str(tmp_path / "nao_existe.json")]) == 2


def test_empty_suite_passes(tmp_path):
    suite = write_config(tmp_path, {"experiments": []}, "suite.json")
    assert main(["suite", "--config", str(suite), "--out", str(tmp_path / "out")]) == 0
    report = json.loads((tmp_path / "out" / SUITE_REPORT_FILE).read_text(encoding="utf-8"))
    assert report["passed"] and report["entries"] == []


def test_suite_records_invalid_entries(tmp_path):
    """CENÁRIO: uma entrada inválida é registrada, as outras rodam e a suíte falha."""
    write_config(tmp_path, embedding_config(), "ok.json")
    suite = load_suite_config(write_config(tmp_path, {
        "experiments": ["ok.json", {"experiment": "nope", "kernel": ER_KERNEL, "replications": 1}],
    }, "suite.json"))
    report = run_suite(suite, base_dir=tmp_path, out=tmp_path / "out")
    assert [e.status for e in report.entries] == ["passed", "invalid"]
    assert not report.passed
    assert (tmp_path / "out" / "embedding-pequeno" / SUMMARY_FILE).exists()
