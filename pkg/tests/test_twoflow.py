# tests/test_twoflow.py
import math

import numpy as np
import pytest

from common.branching.twoflow import (
    argmin_tail_check,
    assemble_path_statistics,
    collision_label_uniformity,
    default_freeze,
    dominating_sums,
    freeze_point_invariance,
    gumbel_min_ks,
    gumbel_min_sampler,
    ppp_check,
    run_two_flow,
    thinned_collision_fraction,
)
from common.exceptions import InsufficientSampleError, SimulationError
from common.kernel.finite import build_finite_kernel
from common.stats.distributions import EULER_GAMMA, gumbel_min_mean
from common.stats.goodness import ks_two_sample_critical_value
from common.utils.seeding import child_seed

# --- CONFIGURAÇÕES ---
SEED = 90210
N = 2000


# --- HELPERS ---

@pytest.fixture(scope="module")
def er_results():
    kernel, _ = build_finite_kernel([1.0], [[2.0]])
    return [run_two_flow(kernel, N, i_max=3, seed=child_seed(SEED, i)) for i in range(30)]


# --- TESTES DOS DOIS FLUXOS ---

def test_default_freeze_is_sqrt():
    assert default_freeze(2000) == 45
    assert default_freeze(10_000) == 100


def test_two_flow_result_structure(er_results):
    """CENÁRIO: colisões crescentes, H = G_x + G_y + 1 e P = tau_x + min(tau_C + E)."""
    for result in er_results:
        assert result.a_n == default_freeze(N)
        splits = [c.split for c in result.collisions]
        assert splits == sorted(splits) and len(set(splits)) == len(splits)
        assert [c.index for c in result.collisions] == list(range(1, len(splits) + 1))
        assert 1 <= result.argmin_index <= len(result.collisions)
        chosen = result.chosen
        assert chosen.g_x >= 0 and chosen.g_y >= 0
        assert result.H_n == chosen.g_x + chosen.g_y + 1
        times = [c.connection_time for c in result.collisions]
        assert result.P_n == pytest.approx(result.tau_x_an + min(times))
        assert result.scaled_split(1) == pytest.approx(splits[0] * result.a_n / N)
        assert result.truncated == (len(splits) < 3)
        assert 0 <= chosen.label_rank < chosen.type_pool_size


def test_path_statistics_decomposition(er_results):
    for result in er_results:
        stats = assemble_path_statistics(result)
        parts = stats.decomposition
        assert parts.tau_x_an + parts.min_term == pytest.approx(stats.P_n)
        assert stats.H_n == stats.g_x + stats.g_y + 1


def test_two_flow_is_reproducible(er_kernel):
    a = run_two_flow(er_kernel, 500, i_max=2, seed=SEED)
    b = run_two_flow(er_kernel, 500, i_max=2, seed=SEED)
    assert a.P_n == b.P_n and a.H_n == b.H_n
    assert a.collisions == b.collisions


@pytest.mark.parametrize("a_n", [0, 500, 600])
def test_freeze_point_must_be_inside_range(er_kernel, a_n):
    with pytest.raises(SimulationError):
        run_two_flow(er_kernel, 500, a_n=a_n, seed=SEED)


def test_i_max_must_be_positive(er_kernel):
    with pytest.raises(SimulationError):
        run_two_flow(er_kernel, 500, i_max=0, seed=SEED)


def test_ppp_check_needs_enough_runs(er_results):
    with pytest.raises(InsufficientSampleError):
        ppp_check(er_results, 1.0)
    report = ppp_check(er_results, 1.0, min_runs=10)
    assert report.count == len(er_results)
    assert report.rate_estimate > 0


def test_thinned_and_uniformity_reports(er_results):
    thinned = thinned_collision_fraction(er_results)
    assert 0.0 <= thinned.fraction <= 1.0
    assert thinned.mean_bound > 0
    uniformity = collision_label_uniformity(er_results, SEED)
    assert uniformity.count == len(er_results)
    assert 0.0 <= uniformity.ks <= 1.0
    with pytest.raises(InsufficientSampleError):
        thinned_collision_fraction([])


@pytest.mark.slow
def test_first_collision_is_exponential(er_kernel):
    """CENÁRIO: C^(1) a_n / n ~ Exp(lambda_hat) com lambda_hat = 1 no ER."""
    results = [run_two_flow(er_kernel, 4000, i_max=3, seed=child_seed(SEED, 1, i)) for i in range(600)]
    report = ppp_check(results, 1.0)
    assert report.first_ks <= 0.1
    assert abs(report.gap_correlation) <= 0.15


def test_freeze_point_invariance_uses_the_minimum(er_kernel):
    """CENÁRIO: cada amostra é o P_n de run_two_flow com i_max colisões, não só a primeira."""
    invariance = freeze_point_invariance(er_kernel, 1000, 8, SEED, i_max=10)
    assert invariance.freezes == {0.4: 16, 0.5: 32, 0.6: 64}
    for j, (p, a_n) in enumerate(invariance.freezes.items()):
        sample = invariance.samples[p]
        assert sample.size == 8
        full = run_two_flow(er_kernel, 1000, a_n, 10, child_seed(SEED, j, 0))
        first = run_two_flow(er_kernel, 1000, a_n, 1, child_seed(SEED, j, 0))
        assert sample[0] == full.P_n
        assert full.P_n <= first.P_n
    assert 0.0 <= invariance.max_ks <= 1.0


@pytest.mark.slow
def test_weight_law_does_not_depend_on_freeze_point(er_kernel):
    invariance = freeze_point_invariance(er_kernel, 4000, 300, SEED, i_max=10)
    assert invariance.max_ks <= ks_two_sample_critical_value(300, 300)


# --- TESTES DO MÍNIMO INDEXADO POR PPP ---

def test_gumbel_min_mean_closed_form():
    assert gumbel_min_mean(1.0) == pytest.approx(math.log(2.0) - EULER_GAMMA)


def test_gumbel_min_sampler_matches_law():
    sample = gumbel_min_sampler(1.0, 200, 200_000, SEED, truncate_at=50)
    assert sample.values.mean() == pytest.approx(gumbel_min_mean(1.0), abs=0.01)
    assert gumbel_min_ks(sample.values, 1.0) <= 0.01
    # P(argmin > 50) = 2^-50: truncar não muda nada na prática
    assert abs(sample.values.mean() - sample.truncated.mean()) < 1e-3
    assert sample.argmins.min() >= 1


def test_argmin_tail_is_geometric():
    sample = gumbel_min_sampler(2.0, 60, 100_000, SEED)
    checks = argmin_tail_check(sample.argmins, 2.0, range(1, 9))
    assert all(check.passed for check in checks)
    with pytest.raises(InsufficientSampleError):
        argmin_tail_check([], 2.0, [1])


def test_gumbel_sampler_rejects_bad_parameters():
    with pytest.raises(SimulationError):
        gumbel_min_sampler(0.0, 10, 10)
    with pytest.raises(SimulationError):
        gumbel_min_sampler(1.0, 0, 10)


def test_dominating_sum_mean():
    """CENÁRIO: E[sum_{i<=N} E_i] = E[N] / lambda_tilde = (lambda_tilde + 1) / lambda_tilde."""
    sums = dominating_sums(1.0, 100_000, SEED)
    assert sums.mean() == pytest.approx(2.0, abs=0.03)
    assert np.all(sums > 0)
