# tests/test_ctbp.py
import numpy as np
import pytest

from common.branching.coupling import coupled_bin_poi_run, decoupling_bound
from common.branching.ctbp import (
    alive_dead_profile,
    check_summable_errors,
    estimate_w,
    generation_sample,
    mgf_self_consistency,
    normalized_split_gaps,
    run_bp,
    run_until_survival,
    split_time_decomposition,
)
from common.branching.offspring import (
    InverseCdfSampler,
    _inverse_cdf_table,
    binomial_law,
    fixed_law,
    make_sampler,
    poisson_law,
)
from common.exceptions import ConfigurationError, ProcessExtinctError, SimulationError
from common.kernel.finite import mean_offspring, survival_probability
from common.stats.distributions import cdf_exp
from common.stats.goodness import ks_statistic, mean_with_se
from common.utils.seeding import as_generator, child_seed

# --- CONFIGURAÇÕES ---
SEED = 424242


# --- HELPERS ---

def er_law(er_kernel):
    return poisson_law(mean_offspring(er_kernel))


# --- TESTES DE LEIS DE DESCENDÊNCIA ---

def test_fixed_law_validation():
    with pytest.raises(ConfigurationError):
        fixed_law([[1, 2]])
    with pytest.raises(ConfigurationError):
        fixed_law([[-1]])


def test_binomial_law_excludes_self(two_type_kernel):
    """CENÁRIO: um vértice do tipo s tem n_s - 1 candidatos do próprio tipo."""
    law = binomial_law(two_type_kernel, 10)
    assert law.trials.tolist() == [[4, 5], [5, 4]]
    assert law.prob == pytest.approx(np.array([[0.1, 0.3], [0.3, 0.1]]))


def test_inverse_sampler_matches_poisson_mean(er_kernel):
    sampler = InverseCdfSampler(er_law(er_kernel), as_generator(SEED))
    draws = np.array([sampler.draw(0)[0] for _ in range(20_000)])
    assert draws.mean() == pytest.approx(2.0, abs=0.05)


def test_inverse_cdf_tables_stay_short(two_type_kernel):
    """CENÁRIO: n = 10^6, as tabelas param no quantil da cauda e não em N + 2."""
    for law in (binomial_law(two_type_kernel, 1_000_000), poisson_law(mean_offspring(two_type_kernel))):
        for s in range(2):
            for t in range(2):
                table = _inverse_cdf_table(law, s, t)
                assert 2 < table.size < 40
                assert np.all(np.diff(table) >= 0)
                assert table[-1] == 1.0
                assert table[-2] >= 1.0 - 1e-10


def test_unknown_sampler_is_rejected(er_kernel):
    with pytest.raises(ConfigurationError):
        make_sampler(er_law(er_kernel), as_generator(SEED), "rejection")


# --- TESTES DE TRAJETÓRIA ---

def test_single_child_law_is_a_chain():
    """CENÁRIO: um filho por split mantém S = 1 e a geração da viva é m."""
    state = run_bp(fixed_law([[1]]), 0, 50, SEED)
    assert state.m == 50
    assert np.all(state.alive_total == 1)
    alive = np.flatnonzero(state.alive_mask(50))
    assert state.generation[alive].tolist() == [50]


def test_two_children_law_grows_linearly():
    state = run_bp(fixed_law([[2]]), 0, 100, SEED)
    assert state.alive_total.tolist() == list(range(1, 102))
    assert check_summable_errors([state], C=1.0, m=100) == 1.0


def test_alive_count_conservation(two_type_kernel):
    """CENÁRIO: S_j - S_{j-1} = filhos do split j - 1."""
    law = poisson_law(mean_offspring(two_type_kernel))
    state = run_bp(law, 0, 300, SEED, record_children=True)
    assert np.array_equal(np.diff(state.alive_total), state.children.sum(axis=1) - 1)
    assert np.all(np.diff(state.tau) > 0)


def test_first_split_is_standard_exponential(er_kernel):
    law = er_law(er_kernel)
    taus = [run_bp(law, 0, 1, child_seed(SEED, i)).tau[1] for i in range(4000)]
    assert ks_statistic(taus, lambda x: cdf_exp(x, 1.0)) <= 0.03


def test_normalized_gaps_are_standard_exponential(er_kernel):
    state, _ = run_until_survival(er_law(er_kernel), 0, 5000, SEED)
    gaps = normalized_split_gaps(state)
    assert gaps.size == 5000
    assert ks_statistic(gaps, lambda x: cdf_exp(x, 1.0)) <= 0.03


def test_extinct_trajectory_has_zero_w():
    state = run_bp(fixed_law([[0]]), 0, 10, SEED)
    assert state.extinct and state.m == 1
    estimate = estimate_w(state, 10)
    assert estimate.w_hat == 0.0 and not estimate.survived


def test_profile_at_zero_is_the_root(two_type_kernel):
    state = run_bp(poisson_law(mean_offspring(two_type_kernel)), 1, 10, SEED)
    profile = alive_dead_profile(state, 0)
    assert profile.alive.tolist() == [0, 1]
    assert profile.dead.tolist() == [0, 0]
    assert generation_sample(state, 0, {1}, SEED) == 0
    with pytest.raises(SimulationError):
        generation_sample(state, 0, {0}, SEED)


def test_split_time_decomposition_is_exact(er_kernel):
    state, _ = run_until_survival(er_law(er_kernel), 0, 500, SEED)
    for k in (1, 10, 500):
        parts = split_time_decomposition(state, k)
        assert parts.total == pytest.approx(parts.tau_k, abs=1e-9)


def test_run_bp_argument_checks(er_kernel):
    with pytest.raises(SimulationError):
        run_bp(er_law(er_kernel), 0, 0, SEED)
    with pytest.raises(SimulationError):
        run_bp(er_law(er_kernel), 3, 5, SEED)


def test_run_until_survival_gives_up():
    with pytest.raises(ProcessExtinctError):
        run_until_survival(fixed_law([[0]]), 0, 5, SEED, max_attempts=3)


def test_survival_frequency_matches_rho(er_kernel):
    """CENÁRIO: a fração que chega a 200 splits estima rho(1) = 0.7968."""
    law = er_law(er_kernel)
    reached = [run_bp(law, 0, 200, child_seed(SEED, i)).survived_to(200) for i in range(3000)]
    estimate = mean_with_se(np.array(reached, dtype=float))
    assert estimate.within(survival_probability(1.0), k=4.0)


@pytest.mark.slow
def test_martingale_limit_satisfies_mgf_identity(er_kernel):
    law = er_law(er_kernel)
    w = [estimate_w(run_bp(law, 0, 300, child_seed(SEED, i)), 300).w_hat for i in range(3000)]
    for check in mgf_self_consistency(w, 1.0):
        assert check.discrepancy <= 0.03


# --- TESTES DE ACOPLAMENTO ---

def test_decoupling_bound_formula(two_type_kernel):
    assert decoupling_bound(two_type_kernel, 1_000_000, 100) == pytest.approx(6e-4)


def test_coupled_runs_agree_until_they_decouple(two_type_kernel):
    """CENÁRIO: sem evento de desacoplamento as duas trajetórias são idênticas."""
    agreed = 0
    for i in range(20):
        run = coupled_bin_poi_run(two_type_kernel, 1_000_000, 0, 50, child_seed(SEED, i))
        if run.decouple_split is None:
            agreed += 1
            assert np.array_equal(run.binomial.tau, run.poisson.tau)
            assert np.array_equal(run.binomial.alive_total, run.poisson.alive_total)
        else:
            j = run.decouple_split
            assert np.array_equal(run.binomial.tau[:j], run.poisson.tau[:j])
    assert agreed >= 15


def test_coupling_rejects_m_above_n(two_type_kernel):
    with pytest.raises(ConfigurationError):
        coupled_bin_poi_run(two_type_kernel, 10, 0, 11, SEED)
