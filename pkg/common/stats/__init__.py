from common.stats.distributions import (
    EULER_GAMMA,
    cdf_exp,
    cdf_gamma,
    cdf_gumbel,
    cdf_gumbel_min,
    cdf_normal,
    cdf_uniform,
    gumbel_min_mean,
    sample_gumbel,
)
from common.stats.goodness import (
    EmpiricalSample,
    correlation,
    export_ecdf,
    ks_critical_value,
    ks_statistic,
    ks_two_sample,
    ks_two_sample_critical_value,
    mean_with_se,
)
from common.stats.identities import gumbel_sum_moments, max_exp_identity_check
