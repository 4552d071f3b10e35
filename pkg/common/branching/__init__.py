from common.branching.coupling import CoupledRun, coupled_bin_poi_run, decoupling_bound
from common.branching.ctbp import (
    BpState,
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
from common.branching.labeled import (
    FlowTree,
    LabeledFlow,
    compare_embedding,
    embedding_equivalence,
    multiple_label_count,
    run_graph_driven,
    run_labeled_bp,
    thinned_alive_fraction,
)
from common.branching.offspring import OffspringLaw, binomial_law, fixed_law, poisson_law
from common.branching.twoflow import (
    CollisionRecord,
    TwoFlowResult,
    argmin_tail_check,
    assemble_path_statistics,
    collision_label_uniformity,
    conditional_generation_correlation,
    freeze_point_invariance,
    geometric_dominance_check,
    gumbel_min_sampler,
    ppp_check,
    run_two_flow,
    thinned_collision_fraction,
)
