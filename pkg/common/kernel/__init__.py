from common.kernel.finite import (
    FiniteKernel,
    MeanOffspringMatrix,
    build_finite_kernel,
    check_homogeneity,
    check_irreducibility,
    collision_rate,
    operator_norm,
    scale_kernel,
    stationary_type_vector,
    survival_probability,
)
from common.kernel.spec import LoadedKernel, build_kernel, load_kernel, parse_kernel_spec
from common.kernel.torus import TorusStepKernel, build_torus_step_kernel
