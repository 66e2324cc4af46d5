"""Completely positive and completely bounded operator-valued kernels on finite sets."""

from .algebra import (
    DEFAULT_TOL,
    canonical_shuffle,
    eig_hermitian,
    is_psd,
    jordan_split,
    psd_factor,
    schur_product,
)
from .decomp import (
    KolDecomp,
    decomp_to_difference,
    difference_kolmogorov,
    four_cp,
    kolmogorov_general,
    kolmogorov_hermitian,
    kolmogorov_positive,
    offdiagonal_complete,
    reconstruct,
    verify_decomp,
)
from .errors import (
    DeadlineExceeded,
    DimensionError,
    InternalConsistencyError,
    NotHermitianError,
    NotPSDError,
    PreconditionError,
    SdpError,
)
from .extension import (
    LocalPair,
    PairCache,
    SubsetChain,
    build_L0,
    local_solution_check,
    pad,
    pair_completion,
    pair_kernel,
    radius,
    restrict,
)
from .kernel import (
    Kernel,
    Kernel2x2,
    assemble_2x2,
    bimodule_check,
    conjugate_2x2,
    involution,
    is_cb_kernel_norm,
    is_cp_2x2,
    is_cp_kernel,
    leq,
    re_im,
    schur_op,
)
from .linmap import (
    LinMap,
    adjoint_map,
    apply,
    cb_norm,
    cb_norm_lower_bound,
    is_cp_map,
    is_hermitian_map,
    tensor_id,
)

__version__ = "0.1.0"
