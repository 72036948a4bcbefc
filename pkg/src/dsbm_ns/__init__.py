"""Planar Novikov-Shubin invariants and bulk spectral densities of dense
directed stochastic block models.

The pipeline has three legs that cross-validate each other:

1. exact combinatorics - normal form of the variance profile, block
   relation graph, and the rational cycle invariant kappa (c_NS = 2 kappa);
2. analysis - the coupled Dyson system at eta = 0, the bulk density, and
   the near-origin exponent structure, which must reproduce kappa;
3. Monte Carlo - sampled adjacency spectra whose radial statistics match
   the self-consistent density.
"""

from .blockgraph import (
    BlockRelationGraph,
    KappaResult,
    LHD,
    PREC,
    brute_force_kappa,
    build_block_graph,
    check_strong_connectivity,
    kappa_of,
    min_cycle_mean,
    traversal_cost,
)
from .dyson import (
    DensityEvaluation,
    DysonParams,
    DysonSolution,
    ExponentProfile,
    ScalingCheck,
    VariationalReport,
    density_sigma,
    density_sigma_via_integral,
    exponent_profile,
    functional_J,
    scaling_check,
    solve_dyson,
    verify_variational,
)
from .errors import (
    DsbmError,
    DomainViolationError,
    EigFailureError,
    LabelNotPresentError,
    MatrixFormatError,
    NegativeArgumentError,
    NonConvergenceError,
    NoSupportError,
    NotIrreducibleError,
    NotStronglyConnectedError,
    QuadratureFailureError,
    SingularKernelError,
    TauOutOfRangeError,
    TooLargeError,
    ZeroVarianceError,
)
from .rmt import (
    RadialCDF,
    SBMSpec,
    SpectralSample,
    esd_vs_sigma,
    radial_cdf,
    sample_adjacency,
    spectrum,
    theoretical_radial_cdf,
)
from .structure import (
    NormalForm,
    Permutation,
    PositiveDiagonal,
    VarianceProfile,
    ZeroBlock,
    ZeroPattern,
    has_support,
    is_fully_indecomposable,
    is_irreducible,
    is_primitive,
    load_variance_profile,
    normal_form,
    spectral_radius,
    variance_profile_from_dict,
    zero_pattern,
)

__version__ = "0.1.0"
