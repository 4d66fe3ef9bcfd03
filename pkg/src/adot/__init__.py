"""Adversarial sample-based optimal transport with adaptive features.

The package solves the quadratic-cost transport problem between two point
clouds by a minimax game: a parametric gradient map pushes the source
toward the target while an adaptive test function searches for remaining
distribution mismatch.  Long displacements are split into a chain of
nearby local problems whose maps compose into the global one.
"""

from .features import (
    AdaptiveFamily,
    DerivativeBundle,
    DiagonalScale,
    DirectionalScale,
    DiscriminatorParams,
    FullMatrixScale,
    GaussianBump,
    IsotropicScale,
    ParamLayout,
    PotentialParams,
    default_family,
    derivative_bundle,
    eval_discriminator,
    potential_value,
    transport_map,
)
from .objective import (
    LagrangianValue,
    NonFiniteError,
    PenaltyConfig,
    TwistedDerivatives,
    default_penalty_config,
    init_discriminator,
    kl_estimate,
    lagrangian,
    penalty,
    twisted_derivatives,
)
from .local import (
    LocalSolution,
    NeedsSmallerEta,
    SolverConfig,
    StallError,
    fit_discriminator,
    implicit_step,
    solve_local,
)
from .transport import (
    ComposedMap,
    GlobalConfig,
    Trajectory,
    TransportResult,
    apply_map,
    backward_sweep,
    forward_sweep,
    init_trajectory,
    solve_transport,
    transport_cost,
)
from .datasets import (
    AffineGaussian,
    AnnulusSpec,
    DatasetSpec,
    GaussianSpec,
    MixtureSpec,
    PowerMap,
    PowerPairSpec,
    ReferenceMap,
    Shift,
    generate,
    power_pair,
    reference_eval,
)
from .linear import (
    FeatureFunction,
    LinearFamily,
    compatibility_matrix,
    make_linear_feature_space,
    polynomial_feature,
)
from .metrics import (
    MetricsReport,
    convergence_suite,
    evaluation_grid,
    feature_mean_gap,
    map_error_metrics,
)

__version__ = "0.1.0"
