"""Pseudospectral solvers for nonlocal elastic strain waves and their
unidirectional long-wave reductions, with an asymptotic validation harness."""

from ._version import __version__  # noqa: F401
from .spectral import (  # noqa: F401
    FourierSymbol,
    Grid,
    ResolutionError,
    SpectrumField,
    WaveField,
    apply_symbol,
    convolve,
    dealias,
    dealiased_product,
    derivative,
    forward,
    fractional_laplacian,
    inverse,
    make_grid,
    resample,
    shift,
)
from .kernels import (  # noqa: F401
    ClassificationResult,
    KernelSpec,
    classify_symbol,
    exponential_kernel,
    fractional_kernel,
    load_kernel_table,
    tabulated_kernel,
)
from .models import (  # noqa: F401
    EvolutionOperator,
    FirstOrderState,
    ModelSpec,
    SecondOrderState,
    build_operator,
    build_parent,
    build_unidirectional,
    build_unidirectional_scaled,
    conserved_mass,
)
from .timestepping import (  # noqa: F401
    BlowUpError,
    ProbeFitError,
    StepLimitError,
    StepPolicy,
    Trajectory,
    integrate,
    step_order_probe,
)
from .asymptotics import (  # noqa: F401
    FrameParams,
    HierarchyTerms,
    SmallParams,
    expansion_residual,
    frame_params,
    hierarchy_terms,
    inverse_frame_map,
    original_frame_map,
    scale_down,
    unidirectional_initial_data,
)
from .harness import (  # noqa: F401
    ComparisonResult,
    ConvergenceReport,
    ExperimentConfig,
    FrameConsistencyReport,
    Horizon,
    ProfileSpec,
    SolitonReport,
    boundary_contamination,
    conservation_report,
    default_experiment,
    fit_orders,
    frame_consistency_check,
    kdv_soliton,
    profile_field,
    run_comparison,
    soliton_benchmark,
    sweep_from_rule,
)
