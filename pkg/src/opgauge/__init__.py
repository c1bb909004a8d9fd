"""Operator-level information measures for imaging chains.

An imaging chain is a composition of linear stages on a discretised object
space. From the singular spectrum of that composition this package computes
operator entropy, effective rank and capacity, and the irreversibility
index (with its hard/soft loss split), plus composition diagnostics and
noise experiments.
"""

__version__ = "0.1.0"

from .chain import (
    ComparisonReport,
    CompositionDiagnostics,
    SweepResult,
    chain_diagnostics,
    comparative_experiment,
    composition_diagnostics,
    marginal_loss,
    mtf_cutoff,
    search_comparison,
    stage_attribution,
    sweep,
)
from .chainfile import ChainSpec, load_chain, parse_chain_file, serialize_chain
from .errors import (
    CompositionError,
    EmptyOperatorError,
    InputError,
    InsufficientSpectrumError,
    OpgaugeError,
    ParameterError,
    StageError,
    StrategyError,
    ThresholdError,
    UnsupportedError,
)
from .grid import GridSpec
from .measures import (
    DerivedEpsilon,
    InfoReport,
    ModeWeights,
    ThresholdPolicy,
    capacity,
    effective_rank,
    info_report,
    irreversibility,
    local_capacity,
    mode_weights,
    operator_entropy,
)
from .noise import (
    NoiseModel,
    RecoverabilityResult,
    invariance_check,
    measure,
    recoverability_experiment,
    ridge_reconstruct,
    truncated_pinv_reconstruct,
)
from .operators import (
    RealizedOperator,
    circulant,
    compose,
    diagonal,
    from_matrix,
    identity,
    linearize,
    load_matrix_text,
    load_mtf_csv,
    mtf_to_spectrum,
    realize,
)
from .report import ReportDocument, render_spectrum_svg
from .spectral import (
    NumericalTolerance,
    SingularSpectrum,
    SvdFactors,
    analytic_spectrum,
    dense_svd,
    numerical_rank,
    randomized_svd,
)
from .stages import (
    Attenuation,
    GaussianBlur,
    KernelConvolution,
    MatrixStage,
    MTFStage,
    NonlinearStage,
    Sampling,
)
