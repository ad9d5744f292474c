"""musyn: mu-analysis, DK-iteration mu-synthesis, and multi-model
uncertainty characterization for LTI robust control."""

from .dfit import (
    DScaleSystem,
    FittedWeight,
    MagnitudeData,
    constant_weight,
    fit_dscale,
    fit_minphase_magnitude,
    poles_zeros,
)
from .dkiter import (
    AutoOrder,
    DecisionChannel,
    DkResult,
    FixedOrder,
    InteractiveOrder,
    IterationRecord,
    ListOrder,
    RobustPerformanceSpec,
    augment_for_performance,
    dk_iterate,
    scale_plant,
)
from .errors import (
    AlgebraicLoop,
    BracketExhausted,
    DimensionMismatch,
    GridMismatch,
    InfeasibleOverbound,
    IterationError,
    MusynError,
    NotDetectable,
    NotHermitian,
    NotStabilizable,
    NumericalRooting,
    RankDeficient,
    ReconstructionIllConditioned,
    SingularAtFrequency,
    SolverFailure,
    UnstableSystem,
)
from .hinf import SynthesisResult, hinf_syn_lmi, hinf_syn_lmi_bisect
from .lti import (
    FrequencyGrid,
    FrequencyResponseData,
    GeneralizedPlant,
    StateSpace,
    dc_gain,
    freq_response,
    hinf_norm,
    is_stable,
    lft_lower,
    lft_lower_frd,
    simulate,
    ss_balance,
    ss_block_diag,
    ss_identity,
    ss_series,
)
from .sdp import SdpProblem, SdpSolution, realify_hermitian, solve_feasibility
from .ssv import (
    BlockKind,
    BlockStructure,
    DScaleResponse,
    SsvResult,
    UncertaintyBlock,
    ssv_upper,
)
from .umodel import (
    ResidualForm,
    WeightResponse,
    WeightStructure,
    fit_uncertainty_weight,
    max_sv_curve,
    reconstruct_offnominal,
    residual_response,
    weight_response,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraicLoop",
    "AutoOrder",
    "BlockKind",
    "BlockStructure",
    "BracketExhausted",
    "DScaleResponse",
    "DScaleSystem",
    "DecisionChannel",
    "DimensionMismatch",
    "DkResult",
    "FittedWeight",
    "FixedOrder",
    "FrequencyGrid",
    "FrequencyResponseData",
    "GeneralizedPlant",
    "GridMismatch",
    "InfeasibleOverbound",
    "InteractiveOrder",
    "IterationError",
    "IterationRecord",
    "ListOrder",
    "MagnitudeData",
    "MusynError",
    "NotDetectable",
    "NotHermitian",
    "NotStabilizable",
    "NumericalRooting",
    "RankDeficient",
    "ReconstructionIllConditioned",
    "ResidualForm",
    "RobustPerformanceSpec",
    "SdpProblem",
    "SdpSolution",
    "SingularAtFrequency",
    "SolverFailure",
    "SsvResult",
    "StateSpace",
    "SynthesisResult",
    "UncertaintyBlock",
    "UnstableSystem",
    "WeightResponse",
    "WeightStructure",
    "augment_for_performance",
    "constant_weight",
    "dc_gain",
    "dk_iterate",
    "fit_dscale",
    "fit_minphase_magnitude",
    "fit_uncertainty_weight",
    "freq_response",
    "hinf_norm",
    "hinf_syn_lmi",
    "hinf_syn_lmi_bisect",
    "is_stable",
    "lft_lower",
    "lft_lower_frd",
    "max_sv_curve",
    "poles_zeros",
    "realify_hermitian",
    "reconstruct_offnominal",
    "residual_response",
    "scale_plant",
    "simulate",
    "solve_feasibility",
    "ss_balance",
    "ss_block_diag",
    "ss_identity",
    "ss_series",
    "ssv_upper",
    "weight_response",
]
