"""Fisher information of postselected weak measurement with coherent-state meters."""

from .errors import (
    DegenerateBranchError,
    DivergentCavityError,
    InvalidArgumentError,
    NumericalError,
    OrthogonalPostselectionError,
    PsmetError,
    SingularApproximationError,
    SingularLimitError,
    StepSizeError,
    TruncationOverflowError,
    UnsupportedOperationError,
)
from .info_measures import (
    FisherLedger,
    classical_fisher_two_outcome,
    conditional_qfi,
    cramer_rao_bound,
    fisher_ledger,
    fp_small_g_limit,
    joint_qfi,
    pd_derivative_closed,
    peak_phi0,
    qfi_pure,
    weak_value,
)
from .recycling import (
    EffectiveMirror,
    MirrorSpec,
    RecycledDistribution,
    RecycledLedger,
    cavity_gain,
    effective_mirror,
    f_pow_approx,
    f_pow_exact,
    recycled_distribution,
)
from .state_algebra import (
    BranchSuperposition,
    Component,
    MeterSpec,
    PostselectionDistribution,
    SelectionSpec,
    coherent_overlap,
    conditional_meter,
    meter_g_derivative,
    number_weighted_overlap,
    postselect_prob,
    postselect_prob_closed,
)

__version__ = "0.1.0"
