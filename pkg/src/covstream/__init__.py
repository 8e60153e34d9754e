"""Streaming covariance maintenance with rank-k updates, downdates and LDL factors."""

from covstream.core import (
    CovarianceState,
    LdlState,
    MeanState,
    covariance,
    data_matrix,
    from_columns,
    reconstruct,
)
from covstream.errors import (
    CountTooSmall,
    CovStreamError,
    DegenerateForm,
    DimensionMismatch,
    LostDefiniteness,
    MatrixFileError,
    NonFiniteData,
    NotPositiveDefinite,
    RemoveTooMany,
    SingularFactor,
)
from covstream.ldl import (
    ldl_factor,
    ldl_mixed_modify,
    ldl_rank_k_modify,
    ldl_state,
    mahalanobis_sq,
    rank1_modify,
    solve,
)
from covstream.moments import (
    KFactor,
    MixedCoefficient,
    apply_rank_k,
    downdate,
    downdate_asymmetric,
    make_k_downdate,
    make_k_update,
    mean_downdate,
    mean_update,
    mixed_coefficient,
    mixed_two_mean,
    mixed_update_downdate,
    update,
)
from covstream.window import WindowConfig, window_init, window_score, window_slide

__version__ = "0.1.0"
