"""kypcert: Bounded Real Lemma certificates for systems with dichotomy.

Spectral splitting of state operators, transfer-function analysis on the unit
circle, truncated Laurent/Toeplitz/Hankel operators, explicit extremal
storage certificates, and standard/strict/bicausal/time-varying KYP
certification.
"""

from . import errors
from ._kernels import available_backends, get_backend, set_backend
from .certify import (
    CONTRACTIVE_CERTIFIED,
    INCONCLUSIVE,
    NOT_CONTRACTIVE,
    STRICTLY_CONTRACTIVE_CERTIFIED,
    CertificationReport,
    certify_bicausal,
    certify_standard,
    certify_strict,
    choose_epsilon,
    report_to_json,
)
from .frequency import (
    LaurentSlice,
    OperatorQuadruple,
    TruncationWindow,
    build_laurent,
    build_quadruple,
    default_window,
    eval_transfer,
    gain_profile,
    hinf_norm,
    laurent_coeff,
    laurent_slice,
    tail_envelope,
    write_gain_csv,
)
from .nonstationary import (
    LiftedSystem,
    PeriodicSystem,
    TvCertificate,
    TvDichotomyReport,
    lift_stationary,
    monodromy,
    rotate_period,
    solve_tv_kyp,
    tv_dichotomy,
    tv_kyp_residuals,
)
from .storage import (
    DouglasFactor,
    GramianData,
    KypCertificate,
    MinimalityReport,
    bicausal_kyp_residual,
    build_gramians,
    certificate_from_json,
    certificate_to_json,
    check_exact_minimality,
    compute_Ha,
    compute_Hr,
    defect,
    douglas_factor,
    inertia,
    kyp_residual,
    read_certificate,
    write_certificate,
)
from .systems import (
    AugmentedSystem,
    BicausalRealization,
    DichotomousDecomposition,
    StateSpaceSystem,
    augment_epsilon,
    augment_epsilon_bicausal,
    dichotomy_split,
    from_bicausal,
    spectral_margin,
    spectral_radius,
    split_state_space,
    to_bicausal,
)
from .trajectory import (
    Trajectory,
    dissipation_residuals,
    map_states,
    interpolate_bicausal,
    interpolate_state,
    patch,
    simulate,
    simulate_bicausal,
    trajectory_from_csv,
    trajectory_residuals,
    trajectory_to_csv,
)

__version__ = "0.1.0"
