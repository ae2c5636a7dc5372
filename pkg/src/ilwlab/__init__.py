"""Gibbs measures, Wick renormalization and truncated dynamics for the
intermediate long wave (ILW) family and its Benjamin-Ono / KdV limits."""

__version__ = "0.1.0"

from ._backend import NAME as BACKEND  # noqa: F401
from .dispersion import (  # noqa: F401
    INFINITE,
    SHALLOW,
    FamilyError,
    Finite,
    Infinite,
    Shallow,
    h_frak,
    h_shallow,
    k_delta,
    l_delta,
    mittag_leffler_l,
    q_delta,
    symbol,
)
from .hermite import (  # noqa: F401
    DegreeError,
    WickVariance,
    hermite,
    hermite_shift_check,
    sigma_deep,
    sigma_kdv,
    sigma_kdv_limit,
    sigma_shallow,
)
from .fields import (  # noqa: F401
    FieldKind,
    SeededRng,
    SpectralField,
    bo_gauss,
    deep_gauss,
    kdv_gauss,
    sample_field,
    scaled_gauss,
    sobolev_norm,
)
from .gibbs import (  # noqa: F401
    CutoffCubic,
    Defocusing,
    TamedCubic,
    WickContext,
    density,
    mh_sample,
    potential_r,
    snis_sample,
    wick_power,
)
from .metrics import (  # noqa: F401
    hellinger_product,
    kakutani_sum,
    kl_deep,
    ky_fan,
    pinsker_check,
    scheffe_tv,
    weak_marginal_distance,
)
from .dynamics import (  # noqa: F401
    EvolutionSpec,
    deep_gilw,
    evolve,
    gbo,
    gkdv,
    hamiltonian,
    invariance_test,
    limit_study,
    scaled_gilw,
)
