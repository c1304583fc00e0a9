"""Security analysis of laser-damage + unambiguous-state-discrimination attacks on decoy-state BB84."""

__version__ = "0.1.0"

from .attacks import (
    PNS3,
    AttackConfig,
    ModifiedUSD,
    StandardUSD,
    YieldProfile,
    attack_gains,
    lda_transform,
    modified_usd_gain_closed,
    modified_usd_yield,
    pns3_yield_profile,
    usd_gain_closed,
    usd_yield,
)
from .errors import DomainError, NoSignalError, NoThresholdError, QkdlabError, UnattainableError
from .estimator import (
    DecoyEstimate,
    DecoyParams,
    ErrorSet,
    GainSet,
    binary_entropy,
    e1_upper,
    estimate,
    gain_from_yields,
    key_rate,
    poisson_pmf,
    y1_lower,
)
from .montecarlo import McConfig, McEstimate, mc_conclusive_prob, mc_gain
from .thresholds import (
    Method,
    ThresholdResult,
    analytic_modified_threshold,
    analytic_pns3_threshold,
    analytic_usd_threshold,
    realistic_threshold,
    solve_modified_threshold,
    solve_pns3_threshold,
    solve_usd_threshold,
)

__all__ = [
    "analytic_modified_threshold",
    "analytic_pns3_threshold",
    "analytic_usd_threshold",
    "attack_gains",
    "AttackConfig",
    "binary_entropy",
    "DecoyEstimate",
    "DecoyParams",
    "DomainError",
    "e1_upper",
    "ErrorSet",
    "estimate",
    "gain_from_yields",
    "GainSet",
    "key_rate",
    "lda_transform",
    "mc_conclusive_prob",
    "mc_gain",
    "McConfig",
    "McEstimate",
    "Method",
    "modified_usd_gain_closed",
    "modified_usd_yield",
    "ModifiedUSD",
    "NoSignalError",
    "NoThresholdError",
    "PNS3",
    "pns3_yield_profile",
    "poisson_pmf",
    "QkdlabError",
    "realistic_threshold",
    "solve_modified_threshold",
    "solve_pns3_threshold",
    "solve_usd_threshold",
    "StandardUSD",
    "ThresholdResult",
    "UnattainableError",
    "usd_gain_closed",
    "usd_yield",
    "y1_lower",
    "YieldProfile",
]
