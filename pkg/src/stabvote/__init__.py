"""Stability, power and adversarial robustness of voting methods."""

from .errors import (
    ConstantFunctionError,
    InvariantError,
    ParseError,
    PreconditionError,
    StabvoteError,
    TieWarning,
    TooLargeError,
    ValidationError,
)
from .geometry import (
    SubsetMask,
    VulnerabilityReport,
    check_harper,
    half_ball,
    l0_distance,
    neighborhood,
    verify_majority_optimal,
    verify_threshold_optimal,
    vulnerable_count,
)
from .hypercube import N_DENSE, UNIFORM, BiasedMeasure, BooleanFunction, index_of, vector_of
from .methods import (
    Dictator,
    Majority,
    ThresholdMajority,
    TwoTier,
    UNCouncil,
    VotingMethod,
    WeightedMajority,
    evaluate,
    expectation,
    make_method,
    same_balance,
)
from .noise import (
    CorruptionModel,
    StabilityEstimate,
    asymptotic_small_eps,
    find_matching_threshold,
    majority_limit_stability,
    noise_operator,
    outcome_change_prob,
    sample_corrupted,
    stability_exact,
    stability_mc,
)
from .power import PivotalReport, banzhaf_indices, influence, majority_influence_exact, pivotal_count, pivotal_report

__version__ = "0.1.0"
