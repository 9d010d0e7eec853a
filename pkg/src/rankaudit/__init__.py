"""rankaudit: matched-pair bias audits for score-based ranking systems.

The library builds matched pairs of near-tied cross-group items, estimates
the matched-pair calibration (MPC) metric with bootstrap or cluster-robust
inference, verifies the swap identity linking MPC to boost deltas on small
instances, and ships an SVD ranker, isotonic calibration, a confounded
synthetic world, and a CLI that runs full audits end to end.
"""

from .calibration import IsotonicFit, calibrate_scores, calibrate_slates, pava_fit
from .core import (
    Item,
    PositionWeights,
    RankedSlate,
    ScoreModifier,
    apply_modifier,
    delta_alpha,
    objective_value,
    rank_by_score,
    rerank_with_modifier,
)
from .errors import (
    AuditError,
    ConfigurationError,
    InfeasibleWorldError,
    InferenceUndefinedError,
    InputError,
    InvariantViolationError,
    UndefinedMetricError,
    UnseenEntityError,
)
from .inference import (
    BootstrapConfig,
    DyadicVariance,
    MpcTest,
    bootstrap_ci,
    bootstrap_mean_ci,
    dyadic_cluster_variance,
    test_mpc_zero,
)
from .matching import (
    MatchedPair,
    MatchedPairSet,
    PairConfig,
    build_pair_set,
    build_pairs_epsilon,
    build_pairs_k_smallest,
    epsilon_from_percentile,
    filter_adjacent,
    pool_across_queries,
)
from .metrics import (
    CalibrationCurve,
    MpcEstimate,
    calibration_curve,
    mpc,
    mpc_position_weighted,
    ndcg,
)
from .synthetic import (
    SyntheticDataset,
    SyntheticWorld,
    expected_relevance,
    generate,
    population_mpc,
    solve_type_mixture,
)
from .theory import (
    Swap,
    SwapTrace,
    count_misranked,
    decompose_by_position,
    swap_decomposition,
)

__version__ = "0.1.0"

__all__ = [
    "AuditError",
    "BootstrapConfig",
    "CalibrationCurve",
    "ConfigurationError",
    "DyadicVariance",
    "InfeasibleWorldError",
    "InferenceUndefinedError",
    "InputError",
    "InvariantViolationError",
    "IsotonicFit",
    "Item",
    "MatchedPair",
    "MatchedPairSet",
    "MpcEstimate",
    "MpcTest",
    "PairConfig",
    "PositionWeights",
    "RankedSlate",
    "ScoreModifier",
    "Swap",
    "SwapTrace",
    "SyntheticDataset",
    "SyntheticWorld",
    "UndefinedMetricError",
    "UnseenEntityError",
    "apply_modifier",
    "bootstrap_ci",
    "bootstrap_mean_ci",
    "build_pair_set",
    "build_pairs_epsilon",
    "build_pairs_k_smallest",
    "calibrate_scores",
    "calibrate_slates",
    "calibration_curve",
    "count_misranked",
    "decompose_by_position",
    "delta_alpha",
    "dyadic_cluster_variance",
    "epsilon_from_percentile",
    "expected_relevance",
    "filter_adjacent",
    "generate",
    "mpc",
    "mpc_position_weighted",
    "ndcg",
    "objective_value",
    "pava_fit",
    "pool_across_queries",
    "population_mpc",
    "rank_by_score",
    "rerank_with_modifier",
    "solve_type_mixture",
    "swap_decomposition",
    "test_mpc_zero",
    "__version__",
]
