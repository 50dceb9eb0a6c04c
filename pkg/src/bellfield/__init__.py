"""Random-field and quantum-superoperator models of polarizer experiments."""

from .angles import PolAngle
from .bell import (
    CoincidenceResult,
    GridTooCoarse,
    Mrf3Params,
    TriphotonGraph,
    brute_force_oracle,
    build_bell_graph,
    build_triphoton_graph,
    channel_sums,
    coincidence_probability,
)
from .dist import (
    DeltaCollision,
    DistFn,
    RegularizedDistFn,
    SigmaTooCoarse,
    dist_integrate,
    dist_mul,
    regularize,
)
from .graded import (
    DivergentLimit,
    GradedCoeff,
    MismatchedAlphaOrder,
    coeff_ratio_limit,
)
from .mrf import (
    EventPredicate,
    NodeFeature,
    Scenario,
    ScenarioGraph,
    VariableDecl,
    ZeroPartition,
    event_probability,
    event_unnormalized,
    forward_fold,
    partition_function,
    relative_probability,
)

__all__ = [
    "PolAngle",
    "GradedCoeff",
    "coeff_ratio_limit",
    "MismatchedAlphaOrder",
    "DivergentLimit",
    "DistFn",
    "RegularizedDistFn",
    "dist_mul",
    "dist_integrate",
    "regularize",
    "DeltaCollision",
    "SigmaTooCoarse",
    "VariableDecl",
    "Scenario",
    "NodeFeature",
    "EventPredicate",
    "ScenarioGraph",
    "ZeroPartition",
    "relative_probability",
    "event_unnormalized",
    "partition_function",
    "event_probability",
    "forward_fold",
    "Mrf3Params",
    "CoincidenceResult",
    "build_bell_graph",
    "channel_sums",
    "coincidence_probability",
    "brute_force_oracle",
    "TriphotonGraph",
    "build_triphoton_graph",
    "GridTooCoarse",
]

__version__ = "0.1.0"
