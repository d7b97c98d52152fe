from .causal_sets import CausalSet, sample_in_domain, sprinkle
from .curves import (
    CausalCurve,
    CurveKind,
    CurveVerdict,
    classify_curve,
    limit_curve,
    timelike_perturbation,
)
from .development import DevelopmentKind, DevelopmentVerdict, development_membership
from .graphs import (
    AchronalGraph,
    AchronalVerdict,
    BlendFunction,
    CauchyVerdict,
    ConeFunction,
    ConstantFunction,
    is_achronal_graph,
    is_cauchy_graph,
    pairwise_lipschitz_scan,
)

__all__ = [
    "AchronalGraph",
    "AchronalVerdict",
    "BlendFunction",
    "CauchyVerdict",
    "CausalCurve",
    "CausalSet",
    "ConeFunction",
    "ConstantFunction",
    "CurveKind",
    "CurveVerdict",
    "DevelopmentKind",
    "DevelopmentVerdict",
    "classify_curve",
    "development_membership",
    "is_achronal_graph",
    "is_cauchy_graph",
    "limit_curve",
    "pairwise_lipschitz_scan",
    "sample_in_domain",
    "sprinkle",
    "timelike_perturbation",
]
