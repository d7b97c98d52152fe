from .checks import (
    BoundarySplit,
    ConjugateReport,
    ConvexityVerdict,
    DomainCauchyVerdict,
    ExpansionReport,
    GlueReport,
    boundary_samples,
    boundary_split,
    cauchy_in_domain,
    conjugate_construction,
    domain_dim,
    expansion_check,
    glue,
    is_causally_convex,
    null_corner,
)
from .kinds import (
    AllDomain,
    Diamond,
    Domain,
    FutureCone,
    Lens,
    PastCone,
    Union,
    minkowski_diamond,
)

__all__ = [
    "AllDomain",
    "BoundarySplit",
    "ConjugateReport",
    "ConvexityVerdict",
    "Diamond",
    "Domain",
    "DomainCauchyVerdict",
    "ExpansionReport",
    "FutureCone",
    "GlueReport",
    "Lens",
    "PastCone",
    "Union",
    "boundary_samples",
    "boundary_split",
    "cauchy_in_domain",
    "conjugate_construction",
    "domain_dim",
    "expansion_check",
    "glue",
    "is_causally_convex",
    "minkowski_diamond",
    "null_corner",
]
