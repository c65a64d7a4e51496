"""Products of orthogonal projections on finite-dimensional spaces.

Library + experiment CLI for running index-scheduled products of
orthogonal projections, classifying the schedules that drive them, and
measuring the subspace geometry (angle cosine, inclinations) that
controls whether the products converge to the projection onto the
intersection.
"""

from projprod.geometry import (
    closed_sum_criterion,
    friedrichs_cb,
    inclination,
    inner_inclination,
)
from projprod.hilbert import (
    Projector,
    Subspace,
    as_vector,
    complement,
    distance,
    intersect,
    operator_norm,
    orthonormalize,
    project,
    projector_leq,
)
from projprod.iteration import (
    IterationTrace,
    ProjectorFamily,
    TailFamily,
    halperin_power,
    iterate,
)
from projprod.schedules import (
    compose_pseudo,
    is_pseudo_periodic,
    is_quasi_periodic,
    profile,
    sigma,
)

__version__ = "0.1.0"

__all__ = [
    "IterationTrace",
    "Projector",
    "ProjectorFamily",
    "Subspace",
    "TailFamily",
    "as_vector",
    "closed_sum_criterion",
    "complement",
    "compose_pseudo",
    "distance",
    "friedrichs_cb",
    "halperin_power",
    "inclination",
    "inner_inclination",
    "intersect",
    "is_pseudo_periodic",
    "is_quasi_periodic",
    "iterate",
    "operator_norm",
    "orthonormalize",
    "profile",
    "project",
    "projector_leq",
    "sigma",
    "__version__",
]
