"""Hardy-Littlewood maximal functions, ball coverings and Poisson kernels on
finite metric measure spaces and model domains."""

__version__ = "0.1.0"

from .errors import AlgorithmFailure, DomainError, HLKitError, PreconditionError
from .space import (Ball, MeasurableSet, MetricMeasureSpace, MetricReport, ball_members,
                    doubling_ratio, max_doubling_ratio, measure, verify_metric_axioms)
from .maximal import (ChainTrace, SampledFunction, WeakTypeReport, boundary_slack, distribution,
                      hl_maximal, l1_norm, maximal_field, maximal_profile,
                      restricted_weak_type_test, weak_type_pipeline)
from .covering import (CoverSelection, RefinedCover, containment_cap, density_radius,
                       refine_cover, vitali_select, wiener_select)
from .differentiation import (ConvergenceReport, ball_average, ball_averages,
                              differentiation_experiment, geometric_radii)

__all__ = [
    "__version__", "AlgorithmFailure", "DomainError", "HLKitError", "PreconditionError",
    "Ball", "MeasurableSet", "MetricMeasureSpace", "MetricReport", "ball_members",
    "doubling_ratio", "max_doubling_ratio", "measure", "verify_metric_axioms",
    "ChainTrace", "SampledFunction", "WeakTypeReport", "boundary_slack", "distribution",
    "hl_maximal", "l1_norm", "maximal_field", "maximal_profile", "restricted_weak_type_test",
    "weak_type_pipeline", "CoverSelection", "RefinedCover", "containment_cap", "density_radius",
    "refine_cover", "vitali_select", "wiener_select", "ConvergenceReport", "ball_average",
    "ball_averages", "differentiation_experiment", "geometric_radii",
]
