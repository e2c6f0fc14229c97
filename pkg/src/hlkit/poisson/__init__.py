"""Poisson kernels of the disc, half-plane, ball and half-space, boundary
quadrature, and nontangential convergence experiments."""
from .domains import (BOUNDARY_TOL, ConeRegion, KernelDomain, asymptotic_ratio,
                      asymptotic_ratios, comparability_bounds, cone_contains, kernel,
                      kernel_eval, sample_pairs, survey_ratios)
from .quadrature import (PRODUCTION, BoundaryGrid, SurfaceBall, boundary_grid,
                         boundary_maximal, circle_grid, kernel_normalization, line_grid,
                         plane_grid, poisson_extend, sphere_grid, surface_ball, tail_mass,
                         truncation_for)
from .convergence import (APPROACH_COLUMNS, ApproachRow, cone_points, max_slant,
                          nontangential_experiment)

__all__ = [
    "BOUNDARY_TOL", "ConeRegion", "KernelDomain", "asymptotic_ratio", "asymptotic_ratios",
    "comparability_bounds", "cone_contains", "kernel", "kernel_eval", "sample_pairs",
    "survey_ratios", "PRODUCTION",
    "BoundaryGrid", "SurfaceBall", "boundary_grid", "boundary_maximal", "circle_grid",
    "kernel_normalization", "line_grid", "plane_grid", "poisson_extend", "sphere_grid",
    "surface_ball", "tail_mass", "truncation_for", "APPROACH_COLUMNS", "ApproachRow",
    "cone_points", "max_slant", "nontangential_experiment",
]
