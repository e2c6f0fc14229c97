"""Nontangential approach to boundary points."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import DomainError
from .domains import ConeRegion, KernelDomain
from .quadrature import BoundaryGrid, boundary_maximal, poisson_extend

SLANT_FRACTIONS = (0.9, 0.99)


def max_slant(domain: KernelDomain, y, alpha: float, h: float, tangent) -> float:
    """Largest angle from the inward normal, towards ``tangent``, at which the
    point at distance ``h`` from ``y`` still lies in the cone."""
    y = np.asarray(y, dtype=float)
    n = domain.inward_normal(y)

    def gap(phi):
        x = y + h * (np.cos(phi) * n + np.sin(phi) * tangent)
        return alpha * float(domain.delta(x)) - h

    if gap(0.0) <= 0:
        return 0.0
    if gap(np.pi / 2) > 0:
        return np.pi / 2
    return brentq(gap, 0.0, np.pi / 2, xtol=1e-15, rtol=1e-14)


def cone_points(domain: KernelDomain, y, alpha: float, h: float) -> np.ndarray:
    """The normal-ray point at distance ``h`` plus, for each signed tangent
    direction, points at 0.9 and 0.99 of the maximal slant."""
    y = domain.check_boundary(y)
    n = domain.inward_normal(y)
    pts = [y + h * n]
    for tau in domain.tangent_basis(y):
        for sign in (1.0, -1.0):
            phi_max = max_slant(domain, y, alpha, h, sign * tau)
            for frac in SLANT_FRACTIONS:
                phi = frac * phi_max
                pts.append(y + h * (np.cos(phi) * n + np.sin(phi) * sign * tau))
    return np.array(pts)


@dataclass
class ApproachRow:
    scale: float
    points: int
    max_error: float
    normal_error: float
    max_abs_u: float
    maximal_ratio: float

    def astuple(self):
        return (self.scale, self.points, self.max_error, self.normal_error,
                self.max_abs_u, self.maximal_ratio)


APPROACH_COLUMNS = ("scale", "points", "max_error", "normal_error", "max_abs_u", "maximal_ratio")


def nontangential_experiment(domain: KernelDomain, grid: BoundaryGrid, f, y: int, alpha: float,
                             scales, target: float | None = None) -> list[ApproachRow]:
    """Errors ``|u(x) - f(y)|`` for ``x`` in the cone at each approach scale.

    ``y`` is a node index of ``grid``.  ``maximal_ratio`` is
    ``max |u(x)| / M|f|(y)`` over the sampled points, the quantity a
    maximal-function bound controls.
    """
    if not alpha > 1:
        raise DomainError("aperture must exceed 1: the normal ray misses the cone otherwise")
    scales = np.asarray(scales, dtype=float).ravel()
    if scales.size == 0 or np.any(scales <= 0) or np.any(np.diff(scales) >= 0):
        raise DomainError("scales must be positive and strictly decreasing")
    f = np.asarray(f, dtype=float).ravel()
    apex = grid.nodes[int(y)]
    cone = ConeRegion(domain, tuple(apex), alpha)
    fy = float(f[int(y)]) if target is None else float(target)
    Mf = boundary_maximal(grid, f, int(y))
    rows = []
    for h in scales:
        pts = cone_points(domain, apex, alpha, h)
        if not all(cone.contains(p) for p in pts):
            raise DomainError(f"cone sample at scale {h} left the cone")
        u = np.atleast_1d(poisson_extend(domain, grid, f, pts))
        err = np.abs(u - fy)
        ratio = float(np.max(np.abs(u)) / Mf) if Mf > 0 else 0.0
        rows.append(ApproachRow(float(h), len(pts), float(err.max()), float(err[0]),
                                float(np.max(np.abs(u))), ratio))
    return rows
