"""Boundary quadrature grids and Poisson integrals.

Circle: equispaced nodes (the trapezoid rule is spectrally accurate for
smooth periodic integrands).  Sphere in R^3: Gauss-Legendre in the height
``z = cos(theta)`` times equispaced longitudes, which carries the
``sin(theta)`` latitude weight exactly.  Flat boundaries: either a uniform
cell grid on ``[-R, R]^N`` or, by default, a tangent-mapped grid that
reaches to infinity (see :func:`line_grid` and :func:`plane_grid`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..maximal import hl_maximal
from ..space import Ball, MetricMeasureSpace, ball_members
from .domains import KernelDomain, kernel


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    domain: KernelDomain
    nodes: np.ndarray        # ambient coordinates, one row per node
    weights: np.ndarray
    descriptor: dict = field(default_factory=dict)
    _space: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        w = np.array(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != self.domain.ambient_dim or w.shape != (nodes.shape[0],):
            raise DomainError("grid nodes and weights have inconsistent shapes")
        if np.any(w <= 0):
            raise DomainError("quadrature weights must be positive")
        nodes.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    def as_space(self) -> MetricMeasureSpace:
        """The nodes as a metric measure space (ambient distance, sigma weights)."""
        if not self._space:
            self._space.append(MetricMeasureSpace.from_points(self.nodes, self.weights,
                                                               backend="boundary"))
        return self._space[0]

    def angles(self) -> np.ndarray:
        if self.domain.ambient_dim != 2 or not self.domain.bounded:
            raise DomainError("angles are defined for circle grids only")
        return np.arctan2(self.nodes[:, 1], self.nodes[:, 0])

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(nodes)`` (vectorised over rows) on the grid."""
        return np.asarray(func(self.nodes), dtype=float).reshape(self.size)


def circle_grid(n: int) -> BoundaryGrid:
    if n < 1:
        raise DomainError("need at least one node")
    theta = 2 * np.pi * np.arange(n) / n
    nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return BoundaryGrid(KernelDomain.disc(), nodes, np.full(n, 2 * np.pi / n),
                        {"kind": "circle", "n": n})


def sphere_grid(n_lat: int, n_lon: int) -> BoundaryGrid:
    if n_lat < 1 or n_lon < 1:
        raise DomainError("need at least one latitude and one longitude")
    z, wz = np.polynomial.legendre.leggauss(n_lat)
    phi = 2 * np.pi * np.arange(n_lon) / n_lon
    Z, P = np.meshgrid(z, phi, indexing="ij")
    s = np.sqrt(1 - Z ** 2)
    nodes = np.stack([s * np.cos(P), s * np.sin(P), Z], axis=-1).reshape(-1, 3)
    # renormalise so every node satisfies |t| = 1 to rounding
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    w = (wz[:, None] * np.full(n_lon, 2 * np.pi / n_lon)[None, :]).ravel()
    return BoundaryGrid(KernelDomain.ball(3), nodes, w,
                        {"kind": "sphere", "n_lat": n_lat, "n_lon": n_lon})


def _flat(domain, pts, w, desc):
    nodes = np.concatenate([pts, np.zeros((pts.shape[0], 1))], axis=1)
    desc["truncation"] = float(np.max(np.linalg.norm(pts, axis=1)))
    return BoundaryGrid(domain, nodes, w, desc)


def line_grid(n: int, scheme: str = "mapped", R: float | None = None,
              domain: KernelDomain | None = None) -> BoundaryGrid:
    """Quadrature on the real line.

    ``mapped``: midpoint rule in ``u`` on ``(-pi/2, pi/2)`` with
    ``t = tan(u)``.  After the substitution the kernel becomes a smooth
    pi-periodic function of ``u``, so the rule converges spectrally and has
    no truncation error.  ``uniform``: ``n`` equal cells on ``[-R, R]``.
    """
    domain = KernelDomain.halfplane() if domain is None else domain
    if domain.bounded or domain.dim != 1:
        raise DomainError("line grids are for the half-plane")
    if n < 1:
        raise DomainError("need at least one node")
    if scheme == "mapped":
        du = np.pi / n
        u = -np.pi / 2 + (np.arange(n) + 0.5) * du
        t = np.tan(u)
        w = du / np.cos(u) ** 2
    elif scheme == "uniform":
        if R is None or not R > 0:
            raise DomainError("uniform line grid needs a positive truncation R")
        h = 2 * R / n
        t = -R + (np.arange(n) + 0.5) * h
        w = np.full(n, h)
    else:
        raise DomainError(f"unknown scheme {scheme!r}")
    return _flat(domain, t[:, None], w, {"kind": "line", "scheme": scheme, "n": n})


def plane_grid(n_rad: int, n_ang: int = 0, scheme: str = "mapped", R: float | None = None,
               domain: KernelDomain | None = None) -> BoundaryGrid:
    """Quadrature on R^2.

    ``mapped``: polar grid with radius ``rho = tan(u)``, Gauss-Legendre in
    ``u`` on ``(0, pi/2)`` and equispaced angles; the outermost nodes sit
    far out and the last Gauss cells carry the tail.  ``uniform``:
    ``n_rad x n_rad`` equal cells on ``[-R, R]^2``.
    """
    domain = KernelDomain.halfspace(2) if domain is None else domain
    if domain.bounded or domain.dim != 2:
        raise DomainError("plane grids are for the half-space over R^2")
    if scheme == "mapped":
        if n_rad < 1 or n_ang < 1:
            raise DomainError("need positive radial and angular counts")
        g, wg = np.polynomial.legendre.leggauss(n_rad)
        u = np.pi / 4 * (g + 1)
        wu = np.pi / 4 * wg
        rho = np.tan(u)
        wr = wu / np.cos(u) ** 2 * rho
        phi = 2 * np.pi * np.arange(n_ang) / n_ang
        Rr, P = np.meshgrid(rho, phi, indexing="ij")
        pts = np.stack([Rr * np.cos(P), Rr * np.sin(P)], axis=-1).reshape(-1, 2)
        w = (wr[:, None] * np.full(n_ang, 2 * np.pi / n_ang)[None, :]).ravel()
        desc = {"kind": "plane", "scheme": scheme, "n_rad": n_rad, "n_ang": n_ang}
    elif scheme == "uniform":
        if R is None or not R > 0 or n_rad < 1:
            raise DomainError("uniform plane grid needs a positive truncation R and cell count")
        h = 2 * R / n_rad
        c = -R + (np.arange(n_rad) + 0.5) * h
        X, Y = np.meshgrid(c, c, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        w = np.full(pts.shape[0], h * h)
        desc = {"kind": "plane", "scheme": scheme, "n": n_rad, "R": R}
    else:
        raise DomainError(f"unknown scheme {scheme!r}")
    return _flat(domain, pts, w, desc)


# resolutions used when a caller asks for "production" accuracy
PRODUCTION = {
    "disc": {"n": 4096},
    "ball": {"n_lat": 200, "n_lon": 400},
    "halfplane": {"n": 4096},
    "halfspace": {"n_rad": 600, "n_ang": 512},
}


def boundary_grid(domain: KernelDomain, **params) -> BoundaryGrid:
    """Grid for ``domain``; missing parameters fall back to production values."""
    p = dict(PRODUCTION[domain.variant])
    p.update({k: v for k, v in params.items() if v is not None})
    if domain.variant == "disc" or (domain.variant == "ball" and domain.dim == 2):
        return circle_grid(int(p["n"]))
    if domain.variant == "ball":
        if domain.dim != 3:
            raise DomainError("boundary grids exist for balls in R^2 and R^3 only")
        return sphere_grid(int(p["n_lat"]), int(p["n_lon"]))
    scheme = p.get("scheme", "mapped")
    R = p.get("R", domain.truncation)
    if domain.dim == 1:
        return line_grid(int(p["n"]), scheme, R, domain)
    if domain.dim == 2:
        if scheme == "uniform":
            return plane_grid(int(p.get("n", p["n_rad"])), 0, scheme, R, domain)
        return plane_grid(int(p["n_rad"]), int(p["n_ang"]), scheme, R, domain)
    raise DomainError("boundary grids exist for half-spaces over R^1 and R^2 only")


def tail_mass(domain: KernelDomain, height: float, R: float) -> float:
    """Kernel mass outside ``|t - x'| < R`` for a point at the given height."""
    if domain.bounded:
        raise DomainError("tail mass is defined for half-spaces")
    y = float(height)
    if domain.dim == 1:
        return 2 / math.pi * math.atan(y / R)
    if domain.dim == 2:
        return y / math.hypot(R, y)
    raise DomainError("tail mass implemented for N = 1, 2")


def truncation_for(domain: KernelDomain, height: float, tol: float = 1e-6) -> float:
    """Smallest ``R`` with :func:`tail_mass` below ``tol``."""
    y = float(height)
    if domain.dim == 1:
        return y / math.tan(math.pi * tol / 2)
    if domain.dim == 2:
        return y * math.sqrt(1 / tol ** 2 - 1)
    raise DomainError("tail mass implemented for N = 1, 2")


def kernel_normalization(domain: KernelDomain, x, grid: BoundaryGrid) -> float:
    """``sum_k P(x, t_k) w_k``; tends to 1 as the grid is refined."""
    x = domain.check_interior(x)
    return float(kernel(domain, x, grid.nodes) @ grid.weights)


def poisson_extend(domain: KernelDomain, grid: BoundaryGrid, f, x):
    """Quadrature Poisson integral of boundary samples ``f`` at ``x``.

    ``x`` may be one point or an array of points (one per row).
    """
    f = np.asarray(f, dtype=float).ravel()
    if f.shape != (grid.size,):
        raise DomainError(f"boundary data has {f.size} samples, grid has {grid.size} nodes")
    x = domain.check_interior(x)
    u = kernel(domain, x, grid.nodes) @ (grid.weights * f)
    return float(u) if np.ndim(u) == 0 else u


@dataclass(frozen=True)
class SurfaceBall:
    indices: np.ndarray
    measure: float


def surface_ball(grid: BoundaryGrid, y: int, r: float) -> SurfaceBall:
    """Nodes within ambient distance ``r`` of node ``y``."""
    members = ball_members(grid.as_space(), Ball(int(y), float(r)))
    idx = members.indices
    return SurfaceBall(idx, float(grid.weights[idx].sum()))


def boundary_maximal(grid: BoundaryGrid, f, y: int) -> float:
    """Supremum of surface-ball averages of ``|f|`` around node ``y``."""
    return hl_maximal(grid.as_space(), f, int(y))
