"""The four model domains and their closed-form Poisson kernels."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

# tolerance on defining equations; interior means delta(x) > BOUNDARY_TOL
BOUNDARY_TOL = 1e-12

VARIANTS = ("disc", "halfplane", "ball", "halfspace")


@dataclass(frozen=True)
class KernelDomain:
    """One of: the unit disc, the upper half-plane, the unit ball in R^N, or
    the upper half-space in R^(N+1).

    ``dim`` is the index N: the ambient dimension for a ball and
    the boundary dimension for a half-space.  Disc and half-plane are the
    N = 2 ball and N = 1 half-space with their own names.
    """

    variant: str
    dim: int = 2
    truncation: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown domain variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == "disc":
            object.__setattr__(self, "dim", 2)
        elif self.variant == "halfplane":
            object.__setattr__(self, "dim", 1)
        elif self.variant == "ball" and self.dim < 2:
            raise DomainError("ball needs N >= 2")
        elif self.variant == "halfspace" and self.dim < 1:
            raise DomainError("half-space needs N >= 1")

    @classmethod
    def disc(cls):
        return cls("disc")

    @classmethod
    def halfplane(cls, truncation=None):
        return cls("halfplane", 1, truncation)

    @classmethod
    def ball(cls, N=3):
        return cls("ball", N)

    @classmethod
    def halfspace(cls, N=2, truncation=None):
        return cls("halfspace", N, truncation)

    @property
    def bounded(self) -> bool:
        return self.variant in ("disc", "ball")

    @property
    def ambient_dim(self) -> int:
        return self.dim if self.bounded else self.dim + 1

    @property
    def exponent(self) -> int:
        """Power of ``|x - t|`` in the comparability estimate: the ambient dimension."""
        return self.ambient_dim

    @property
    def constant(self) -> float:
        if self.bounded:
            N = self.dim
            return math.gamma(N / 2) / (2 * math.pi ** (N / 2))
        N = self.dim
        return math.gamma((N + 1) / 2) / math.pi ** ((N + 1) / 2)

    def delta(self, x) -> np.ndarray:
        """Distance to the boundary (negative outside)."""
        x = np.asarray(x, dtype=float)
        if self.bounded:
            return 1.0 - np.linalg.norm(x, axis=-1)
        return x[..., -1]

    def point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.iscomplexobj(x):
            raise DomainError("give points as real coordinate vectors")
        if x.shape[-1] != self.ambient_dim:
            raise DomainError(f"{self.variant} points have {self.ambient_dim} coordinates, got {x.shape[-1]}")
        return x

    def boundary_point(self, t) -> np.ndarray:
        """Ambient coordinates of a boundary point; half-space points may be
        given by their N boundary coordinates."""
        t = np.asarray(t, dtype=float)
        if not self.bounded and t.shape[-1] == self.dim:
            t = np.concatenate([t, np.zeros(t.shape[:-1] + (1,))], axis=-1)
        return self.point(t)

    def check_interior(self, x):
        x = self.point(x)
        if np.any(self.delta(x) <= BOUNDARY_TOL):
            raise DomainError(f"point {x.tolist()} is not strictly inside the {self.variant}")
        return x

    def check_boundary(self, t):
        t = self.boundary_point(t)
        off = np.abs(self.delta(t))
        if np.any(off > BOUNDARY_TOL):
            raise DomainError(f"point {t.tolist()} is not on the boundary of the {self.variant}")
        return t

    def inward_normal(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.bounded:
            return -y / np.linalg.norm(y)
        n = np.zeros(self.ambient_dim)
        n[-1] = 1.0
        return n

    def tangent_basis(self, y) -> np.ndarray:
        """Orthonormal rows spanning the tangent space at boundary point ``y``."""
        if not self.bounded:
            return np.eye(self.ambient_dim)[:-1]
        _, _, vt = np.linalg.svd(np.asarray(y, dtype=float)[None, :])
        return vt[1:]

    def describe(self) -> dict:
        out = {"variant": self.variant, "N": self.dim}
        if self.truncation is not None:
            out["truncation"] = self.truncation
        return out


def kernel(domain: KernelDomain, x, t) -> np.ndarray:
    """Vectorised kernel ``P(x, t)``; no admissibility checks.

    ``x`` has shape ``(..., d)`` and ``t`` shape ``(m, d)``; the result has
    shape ``(..., m)``.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    diff = x[..., None, :] - t
    s = np.einsum("...k,...k->...", diff, diff)
    p = domain.ambient_dim
    if domain.bounded:
        num = 1.0 - np.einsum("...k,...k->...", x, x)
    else:
        num = x[..., -1]
    return domain.constant * num[..., None] / s ** (p / 2)


def kernel_eval(domain: KernelDomain, x, t) -> float:
    """Closed-form Poisson kernel at an interior ``x`` and boundary ``t``."""
    x = domain.check_interior(x)
    t = domain.check_boundary(t)
    if x.ndim != 1 or t.ndim != 1:
        raise DomainError("kernel_eval takes a single x and a single t")
    return float(kernel(domain, x, t[None, :])[0])


def asymptotic_ratio(domain: KernelDomain, x, t) -> float:
    """``P(x, t) |x - t|^d / delta(x)`` with ``d`` the ambient dimension."""
    x = domain.check_interior(x)
    t = domain.check_boundary(t)
    return float(asymptotic_ratios(domain, x[None, :], t[None, :])[0])


def asymptotic_ratios(domain: KernelDomain, xs, ts) -> np.ndarray:
    """Pairwise-aligned ratios for arrays of admissible ``xs`` and ``ts``."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    diff = xs - ts
    s = np.einsum("ij,ij->i", diff, diff)
    p = domain.ambient_dim
    num = 1.0 - np.einsum("ij,ij->i", xs, xs) if domain.bounded else xs[:, -1]
    P = domain.constant * num / s ** (p / 2)
    return P * s ** (p / 2) / domain.delta(xs)


def comparability_bounds(domain: KernelDomain) -> tuple[float, float]:
    """Analytic constants ``c1 <= ratio <= c2``.

    Ball and disc: ``1 - |x|^2 = delta (1 + |x|)`` with ``1 + |x|`` in
    ``[1, 2]``.  Half-spaces: the ratio is identically the constant.
    """
    c = domain.constant
    return (c, 2 * c) if domain.bounded else (c, c)


@dataclass(frozen=True)
class ConeRegion:
    """Nontangential region ``{x : |x - apex| < aperture * delta(x)}``."""

    domain: KernelDomain
    apex: tuple
    aperture: float

    def __post_init__(self):
        if not self.aperture > 0:
            raise DomainError("aperture must be positive")
        apex = self.domain.check_boundary(self.apex)
        object.__setattr__(self, "apex", tuple(apex.tolist()))

    def contains(self, x) -> bool:
        x = self.domain.check_interior(x)
        y = np.asarray(self.apex)
        return bool(np.linalg.norm(x - y) < self.aperture * self.domain.delta(x))


def cone_contains(cone: ConeRegion, x) -> bool:
    return cone.contains(x)


def _unit_vectors(rng, count, dim):
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_pairs(domain: KernelDomain, count: int, rng, delta_range=(1e-4, 0.5)):
    """Random admissible ``(x, t)`` pairs with ``delta(x)`` log-uniform in
    ``delta_range``.  Half-space points have ``x'`` in ``[-1, 1]^N`` and
    ``t`` within a unit-scale Gaussian offset of ``x'``."""
    lo, hi = map(float, delta_range)
    if not 0 < lo <= hi:
        raise DomainError("delta range must satisfy 0 < low <= high")
    if domain.bounded and hi >= 1:
        raise DomainError("delta must stay below 1 in the unit ball")
    delta = np.exp(rng.uniform(np.log(lo), np.log(hi), size=count))
    d = domain.ambient_dim
    if domain.bounded:
        xs = _unit_vectors(rng, count, d) * (1 - delta)[:, None]
        ts = _unit_vectors(rng, count, d)
    else:
        base = rng.uniform(-1, 1, size=(count, d - 1))
        xs = np.concatenate([base, delta[:, None]], axis=1)
        off = base + rng.standard_normal((count, d - 1))
        ts = np.concatenate([off, np.zeros((count, 1))], axis=1)
    return xs, ts


def survey_ratios(domain: KernelDomain, count: int, rng, delta_range=(1e-4, 0.5)) -> dict:
    """Sample the comparability ratio and check it against the analytic bounds."""
    xs, ts = sample_pairs(domain, count, rng, delta_range)
    r = asymptotic_ratios(domain, xs, ts)
    c1, c2 = comparability_bounds(domain)
    if domain.bounded:
        violations = int(np.sum((r < c1) | (r > c2)))
    else:
        violations = int(np.sum(np.abs(r - c1) > 1e-12 * c1))
    return {"samples": int(count), "ratio_min": float(r.min()), "ratio_max": float(r.max()),
            "c1": c1, "c2": c2, "max_rel_dev": float(np.max(np.abs(r - c1)) / c1),
            "violations": violations}
