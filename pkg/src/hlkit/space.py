"""Finite metric measure spaces.

A space is a weighted point cloud: every point carries a strictly positive
mass and distances come either from Euclidean coordinates or from an
explicit distance table.  Balls are open, ``B(x, r) = {t : rho(x, t) < r}``,
and every measure is the exact sum of member weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

# rows of the distance matrix materialised at once by blocked routines
BLOCK_ROWS = 256


@dataclass(frozen=True)
class Ball:
    center: int
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"ball radius must be positive, got {self.radius!r}")

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, factor * self.radius)


@dataclass(frozen=True, eq=False)
class MeasurableSet:
    """Subset of a space's points, stored as a boolean mask."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __len__(self):
        return int(self.mask.sum())

    def __contains__(self, i):
        return 0 <= int(i) < self.mask.size and bool(self.mask[int(i)])

    def __iter__(self):
        return iter(self.indices.tolist())

    def __eq__(self, other):
        if not isinstance(other, MeasurableSet):
            return NotImplemented
        return self.mask.shape == other.mask.shape and bool(np.all(self.mask == other.mask))

    def __hash__(self):
        return hash(self.mask.tobytes())

    def __or__(self, other):
        return MeasurableSet(self.mask | other.mask)

    def __and__(self, other):
        return MeasurableSet(self.mask & other.mask)

    def __sub__(self, other):
        return MeasurableSet(self.mask & ~other.mask)

    def complement(self) -> "MeasurableSet":
        return MeasurableSet(~self.mask)

    def issubset(self, other) -> bool:
        return not bool(np.any(self.mask & ~other.mask))

    def isdisjoint(self, other) -> bool:
        return not bool(np.any(self.mask & other.mask))

    def __repr__(self):
        idx = self.indices
        shown = ", ".join(map(str, idx[:8].tolist()))
        more = ", ..." if idx.size > 8 else ""
        return f"MeasurableSet({{{shown}{more}}} of {self.mask.size})"


@dataclass(frozen=True, eq=False)
class MetricMeasureSpace:
    """Immutable weighted point cloud with a metric.

    Exactly one of ``coords`` (shape ``(n, d)``, Euclidean metric) or
    ``table`` (shape ``(n, n)``) is given.  Tables may violate symmetry or
    the triangle inequality; use :func:`verify_metric_axioms` to find out.
    """

    weights: np.ndarray
    coords: np.ndarray | None = None
    table: np.ndarray | None = None
    labels: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise DomainError("a space needs at least one point")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("weights must be strictly positive and finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

        if (self.coords is None) == (self.table is None):
            raise DomainError("give exactly one of coords or table")
        if self.coords is not None:
            c = np.array(self.coords, dtype=float)
            if c.ndim == 1:
                c = c[:, None]
            if c.shape[0] != w.size or not np.all(np.isfinite(c)):
                raise DomainError("coords must be finite with one row per weight")
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)
        else:
            t = np.array(self.table, dtype=float)
            if t.shape != (w.size, w.size):
                raise DomainError(f"distance table must be {w.size}x{w.size}, got {t.shape}")
            if not np.all(np.isfinite(t)) or np.any(t < 0):
                raise DomainError("distances must be finite and nonnegative")
            if np.any(np.diag(t) != 0):
                raise DomainError("distance table must have a zero diagonal")
            t.setflags(write=False)
            object.__setattr__(self, "table", t)
        if self.labels is not None and len(self.labels) != w.size:
            raise DomainError("labels must match the number of points")

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_points(cls, points, weights=None, **meta) -> "MetricMeasureSpace":
        pts = np.asarray(points, dtype=float)
        n = pts.shape[0]
        w = np.ones(n) if weights is None else weights
        return cls(weights=w, coords=pts, meta=dict(meta))

    @classmethod
    def from_table(cls, table, weights=None, labels=None, **meta) -> "MetricMeasureSpace":
        t = np.asarray(table, dtype=float)
        w = np.ones(t.shape[0]) if weights is None else weights
        return cls(weights=w, table=t, labels=None if labels is None else tuple(labels), meta=dict(meta))

    @classmethod
    def uniform_grid(cls, lower, upper, cells) -> "MetricMeasureSpace":
        """Cell-centred grid on a box; each point carries its cell volume."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        cells = np.atleast_1d(np.asarray(cells, dtype=int))
        if not (lower.shape == upper.shape == cells.shape):
            raise DomainError("lower, upper and cells must have the same length")
        if np.any(upper <= lower) or np.any(cells < 1):
            raise DomainError("grid needs upper > lower and at least one cell per axis")
        h = (upper - lower) / cells
        axes = [lo + (np.arange(m) + 0.5) * step for lo, m, step in zip(lower, cells, h)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        w = np.full(pts.shape[0], float(np.prod(h)))
        return cls(weights=w, coords=pts,
                   meta={"backend": "grid", "lower": lower.tolist(), "upper": upper.tolist(),
                         "cells": cells.tolist(), "cell": h.tolist()})

    # -- basic geometry -------------------------------------------------
    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int | None:
        return None if self.coords is None else self.coords.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def _check_index(self, i):
        if isinstance(i, (bool, np.bool_)) or not isinstance(i, (int, np.integer)):
            raise DomainError(f"point index must be an integer, got {i!r}")
        if not 0 <= i < self.n:
            raise DomainError(f"point index {i} outside 0..{self.n - 1}")
        return int(i)

    def distances_from(self, i) -> np.ndarray:
        i = self._check_index(i)
        return self.distance_rows(np.array([i]))[0]

    def distance_rows(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=int)
        if self.table is not None:
            return np.array(self.table[rows])
        return _euclid(self.coords[rows][:, None, :], self.coords[None, :, :])

    def pair_distances(self, i, j) -> np.ndarray:
        i = np.asarray(i, dtype=int)
        j = np.asarray(j, dtype=int)
        if self.table is not None:
            return self.table[i, j]
        return _euclid(self.coords[i], self.coords[j])

    def diameter(self) -> float:
        if self.dim == 1:
            return float(self.coords[:, 0].max() - self.coords[:, 0].min())
        return max(float(self.distance_rows(b).max()) for b in self._blocks())

    def min_spacing(self) -> float:
        """Smallest positive distance (``inf`` for a one-point space)."""
        best = np.inf
        for b in self._blocks():
            d = self.distance_rows(b)
            pos = d[d > 0]
            if pos.size:
                best = min(best, float(pos.min()))
        return best

    def _blocks(self, rows=None):
        rows = np.arange(self.n) if rows is None else np.asarray(rows, dtype=int)
        for s in range(0, rows.size, BLOCK_ROWS):
            yield rows[s:s + BLOCK_ROWS]

    # -- sets -----------------------------------------------------------
    def subset(self, indices: Iterable[int]) -> MeasurableSet:
        mask = np.zeros(self.n, dtype=bool)
        idx = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise DomainError("subset index out of range")
        mask[idx] = True
        return MeasurableSet(mask)

    def set_from_mask(self, mask) -> MeasurableSet:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self.n,):
            raise DomainError(f"mask must have shape ({self.n},)")
        return MeasurableSet(mask)

    def everything(self) -> MeasurableSet:
        return MeasurableSet(np.ones(self.n, dtype=bool))

    def nothing(self) -> MeasurableSet:
        return MeasurableSet(np.zeros(self.n, dtype=bool))

    # -- all-centre ball sums -------------------------------------------
    def ball_sums(self, values, r) -> tuple[np.ndarray, np.ndarray]:
        """Masses ``|B(x, r)|`` and sums ``int_B values`` for every centre x."""
        values = np.asarray(values, dtype=float)
        if self.dim == 1:
            order, lo, hi = self.ball_windows(r)
            cw = np.concatenate([[0.0], np.cumsum(self.weights[order])])
            cf = np.concatenate([[0.0], np.cumsum((self.weights * values)[order])])
            mass = np.empty(self.n)
            sums = np.empty(self.n)
            mass[order] = cw[hi] - cw[lo]
            sums[order] = cf[hi] - cf[lo]
            return mass, sums
        wf = self.weights * values
        mass = np.empty(self.n)
        sums = np.empty(self.n)
        for b in self._blocks():
            inside = self.distance_rows(b) < r
            mass[b] = inside @ self.weights
            sums[b] = inside @ wf
        return mass, sums

    def ball_windows(self, r):
        """For 1-D spaces: ``order`` and half-open windows ``[lo, hi)`` so that
        the points ``order[lo[p]:hi[p]]`` are exactly ``B(order[p], r)``.

        The window ends are found by bisection on the computed distances,
        so membership agrees bit-for-bit with :meth:`distances_from`.
        """
        if self.dim != 1:
            raise DomainError("ball windows exist only for one-dimensional coordinates")
        order = self._order_1d()
        xs = self.coords[order, 0]
        p = np.arange(self.n)
        # leftmost q <= p with xs[p] - xs[q] < r
        a, b = np.zeros(self.n, dtype=int), p.copy()
        while np.any(active := a < b):
            mid = (a + b) // 2
            good = (xs[p] - xs[mid]) < r
            b = np.where(active & good, mid, b)
            a = np.where(active & ~good, mid + 1, a)
        lo = a
        # one past the rightmost q >= p with xs[q] - xs[p] < r
        a, b = p + 1, np.full(self.n, self.n)
        while np.any(active := a < b):
            mid = (a + b) // 2
            good = (xs[np.minimum(mid, self.n - 1)] - xs[p]) < r
            a = np.where(active & good, mid + 1, a)
            b = np.where(active & ~good, mid, b)
        return order, lo, a

    def _order_1d(self):
        cached = self.meta.get("_order")
        if cached is None:
            cached = np.argsort(self.coords[:, 0], kind="stable")
            self.meta["_order"] = cached
        return cached


def _euclid(a, b):
    diff = a - b
    if diff.shape[-1] == 1:
        return np.abs(diff[..., 0])
    return np.sqrt(np.einsum("...k,...k->...", diff, diff))


def ball_members(space: MetricMeasureSpace, b: Ball) -> MeasurableSet:
    """Points strictly within ``b.radius`` of the centre."""
    d = space.distances_from(b.center)
    return MeasurableSet(d < b.radius)


def measure(space: MetricMeasureSpace, s: MeasurableSet) -> float:
    if s.mask.shape != (space.n,):
        raise DomainError("set does not belong to this space")
    return float(space.weights[s.mask].sum())


def doubling_ratio(space: MetricMeasureSpace, x: int, r: float, factor: float = 3.0) -> float:
    """``|B(x, factor*r)| / |B(x, r)|``; the denominator holds at least x."""
    if not r > 0:
        raise DomainError("radius must be positive")
    d = space.distances_from(x)
    w = space.weights
    return float(w[d < factor * r].sum() / w[d < r].sum())


def max_doubling_ratio(space: MetricMeasureSpace, radii: Sequence[float], points=None,
                       factor: float = 3.0) -> float:
    """Largest doubling ratio over the given centres and radii."""
    pts = np.arange(space.n) if points is None else np.asarray(points, dtype=int)
    best = 0.0
    for b in space._blocks(pts):
        d = space.distance_rows(b)
        for r in radii:
            num = (d < factor * r) @ space.weights
            den = (d < r) @ space.weights
            best = max(best, float(np.max(num / den)))
    return best


@dataclass(frozen=True)
class MetricReport:
    passed: bool
    checked: int
    violation: str | None = None
    triple: tuple[int, int, int] | None = None
    seed: int | None = None

    def to_dict(self):
        return {"passed": self.passed, "checked": self.checked, "violation": self.violation,
                "triple": None if self.triple is None else list(self.triple), "seed": self.seed}


def verify_metric_axioms(space: MetricMeasureSpace, sample_count: int, seed: int = 0,
                         rtol: float = 1e-12) -> MetricReport:
    """Check symmetry and the triangle inequality on random triples.

    A reported triangle violation ``(a, b, c)`` means
    ``rho(a, c) > rho(a, b) + rho(b, c)``.
    """
    if sample_count < 1:
        raise DomainError("sample_count must be at least 1")
    if space.n == 1:
        return MetricReport(True, 0, seed=seed)
    rng = np.random.default_rng(seed)
    trip = rng.integers(0, space.n, size=(sample_count, 3))
    for t, (i, j, k) in enumerate(trip.tolist()):
        for a, b in ((i, j), (j, k), (i, k)):
            dab = float(space.pair_distances(a, b))
            dba = float(space.pair_distances(b, a))
            if abs(dab - dba) > rtol * max(dab, dba, 1.0):
                return MetricReport(False, t + 1, "symmetry", (min(a, b), max(a, b), max(a, b)), seed)
        for a, mid, c in ((i, j, k), (j, i, k), (i, k, j)):
            lhs = float(space.pair_distances(a, c))
            rhs = float(space.pair_distances(a, mid)) + float(space.pair_distances(mid, c))
            if lhs > rhs + rtol * max(lhs, 1.0):
                a, c = min(a, c), max(a, c)
                return MetricReport(False, t + 1, "triangle", (a, mid, c), seed)
    return MetricReport(True, sample_count, seed=seed)
