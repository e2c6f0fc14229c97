"""Centred Hardy-Littlewood maximal operator on finite spaces.

On a finite space the supremum over ``r > 0`` is a maximum over the
finitely many distinct balls around ``x``.  Sorting the distances from
``x`` and closing each ball at a distinct distance enumerates all of them,
so ``Mf(x)`` is computed exactly, not approximated.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AlgorithmFailure, DomainError
from .space import Ball, MeasurableSet, MetricMeasureSpace, measure


@dataclass(frozen=True, eq=False)
class SampledFunction:
    values: np.ndarray
    tag: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise DomainError("sampled function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def indicator(cls, s: MeasurableSet, tag="indicator"):
        return cls(s.mask.astype(float), tag)

    def __abs__(self):
        return SampledFunction(np.abs(self.values), f"|{self.tag}|")


def _values(space, f):
    v = np.asarray(getattr(f, "values", f), dtype=float).ravel()
    if v.shape != (space.n,):
        raise DomainError(f"function has {v.size} samples, space has {space.n} points")
    return v


def l1_norm(space: MetricMeasureSpace, f) -> float:
    return float(np.sum(np.abs(_values(space, f)) * space.weights))


def realized_balls(d: np.ndarray):
    """Enumerate the distinct open balls around a centre from its distance row.

    Returns ``order`` (points sorted by distance), ``ends`` (index into
    ``order`` one past the last member of each distinct ball) and ``radii``
    (an open radius realising each ball: the next distinct distance, or
    twice the largest distance for the whole space).
    """
    order = np.argsort(d, kind="stable")
    ds = d[order]
    last = np.flatnonzero(np.append(ds[1:] != ds[:-1], True))
    ends = last + 1
    closed = ds[last]
    radii = np.empty(closed.size)
    radii[:-1] = closed[1:]
    radii[-1] = 2.0 * closed[-1] if closed[-1] > 0 else 1.0
    return order, ends, radii


def maximal_profile(space: MetricMeasureSpace, f, x: int):
    """All realized ball averages of ``|f|`` around ``x``.

    Returns ``(radii, averages, masses)``, one entry per distinct ball, in
    increasing radius.
    """
    v = np.abs(_values(space, f))
    d = space.distances_from(x)
    order, ends, radii = realized_balls(d)
    cw = np.cumsum(space.weights[order])[ends - 1]
    cf = np.cumsum((space.weights * v)[order])[ends - 1]
    return radii, cf / cw, cw


def hl_maximal(space: MetricMeasureSpace, f, x: int) -> float:
    _, avg, _ = maximal_profile(space, f, x)
    return float(avg.max())


def _field_block(space, absv, rows):
    d = space.distance_rows(rows)
    order = np.argsort(d, axis=1, kind="stable")
    ds = np.take_along_axis(d, order, axis=1)
    cw = np.cumsum(space.weights[order], axis=1)
    cf = np.cumsum((space.weights * absv)[order], axis=1)
    end = np.ones_like(ds, dtype=bool)
    end[:, :-1] = ds[:, 1:] != ds[:, :-1]
    avg = np.where(end, cf / cw, -np.inf)
    return avg.max(axis=1)


def maximal_field(space: MetricMeasureSpace, f, threads: int | None = None) -> SampledFunction:
    """``Mf`` at every point.  Blocks of centres are independent and may be
    spread over ``threads`` workers; the result does not depend on it."""
    absv = np.abs(_values(space, f))
    blocks = list(space._blocks())
    threads = (os.cpu_count() or 1) if threads is None else max(1, int(threads))
    if threads == 1 or len(blocks) == 1:
        parts = [_field_block(space, absv, b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _field_block(space, absv, b), blocks))
    tag = getattr(f, "tag", "f")
    return SampledFunction(np.concatenate(parts), f"M{tag}")


@dataclass
class WeakTypeReport:
    lambdas: np.ndarray
    superlevel_measures: np.ndarray
    constants: np.ndarray | None = None
    reference_norm: float | None = None
    bound: float | None = None
    slack: float = 0.0
    passes: np.ndarray | None = None

    @property
    def sup_constant(self) -> float | None:
        if self.constants is None:
            return None
        return float(np.max(self.constants)) if self.constants.size else 0.0

    @property
    def passed(self) -> bool:
        return True if self.passes is None else bool(np.all(self.passes))

    def rows(self):
        """Tabular form: (lambda, measure, constant, pass)."""
        out = []
        for k, lam in enumerate(self.lambdas):
            c = None if self.constants is None else float(self.constants[k])
            ok = None if self.passes is None else bool(self.passes[k])
            out.append((float(lam), float(self.superlevel_measures[k]), c, ok))
        return out


def distribution(space: MetricMeasureSpace, g, lambdas, l1=None) -> WeakTypeReport:
    """Exact ``mu{|g| > lambda}``; constants ``lambda * mu / l1`` when ``l1`` is given."""
    lam = np.asarray(lambdas, dtype=float).ravel()
    if np.any(lam <= 0):
        raise DomainError("lambdas must be positive")
    if np.any(np.diff(lam) < 0):
        raise DomainError("lambdas must be sorted ascending")
    a = np.abs(_values(space, g))
    order = np.argsort(a, kind="stable")
    tail = np.concatenate([np.cumsum(space.weights[order][::-1])[::-1], [0.0]])
    # first sorted position with value > lambda
    first = np.searchsorted(a[order], lam, side="right")
    meas = tail[first]
    consts = None
    if l1 is not None:
        if not l1 > 0:
            raise DomainError("reference L1 norm must be positive")
        consts = lam * meas / l1
    return WeakTypeReport(lam, meas, consts, reference_norm=l1)


def boundary_slack(space: MetricMeasureSpace, E: MeasurableSet) -> float:
    """Relative mass of the discrete boundary of ``E``.

    A point of ``E`` is a boundary point when its smallest non-singleton
    ball reaches outside ``E``.  On a 1-D grid this is one cell per
    interval endpoint.
    """
    mE = measure(space, E)
    if mE == 0:
        return 0.0
    edge = 0.0
    for b in space._blocks(E.indices):
        d = space.distance_rows(b)
        pos = np.where(d > 0, d, np.inf)
        nearest = pos.min(axis=1, keepdims=True)
        # neighbours equidistant up to rounding all belong to the smallest ball
        touching = (d <= nearest * (1 + 1e-9)) & ~E.mask[None, :]
        edge += float(space.weights[b][touching.any(axis=1)].sum())
    return edge / mE


RESTRICTED_CONSTANT = 4.0


def restricted_weak_type_test(space: MetricMeasureSpace, E: MeasurableSet, lambdas,
                              slack: float | None = None, threads=None) -> WeakTypeReport:
    """Test ``|{M chi_E > lambda}| <= 4 |E| / lambda * (1 + slack)``."""
    lam = np.asarray(lambdas, dtype=float).ravel()
    if np.any((lam <= 0) | (lam >= 1)):
        raise DomainError("each lambda must lie in (0, 1); M chi_E never exceeds 1")
    mE = measure(space, E)
    if not mE > 0:
        raise DomainError("E must have positive measure")
    eps = boundary_slack(space, E) if slack is None else float(slack)
    order = np.argsort(lam, kind="stable")
    Mchi = maximal_field(space, SampledFunction.indicator(E), threads=threads)
    rep = distribution(space, Mchi, lam[order], l1=mE)
    back = np.empty_like(order)
    back[order] = np.arange(order.size)
    meas = rep.superlevel_measures[back]
    consts = rep.constants[back]
    passes = meas <= RESTRICTED_CONSTANT * mE / lam * (1.0 + eps)
    return WeakTypeReport(lam, meas, consts, reference_norm=mE, bound=RESTRICTED_CONSTANT,
                          slack=eps, passes=passes)


@dataclass
class ChainTrace:
    """Every number in the restricted weak-type chain for one (E, lambda)."""

    lam: float
    E_mass: float
    S_mass: float
    K_mass: float
    balls: list
    ball_mass: float
    ball_E_mass: float
    densities: list
    links: list = field(default_factory=list)
    exhaustion_rounds: int = 0

    @property
    def holds(self) -> bool:
        return all(ok for _, _, _, ok in self.links)

    def to_dict(self):
        return {
            "lambda": self.lam, "E_mass": self.E_mass, "S_mass": self.S_mass,
            "K_mass": self.K_mass, "ball_mass": self.ball_mass, "ball_E_mass": self.ball_E_mass,
            "balls": [[b.center, b.radius] for b in self.balls],
            "exhaustion_rounds": self.exhaustion_rounds,
            "links": [{"link": name, "lhs": lhs, "rhs": rhs, "holds": ok}
                      for name, lhs, rhs, ok in self.links],
        }


def _witness_choice(space, chi, x, lam, occupied=None):
    """Largest open radius around ``x`` whose ball average of ``chi`` exceeds
    ``lam`` and (optionally) avoids ``occupied``.  ``None`` if there is none."""
    d = space.distances_from(x)
    order, ends, radii = realized_balls(d)
    cw = np.cumsum(space.weights[order])[ends - 1]
    cf = np.cumsum((space.weights * chi)[order])[ends - 1]
    ok = cf > lam * cw
    if occupied is not None:
        hit = occupied[order]
        if hit.any():
            first = int(np.argmax(hit))
            # distinct balls ending at or before the first occupied point
            ok &= ends <= first
    if not ok.any():
        return None
    return float(radii[np.flatnonzero(ok)[-1]])


def _greedy(space, candidates, occupied):
    """Select disjoint balls, radius descending then centre ascending."""
    picked = []
    for c, r in sorted(candidates, key=lambda cr: (-cr[1], cr[0])):
        members = space.distances_from(c) < r
        if not np.any(members & occupied):
            occupied |= members
            picked.append(Ball(c, r))
    return picked


def weak_type_pipeline(space: MetricMeasureSpace, E: MeasurableSet, lam: float,
                       rtol: float = 1e-12, max_rounds: int = 1000) -> ChainTrace:
    """Run the restricted weak-type argument as an algorithm and verify it.

    ``S = {M chi_E > lam}``; on a finite space the compact ``K`` inside ``S``
    is ``S`` itself.  Each point of ``K`` gets its largest witness ball
    (average of ``chi_E`` above ``lam``); a greedy disjoint selection is
    topped up by disjoint witness balls around still-uncovered points until
    the selected mass exceeds ``|K|/2``.  The four links

        |S| <= 2|K| <= 4 sum|B_j| <= (4/lam) sum|B_j & E| <= 4|E|/lam

    are then checked one by one.
    """
    if not 0 < lam < 1:
        raise DomainError("lambda must lie in (0, 1)")
    mE = measure(space, E)
    if not mE > 0:
        raise DomainError("E must have positive measure")
    chi = E.mask.astype(float)
    Mchi = maximal_field(space, chi).values
    S = Mchi > lam
    K = S
    S_mass = float(space.weights[S].sum())
    K_mass = S_mass

    cands = []
    for x in np.flatnonzero(K):
        r = _witness_choice(space, chi, int(x), lam)
        if r is None:
            raise AlgorithmFailure(f"point {x} of S has no witness ball", "witness")
        cands.append((int(x), r))
    occupied = np.zeros(space.n, dtype=bool)
    balls = _greedy(space, cands, occupied)
    mass = float(sum(space.weights[space.distances_from(b.center) < b.radius].sum() for b in balls))

    rounds = 0
    while not mass > K_mass / 2 and rounds < max_rounds:
        loose = np.flatnonzero(K & ~occupied)
        extra = []
        for x in loose:
            r = _witness_choice(space, chi, int(x), lam, occupied)
            if r is not None:
                extra.append((int(x), r))
        if not extra:
            break
        rounds += 1
        new = _greedy(space, extra, occupied)
        balls += new
        mass += float(sum(space.weights[space.distances_from(b.center) < b.radius].sum() for b in new))

    members = [space.distances_from(b.center) < b.radius for b in balls]
    counts = np.sum(members, axis=0) if members else np.zeros(space.n)
    if np.any(counts > 1):
        raise AlgorithmFailure("selected witness balls overlap", "disjointness")
    ball_mass = float(sum(space.weights[m].sum() for m in members))
    ball_E = float(sum(space.weights[m & E.mask].sum() for m in members))
    densities = [float(space.weights[m & K].sum() / space.weights[m].sum()) for m in members]

    def le(a, b):
        return a <= b + rtol * max(abs(a), abs(b))

    links = [
        ("|S| <= 2|K|", S_mass, 2 * K_mass),
        ("2|K| <= 4 sum|B|", 2 * K_mass, 4 * ball_mass),
        ("4 sum|B| <= (4/lam) sum|B&E|", 4 * ball_mass, 4 / lam * ball_E),
        ("(4/lam) sum|B&E| <= 4|E|/lam", 4 / lam * ball_E, 4 * mE / lam),
    ]
    links = [(name, a, b, le(a, b)) for name, a, b in links]
    trace = ChainTrace(lam, mE, S_mass, K_mass, balls, ball_mass, ball_E, densities, links, rounds)
    for name, a, b, ok in links:
        if not ok:
            raise AlgorithmFailure(f"chain link {name!r} fails: {a!r} > {b!r}", name)
    return trace
