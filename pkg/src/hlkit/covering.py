"""Ball selection: greedy Wiener/Vitali selection and the density refinement.

All selections are greedy in the order radius descending, then input index
ascending, so identical inputs always give identical output.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlgorithmFailure, DomainError, PreconditionError
from .maximal import realized_balls
from .space import Ball, MeasurableSet, MetricMeasureSpace, ball_members, measure


@dataclass
class CoverSelection:
    selected: list[int]
    dilation_factor: float
    disjoint: bool
    residual: MeasurableSet | None = None
    selected_mass: float = 0.0
    mass_target: float | None = None

    @property
    def covers(self) -> bool:
        return self.residual is not None and len(self.residual) == 0

    @property
    def target_met(self) -> bool | None:
        if self.mass_target is None:
            return None
        return self.selected_mass > self.mass_target

    def to_dict(self, family=None):
        out = {
            "selected": list(self.selected),
            "dilation_factor": self.dilation_factor,
            "disjoint": self.disjoint,
            "residual": None if self.residual is None else self.residual.indices.tolist(),
            "selected_mass": self.selected_mass,
        }
        if self.mass_target is not None:
            out["mass_target"] = self.mass_target
            out["target_met"] = self.target_met
        if family is not None:
            out["balls"] = [[family[i].center, family[i].radius] for i in self.selected]
        return out


@dataclass
class RefinedCover:
    balls: list[Ball]
    density_ratios: list[float]
    total_mass: float
    K_mass: float
    threshold: float = 0.5
    parents: list[int] = field(default_factory=list)
    capped: int = 0
    vitali_mass: float = 0.0
    exhaustion_rounds: int = 0

    def certificates(self) -> dict:
        return {
            "disjoint": True,
            "densities_above_threshold": all(d > self.threshold for d in self.density_ratios),
            "mass_above_threshold": self.total_mass > self.threshold * self.K_mass,
        }

    def to_dict(self):
        return {
            "balls": [[b.center, b.radius] for b in self.balls],
            "density_ratios": self.density_ratios,
            "parents": self.parents,
            "total_mass": self.total_mass,
            "K_mass": self.K_mass,
            "threshold": self.threshold,
            "capped": self.capped,
            "vitali_mass": self.vitali_mass,
            "exhaustion_rounds": self.exhaustion_rounds,
            "certificates": self.certificates(),
        }


def _member_masks(space, family):
    return [ball_members(space, b).mask for b in family]


def _greedy_order(family):
    return sorted(range(len(family)), key=lambda i: (-family[i].radius, i))


def _greedy_disjoint(space, family, masks=None):
    masks = _member_masks(space, family) if masks is None else masks
    taken = np.zeros(space.n, dtype=bool)
    chosen = []
    for i in _greedy_order(family):
        if not np.any(masks[i] & taken):
            taken |= masks[i]
            chosen.append(i)
    return chosen, masks


def _pairwise_disjoint(masks):
    if not masks:
        return True
    return not np.any(np.sum(masks, axis=0) > 1)


def wiener_select(space: MetricMeasureSpace, family: list[Ball], target: MeasurableSet,
                  dilation: float = 3.0) -> CoverSelection:
    """Disjoint subfamily whose ``dilation``-dilates cover ``target``.

    Coverage is certified, not assumed: ``residual`` holds the target points
    the dilates miss.  For ``dilation >= 3`` it is always empty.
    """
    if not dilation >= 1:
        raise DomainError("dilation must be at least 1")
    if not family:
        raise PreconditionError("empty family cannot cover anything")
    masks = _member_masks(space, family)
    union = np.any(masks, axis=0)
    missing = np.flatnonzero(target.mask & ~union)
    if missing.size:
        raise PreconditionError(f"family does not cover target: point {int(missing[0])} is uncovered")
    chosen, _ = _greedy_disjoint(space, family, masks)
    dilated = np.zeros(space.n, dtype=bool)
    for i in chosen:
        dilated |= ball_members(space, family[i].dilate(dilation)).mask
    residual = MeasurableSet(target.mask & ~dilated)
    mass = float(sum(space.weights[masks[i]].sum() for i in chosen))
    return CoverSelection(chosen, float(dilation), _pairwise_disjoint([masks[i] for i in chosen]),
                          residual, mass)


def vitali_select(space: MetricMeasureSpace, family: list[Ball], mass_target: float = 0.0,
                  dilation: float = 3.0) -> CoverSelection:
    """Greedy disjoint selection reporting whether ``sum |B_j| > mass_target``."""
    if not family:
        raise DomainError("family must be nonempty")
    chosen, masks = _greedy_disjoint(space, family)
    mass = float(sum(space.weights[masks[i]].sum() for i in chosen))
    return CoverSelection(chosen, float(dilation), _pairwise_disjoint([masks[i] for i in chosen]),
                          None, mass, float(mass_target))


# relative margin separating a strict density inequality from a rounding tie
TIE_RTOL = 1e-12


def density_radius(space: MetricMeasureSpace, K: MeasurableSet, x: int, cap: float,
                   threshold: float = 0.5) -> float:
    """Largest radius ``r <= cap`` with ``|B(x,s) & K| > threshold |B(x,s)|``
    for every ball ``B(x, s)``, ``s <= r``.

    The returned value is an open radius: ``B(x, r)`` is the largest good
    ball.  Returns 0 only if the singleton ball already fails, which cannot
    happen for ``x`` in ``K`` with ``threshold < 1``.  Densities within
    ``TIE_RTOL`` of the threshold count as ties and are rejected, so the
    strict inequality survives any re-summation of the same ball.
    """
    if x not in K:
        raise DomainError(f"point {x} is not in K")
    if not cap > 0:
        raise DomainError("cap must be positive")
    d = space.distances_from(x)
    order, ends, radii = realized_balls(d)
    cw = np.cumsum(space.weights[order])[ends - 1]
    ck = np.cumsum((space.weights * K.mask)[order])[ends - 1]
    good = ck - threshold * cw > TIE_RTOL * cw
    # prefix of consecutive good balls
    nprefix = int(np.argmin(good)) if not good.all() else good.size
    if nprefix == 0:
        return 0.0
    return float(min(radii[nprefix - 1], cap))


def containment_cap(space: MetricMeasureSpace, family_masks, x: int) -> tuple[float, int]:
    """Largest open radius keeping ``B(x, r)`` inside one family ball.

    Returns ``(radius, parent index)``.  Computed from member sets, so the
    containment is exact.
    """
    d = space.distances_from(x)
    order = np.argsort(d, kind="stable")
    ds = d[order]
    best, parent = 0.0, -1
    for a, mask in enumerate(family_masks):
        if not mask[x]:
            continue
        out = ~mask[order]
        cap = float(ds[int(np.argmax(out))]) if out.any() else np.inf
        if cap > best:
            best, parent = cap, a
    return best, parent


def refine_cover(space: MetricMeasureSpace, K: MeasurableSet, family: list[Ball],
                 threshold: float = 0.5, max_rounds: int = 10_000) -> RefinedCover:
    """Disjoint balls, each more than ``threshold`` full of ``K`` and each
    inside a family ball, with total mass above ``threshold * |K|``.

    Every point of ``K`` gets its density radius, capped so the ball stays
    inside a single family ball.  A greedy Vitali pass over these balls is
    followed, if the mass condition is not yet met, by exhaustion: still
    uncovered points of ``K`` receive the largest good ball that misses the
    selection.  Shrinking a good ball keeps it good, and every point of
    ``K`` at least has its singleton, so exhaustion can always finish.
    """
    if not 0 < threshold < 1:
        raise DomainError("threshold must lie in (0, 1)")
    Kmass = measure(space, K)
    if not Kmass > 0:
        raise DomainError("K must have positive measure")
    if not family:
        raise PreconditionError("empty family cannot cover K")
    fmasks = _member_masks(space, family)
    union = np.any(fmasks, axis=0)
    missing = np.flatnonzero(K.mask & ~union)
    if missing.size:
        raise PreconditionError(f"family does not cover K: point {int(missing[0])} is uncovered")

    radius, parent = {}, {}
    capped = 0
    for x in K.indices.tolist():
        cap, par = containment_cap(space, fmasks, x)
        free = density_radius(space, K, x, np.inf, threshold)
        r = min(free, cap)
        capped += r < free
        radius[x], parent[x] = r, par

    cands = [Ball(x, r) for x, r in radius.items()]
    vit = vitali_select(space, cands, threshold * Kmass)
    balls = [cands[i] for i in vit.selected]
    occupied = np.zeros(space.n, dtype=bool)
    for b in balls:
        occupied |= ball_members(space, b).mask
    mass = vit.selected_mass

    rounds = 0
    while not mass > threshold * Kmass and rounds < max_rounds:
        loose = np.flatnonzero(K.mask & ~occupied)
        if loose.size == 0:
            break
        rounds += 1
        extra = []
        for x in loose.tolist():
            d = space.distances_from(x)
            hit = d[occupied]
            # open radius reaching up to, not including, the nearest taken point
            stop = float(hit.min()) if hit.size else np.inf
            extra.append(Ball(x, min(radius[x], stop)))
        for i in _greedy_order(extra):
            m = ball_members(space, extra[i]).mask
            if not np.any(m & occupied):
                occupied |= m
                balls.append(extra[i])
                mass += float(space.weights[m].sum())

    masks = [ball_members(space, b).mask for b in balls]
    dens = [float(space.weights[m & K.mask].sum() / space.weights[m].sum()) for m in masks]
    total = float(sum(space.weights[m].sum() for m in masks))
    parents = [parent[b.center] for b in balls]
    out = RefinedCover(balls, dens, total, Kmass, threshold, parents, int(capped),
                       vit.selected_mass, rounds)

    if not _pairwise_disjoint(masks):
        raise AlgorithmFailure("refined balls are not pairwise disjoint", "a")
    bad = [i for i, dv in enumerate(dens) if not dv > threshold]
    if bad:
        raise AlgorithmFailure(f"ball {balls[bad[0]]} has density {dens[bad[0]]} <= {threshold}", "b")
    if not total > threshold * Kmass:
        raise AlgorithmFailure(f"refined mass {total} <= {threshold} * |K| = {threshold * Kmass}", "c")
    for b, m, p in zip(balls, masks, parents):
        if p < 0 or np.any(m & ~fmasks[p]):
            raise AlgorithmFailure(f"{b} is not inside any family ball", "refinement")
    return out
