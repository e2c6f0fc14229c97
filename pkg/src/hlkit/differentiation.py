"""Ball averages and their behaviour as the radius shrinks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .maximal import _values
from .space import MetricMeasureSpace


def ball_average(space: MetricMeasureSpace, f, x: int, r: float) -> float:
    """Weighted mean of ``f`` over ``B(x, r)``."""
    if not r > 0:
        raise DomainError("radius must be positive")
    v = _values(space, f)
    inside = space.distances_from(x) < r
    w = space.weights[inside]
    return float(np.dot(w, v[inside]) / w.sum())


def ball_averages(space: MetricMeasureSpace, f, r: float) -> np.ndarray:
    """``A_r f`` at every point."""
    if not r > 0:
        raise DomainError("radius must be positive")
    mass, sums = space.ball_sums(_values(space, f), r)
    return sums / mass


def geometric_radii(space: MetricMeasureSpace, ratio: float = 0.5, start=None, stop=None) -> np.ndarray:
    """Radii ``start, start*ratio, ...`` down to (not below) ``stop``.

    Defaults run from the diameter to the smallest point spacing.
    """
    if not 0 < ratio < 1:
        raise DomainError("ratio must lie in (0, 1)")
    start = space.diameter() if start is None else float(start)
    stop = space.min_spacing() if stop is None else float(stop)
    if not np.isfinite(stop):
        stop = start
    if not start > 0:
        start = 1.0
    radii = [start]
    while radii[-1] * ratio >= stop:
        radii.append(radii[-1] * ratio)
    return np.array(radii)


@dataclass
class ConvergenceReport:
    radii: np.ndarray
    epsilons: np.ndarray
    trajectories: np.ndarray     # (len(radii), n): A_r f at each point
    deviations: np.ndarray       # (len(radii), n): sup over s <= r of |A_s f - f|
    bad_measures: np.ndarray     # (len(radii), len(epsilons))

    def rows(self):
        """``(r, eps, bad-set measure)`` rows, largest radius first."""
        return [(float(r), float(e), float(self.bad_measures[i, j]))
                for i, r in enumerate(self.radii) for j, e in enumerate(self.epsilons)]


def differentiation_experiment(space: MetricMeasureSpace, f, radii, epsilons) -> ConvergenceReport:
    """Track ``A_r f`` along a decreasing radius schedule.

    The bad set at scale ``r`` and tolerance ``eps`` is
    ``{x : sup_{s <= r} |A_s f(x) - f(x)| > eps}`` with ``s`` running over
    the schedule, so its measure can only shrink as ``r`` decreases.
    """
    radii = np.asarray(radii, dtype=float).ravel()
    eps = np.asarray(epsilons, dtype=float).ravel()
    if radii.size == 0 or np.any(radii <= 0) or np.any(np.diff(radii) >= 0):
        raise DomainError("radii must be positive and strictly decreasing")
    if eps.size == 0 or np.any(eps <= 0):
        raise DomainError("epsilons must be positive")
    v = _values(space, f)
    traj = np.stack([ball_averages(space, v, r) for r in radii])
    dev = np.abs(traj - v[None, :])
    # running sup from the smallest radius upward
    sup_dev = np.maximum.accumulate(dev[::-1], axis=0)[::-1]
    bad = np.stack([(sup_dev > e) @ space.weights for e in eps], axis=1)
    return ConvergenceReport(radii, eps, traj, sup_dev, bad)
