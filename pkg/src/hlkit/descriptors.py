"""Build spaces, sets, ball families, functions, domains and grids from
plain dictionaries (the JSON structures used by config files).

Space description::

    {"backend": "grid", "lower": [-4], "upper": [4], "cells": [4096]}
    {"backend": "points", "points": [[0.0], [0.5], [1.0]], "weights": [1, 1, 1]}
    {"backend": "table", "labels": ["a", "b", "c"],
     "distances": [[0, 1, 5], [1, 0, 1], [5, 1, 0]], "weights": [1, 1, 1]}
    {"backend": "random", "count": 200, "dim": 2}            (needs a seed)

Any of these may instead be a path to a JSON file holding the object.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import HLKitError
from .space import Ball, MeasurableSet, MetricMeasureSpace, ball_members
from .poisson import KernelDomain, boundary_grid


class ConfigError(HLKitError, ValueError):
    """A configuration value is missing or invalid; ``param`` names it."""

    def __init__(self, param, message):
        super().__init__(f"{param}: {message}")
        self.param = param


def _load(obj, base: Path | None):
    if isinstance(obj, str):
        path = Path(obj)
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            return json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(str(obj), f"cannot read descriptor file ({exc})") from exc
    return obj


def _rng(seed, param):
    if seed is None:
        raise ConfigError("seed", f"{param} is randomised and needs a seed")
    return np.random.default_rng(seed)


def space_from_description(desc, seed=None, base=None) -> MetricMeasureSpace:
    desc = _load(desc, base)
    if not isinstance(desc, dict):
        raise ConfigError("space", "expected an object")
    backend = desc.get("backend")
    try:
        if backend == "grid":
            return MetricMeasureSpace.uniform_grid(desc["lower"], desc["upper"], desc["cells"])
        if backend == "points":
            return MetricMeasureSpace.from_points(desc["points"], desc.get("weights"), backend="points")
        if backend == "table":
            return MetricMeasureSpace.from_table(desc["distances"], desc.get("weights"),
                                                 desc.get("labels"), backend="table")
        if backend == "random":
            rng = _rng(seed, "space")
            n, d = int(desc.get("count", 100)), int(desc.get("dim", 1))
            pts = rng.random((n, d))
            return MetricMeasureSpace.from_points(pts, desc.get("weights"), backend="random")
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"space.{exc.args[0]}", "required field missing") from exc
    except ValueError as exc:
        raise ConfigError("space", str(exc)) from exc
    raise ConfigError("space.backend", f"unknown backend {backend!r}")


def _coords(space, param):
    if space.coords is None:
        raise ConfigError(param, "needs a coordinate-based space")
    return space.coords


def set_from_description(space: MetricMeasureSpace, desc, seed=None, param="set") -> MeasurableSet:
    """Sets: ``all``, ``indices``, ``intervals`` (closed, 1-D), ``boxes``
    (closed, any dimension), ``ball`` and ``random-intervals``."""
    if desc is None:
        raise ConfigError(param, "required")
    kind = desc.get("kind")
    if kind == "all":
        return space.everything()
    if kind == "indices":
        try:
            return space.subset(desc["indices"])
        except ValueError as exc:
            raise ConfigError(param, str(exc)) from exc
    if kind == "intervals":
        x = _coords(space, param)
        if x.shape[1] != 1:
            raise ConfigError(param, "intervals need a one-dimensional space")
        mask = np.zeros(space.n, dtype=bool)
        for a, b in desc["intervals"]:
            mask |= (x[:, 0] >= a) & (x[:, 0] <= b)
        return MeasurableSet(mask)
    if kind == "boxes":
        x = _coords(space, param)
        mask = np.zeros(space.n, dtype=bool)
        for lo, hi in desc["boxes"]:
            mask |= np.all((x >= np.asarray(lo)) & (x <= np.asarray(hi)), axis=1)
        return MeasurableSet(mask)
    if kind == "ball":
        return ball_members(space, ball_from_description(space, desc, param))
    if kind == "random-intervals":
        rng = _rng(seed, param)
        return random_interval_union(space, rng, int(desc.get("count", 3)),
                                     float(desc.get("max_fraction", 0.2)))
    raise ConfigError(f"{param}.kind", f"unknown set kind {kind!r}")


def random_interval_union(space: MetricMeasureSpace, rng, count: int, max_fraction: float = 0.2):
    """Union of ``count`` random axis boxes (intervals in 1-D), each side at
    most ``max_fraction`` of the bounding box, always containing a point."""
    x = _coords(space, "set")
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    mask = np.zeros(space.n, dtype=bool)
    for _ in range(count):
        c = x[rng.integers(space.n)]
        half = rng.uniform(0, max_fraction, size=x.shape[1]) * span / 2
        mask |= np.all(np.abs(x - c) <= half, axis=1)
        mask[np.argmin(np.linalg.norm(x - c, axis=1))] = True
    return MeasurableSet(mask)


def _center_index(space, center, param):
    if isinstance(center, (int, np.integer)) and not isinstance(center, bool):
        if not 0 <= center < space.n:
            raise ConfigError(param, f"centre index {center} out of range")
        return int(center)
    x = _coords(space, param)
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (x.shape[1],):
        raise ConfigError(param, "centre coordinates have the wrong dimension")
    return int(np.argmin(np.linalg.norm(x - c, axis=1)))


def ball_from_description(space, desc, param="ball") -> Ball:
    try:
        r = float(desc["radius"])
        if not r > 0:
            raise ConfigError(f"{param}.radius", "must be positive")
        return Ball(_center_index(space, desc["center"], param), r)
    except KeyError as exc:
        raise ConfigError(f"{param}.{exc.args[0]}", "required field missing") from exc


def family_from_description(space: MetricMeasureSpace, desc, seed=None, base=None,
                            param="family") -> list[Ball]:
    """A list of ``{"center", "radius"}`` objects, or
    ``{"kind": "random", "count", "min_radius", "max_radius"}``."""
    desc = _load(desc, base)
    if isinstance(desc, list):
        if not desc:
            raise ConfigError(param, "empty family")
        return [ball_from_description(space, b, f"{param}[{i}]") for i, b in enumerate(desc)]
    if isinstance(desc, dict) and desc.get("kind") == "random":
        rng = _rng(seed, param)
        count = int(desc.get("count", 12))
        rmin, rmax = float(desc.get("min_radius", 0.05)), float(desc.get("max_radius", 0.3))
        if count < 1 or not 0 < rmin <= rmax:
            raise ConfigError(param, "need count >= 1 and 0 < min_radius <= max_radius")
        return random_family(space, rng, count, rmin, rmax)
    raise ConfigError(param, "expected a list of balls or a random family description")


def random_family(space, rng, count, rmin, rmax) -> list[Ball]:
    centers = rng.integers(space.n, size=count)
    radii = rng.uniform(rmin, rmax, size=count)
    return [Ball(int(c), float(r)) for c, r in zip(centers, radii)]


def function_from_description(space: MetricMeasureSpace, desc, seed=None, base=None,
                              param="function") -> np.ndarray:
    """Per-point values: ``constant``, ``indicator``, ``values``, ``file``,
    ``random``, ``sine`` (``amplitude * sin(frequency * x0)``) and ``jump``
    (``height`` on ``x0 >= at``)."""
    if desc is None:
        raise ConfigError(param, "required")
    kind = desc.get("kind")
    if kind == "constant":
        return np.full(space.n, float(desc.get("value", 1.0)))
    if kind == "indicator":
        return set_from_description(space, desc.get("set"), seed, f"{param}.set").mask.astype(float)
    if kind == "values":
        v = np.asarray(desc["values"], dtype=float)
    elif kind == "file":
        v = load_values(desc["path"], base)
    elif kind == "random":
        rng = _rng(seed, param)
        v = rng.uniform(float(desc.get("low", -1)), float(desc.get("high", 1)), size=space.n)
    elif kind == "sine":
        x = _coords(space, param)[:, 0]
        v = float(desc.get("amplitude", 1.0)) * np.sin(float(desc.get("frequency", 1.0)) * x)
    elif kind == "jump":
        x = _coords(space, param)[:, 0]
        v = float(desc.get("height", 1.0)) * (x >= float(desc.get("at", 0.0)))
    else:
        raise ConfigError(f"{param}.kind", f"unknown function kind {kind!r}")
    if v.shape != (space.n,):
        raise ConfigError(param, f"{v.size} values for {space.n} points")
    return v


def load_values(path, base=None) -> np.ndarray:
    """One value per line (``#`` comments allowed)."""
    p = Path(path)
    if base is not None and not p.is_absolute():
        p = base / p
    try:
        return np.atleast_1d(np.loadtxt(p, dtype=float, comments="#"))
    except (OSError, ValueError) as exc:
        raise ConfigError(str(path), f"cannot read values ({exc})") from exc


def domain_from_description(desc) -> KernelDomain:
    if not isinstance(desc, dict):
        raise ConfigError("domain", "expected an object")
    try:
        return KernelDomain(desc["variant"], int(desc.get("N", 2)), desc.get("truncation"))
    except KeyError as exc:
        raise ConfigError("domain.variant", "required field missing") from exc
    except ValueError as exc:
        raise ConfigError("domain", str(exc)) from exc


GRID_KEYS = {"n", "n_lat", "n_lon", "n_rad", "n_ang", "scheme", "R"}


def grid_from_description(domain: KernelDomain, desc):
    desc = dict(desc or {})
    unknown = sorted(set(desc) - GRID_KEYS)
    if unknown:
        raise ConfigError("grid", f"unknown parameters {unknown}")
    try:
        return boundary_grid(domain, **desc)
    except TypeError as exc:
        raise ConfigError("grid", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from exc


def boundary_function(domain: KernelDomain, grid, desc, base=None, param="boundary") -> np.ndarray:
    """Boundary data on grid nodes.

    ``constant``; ``coordinate`` (``t[axis]``); ``cos``/``sin`` of the angle
    and ``re-z2`` (``cos 2 theta``) on circle grids; ``sign-cos``;
    ``arc`` (indicator of angles in ``[start, stop)``, radians, modulo
    2 pi); ``gaussian`` (``exp(-|t|^2 / width^2)``); ``values``; ``file``.
    """
    if desc is None:
        raise ConfigError(param, "required")
    kind = desc.get("kind")
    t = grid.nodes
    if kind == "constant":
        return np.full(grid.size, float(desc.get("value", 1.0)))
    if kind == "coordinate":
        return t[:, int(desc.get("axis", 0))].copy()
    if kind == "gaussian":
        w = float(desc.get("width", 1.0))
        return np.exp(-np.sum(t ** 2, axis=1) / w ** 2)
    if kind in ("cos", "sin", "re-z2", "sign-cos", "arc"):
        try:
            th = grid.angles()
        except ValueError as exc:
            raise ConfigError(param, str(exc)) from exc
        if kind == "cos":
            return np.cos(th)
        if kind == "sin":
            return np.sin(th)
        if kind == "re-z2":
            return np.cos(2 * th)
        if kind == "sign-cos":
            return np.sign(np.cos(th))
        start = float(desc.get("start", 0.0))
        stop = float(desc.get("stop", np.pi))
        rel = np.mod(th - start, 2 * np.pi)
        return (rel < np.mod(stop - start, 2 * np.pi) - 1e-12).astype(float)
    if kind == "values":
        v = np.asarray(desc["values"], dtype=float)
    elif kind == "file":
        v = load_values(desc["path"], base)
    else:
        raise ConfigError(f"{param}.kind", f"unknown boundary function {kind!r}")
    if v.shape != (grid.size,):
        raise ConfigError(param, f"{v.size} values for {grid.size} nodes")
    return v
