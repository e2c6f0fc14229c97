"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line
that the terminal summary prints at the end of the run.

Two criteria are known to fail for mathematical reasons; they are run at the
stated tolerances anyway (see the notes in the test docstrings).
"""
import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import brute_maximal, record, subsets
from hlkit import (Ball, MeasurableSet, MetricMeasureSpace, ball_members, differentiation_experiment,
                   geometric_radii, maximal_field, refine_cover, restricted_weak_type_test,
                   weak_type_pipeline, wiener_select)
from hlkit.cli import EXPERIMENTS, ExperimentConfig, run, sample_config
from hlkit.descriptors import random_interval_union
from hlkit.poisson import (KernelDomain, boundary_grid, kernel_normalization,
                           nontangential_experiment, poisson_extend, survey_ratios)

LAMBDAS = (0.05, 0.1, 0.2, 0.25, 0.3, 0.5, 0.7, 0.8, 0.9)


# -- 1 ---------------------------------------------------------------------
def test_kernel_normalization():
    label = "1 kernel-normalization"
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0

    disc = KernelDomain.disc()
    g = boundary_grid(disc)
    centre = kernel_normalization(disc, [0.0, 0.0], g)
    record(label, centre == 1.0, f"disc centre {centre!r}")
    pts = [[0.5, 0.0]] + [[0.9 * np.cos(a), 0.9 * np.sin(a)] for a in np.linspace(0, 2 * np.pi, 9)]
    worst = max(worst, max(abs(kernel_normalization(disc, x, g) - 1) for x in pts))

    ball = KernelDomain.ball(3)
    g = boundary_grid(ball)
    v = rng.standard_normal((20, 3))
    xs = v / np.linalg.norm(v, axis=1, keepdims=True) * rng.uniform(0, 0.9, (20, 1))
    worst = max(worst, max(abs(kernel_normalization(ball, x, g) - 1) for x in xs))

    for dom in (KernelDomain.halfplane(), KernelDomain.halfspace(2)):
        g = boundary_grid(dom)
        N = dom.dim
        for _ in range(10):
            x = np.concatenate([rng.uniform(-1, 1, N), [rng.uniform(0.1, 2.0)]])
            worst = max(worst, abs(kernel_normalization(dom, x, g) - 1))

    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 10
    record(label, ok, f"max |sum - 1| = {worst:.2e}, {elapsed:.1f} s")
    assert centre == 1.0
    assert worst <= 1e-6
    assert elapsed < 10


# -- 2 ---------------------------------------------------------------------
@pytest.mark.parametrize("domain", [KernelDomain.halfplane(), KernelDomain.halfspace(2),
                                    KernelDomain.halfspace(3), KernelDomain.disc(),
                                    KernelDomain.ball(3), KernelDomain.ball(5)],
                         ids=lambda d: f"{d.variant}-{d.dim}")
def test_kernel_comparability(domain):
    res = survey_ratios(domain, 10_000, np.random.default_rng(2))
    if domain.bounded:
        ok = res["violations"] == 0
        detail = f"{domain.variant} N={domain.dim}: ratios in [{res['ratio_min']:.4g}, {res['ratio_max']:.4g}]"
    else:
        ok = res["violations"] == 0 and res["max_rel_dev"] <= 1e-12
        detail = f"{domain.variant} N={domain.dim}: max rel dev {res['max_rel_dev']:.1e}"
    record("2 kernel-comparability", ok, detail)
    assert ok, res


# -- 3 ---------------------------------------------------------------------
def _bits(mask):
    return int("".join("1" if b else "0" for b in mask[::-1]) or "0", 2)


def _valid_subfamilies(space, family, target):
    """Every disjoint subfamily whose 3-dilates cover ``target``."""
    inner = [_bits(ball_members(space, b).mask) for b in family]
    outer = [_bits(ball_members(space, b.dilate(3.0)).mask) for b in family]
    want = _bits(target.mask)
    valid = set()
    for sub in subsets(len(family)):
        taken, cover, ok = 0, 0, True
        for i in sub:
            if taken & inner[i]:
                ok = False
                break
            taken |= inner[i]
            cover |= outer[i]
        if ok and want & ~cover == 0:
            valid.add(sub)
    return valid


def test_wiener_covering():
    rng = np.random.default_rng(3)
    violations = oracle_checked = 0
    for trial in range(500):
        dim = 1 + trial % 3
        space = MetricMeasureSpace.from_points(rng.random((int(rng.integers(20, 80)), dim)))
        m = int(rng.integers(1, 41))
        family = [Ball(int(c), float(r)) for c, r in
                  zip(rng.integers(space.n, size=m), rng.uniform(0.02, 0.4, size=m))]
        target = MeasurableSet(np.any([ball_members(space, b).mask for b in family], axis=0))
        sel = wiener_select(space, family, target)
        masks = [ball_members(space, family[i]).mask for i in sel.selected]
        dil = np.any([ball_members(space, family[i].dilate(3.0)).mask for i in sel.selected], axis=0)
        disjoint = not np.any(np.sum(masks, axis=0) > 1)
        covered = not np.any(target.mask & ~dil)
        if not (disjoint and covered and sel.covers and sel.disjoint):
            violations += 1
        if m <= 12:
            oracle_checked += 1
            if tuple(sorted(sel.selected)) not in _valid_subfamilies(space, family, target):
                violations += 1
    record("3 wiener-covering", violations == 0,
           f"500 families, {oracle_checked} oracle-checked, {violations} violations")
    assert violations == 0


# -- 4 ---------------------------------------------------------------------
def _random_K(space, rng):
    if space.dim == 1:
        return random_interval_union(space, rng, int(rng.integers(1, 5)), 0.3)
    return random_interval_union(space, rng, int(rng.integers(1, 4)), 0.4)


def test_refinement_certificates():
    rng = np.random.default_rng(4)
    grids = [MetricMeasureSpace.uniform_grid([0.0], [1.0], [256]),
             MetricMeasureSpace.uniform_grid([0.0, 0.0], [1.0, 1.0], [24, 24])]
    failures = []
    for trial in range(200):
        space = grids[trial % 2]
        K = _random_K(space, rng)
        idx = K.indices
        centres = rng.choice(idx, size=min(len(idx), int(rng.integers(1, 6))), replace=False)
        family = [Ball(int(c), float(rng.uniform(0.1, 0.6))) for c in centres]
        covered = np.any([ball_members(space, b).mask for b in family], axis=0)
        for i in np.flatnonzero(K.mask & ~covered):
            family.append(Ball(int(i), 0.1))
            covered |= ball_members(space, family[-1]).mask
        try:
            ref = refine_cover(space, K, family)
        except Exception as exc:  # noqa: BLE001 - any failure counts
            failures.append(f"trial {trial}: {exc}")
            continue
        masks = [ball_members(space, b).mask for b in ref.balls]
        dens = [float(space.weights[m & K.mask].sum() / space.weights[m].sum()) for m in masks]
        ok = (not np.any(np.sum(masks, axis=0) > 1) and all(d > 0.5 for d in dens)
              and sum(space.weights[m].sum() for m in masks) > 0.5 * space.weights[K.mask].sum())
        if not ok:
            failures.append(f"trial {trial}: certificate recomputation failed")
    record("4 refinement-certificates", not failures, f"200 instances, {len(failures)} failures")
    assert not failures, failures[:3]


# -- 5 ---------------------------------------------------------------------
def test_restricted_weak_type_constant():
    label = "5 restricted-weak-type"
    grid = MetricMeasureSpace.uniform_grid([-4.0], [4.0], [4096])
    E = MeasurableSet((grid.coords[:, 0] >= 0) & (grid.coords[:, 0] <= 1))
    rep = restricted_weak_type_test(grid, E, [0.25])
    cell = 8 / 4096
    closed = abs(rep.superlevel_measures[0] - 3.0) <= 2 * cell
    record(label, closed, f"E=[0,1], lambda=1/4: |S| = {float(rep.superlevel_measures[0])!r}")

    rng = np.random.default_rng(5)
    space = MetricMeasureSpace.uniform_grid([0.0], [1.0], [1024])
    worst, fails = 0.0, 0
    for _ in range(100):
        E = random_interval_union(space, rng, int(rng.integers(1, 6)), 0.2)
        rep = restricted_weak_type_test(space, E, LAMBDAS)
        worst = max(worst, float(np.max(rep.constants / (1 + rep.slack))))
        fails += int(np.sum(~rep.passes))
    record(label, fails == 0, f"100 sets x 9 lambdas: max constant/(1+eps) = {worst:.4f}")

    small = MetricMeasureSpace.uniform_grid([0.0], [1.0], [256])
    broken = 0
    for seed in range(200):
        r = np.random.default_rng(seed)
        E = random_interval_union(small, r, int(r.integers(1, 5)), 0.2)
        lam = float(r.choice(LAMBDAS))
        if not weak_type_pipeline(small, E, lam).holds:
            broken += 1
    record(label, broken == 0, f"chain: {broken} violated links over 200 seeds")
    assert closed and fails == 0 and broken == 0


# -- 6 ---------------------------------------------------------------------
def _tiny_space(rng):
    n = int(rng.integers(1, 11))
    w = rng.integers(1, 9, size=n) / 4.0
    if rng.random() < 0.5:
        d = int(rng.integers(1, 4))
        return MetricMeasureSpace.from_points(rng.integers(0, 16, size=(n, d)) / 8.0, w)
    t = rng.integers(1, 10, size=(n, n)).astype(float)
    t = np.triu(t, 1)
    t = t + t.T
    return MetricMeasureSpace.from_table(t, w)


def test_maximal_oracle_equivalence():
    rng = np.random.default_rng(6)
    exact_mismatch = float_mismatch = 0
    for _ in range(1000):
        space = _tiny_space(rng)
        f = rng.integers(-16, 17, size=space.n) / 8.0
        got = maximal_field(space, f).values
        want = np.array([brute_maximal(space, f, x) for x in range(space.n)])
        exact_mismatch += int(np.any(got != want))
        g = rng.standard_normal(space.n)
        got = maximal_field(space, g).values
        want = np.array([brute_maximal(space, g, x) for x in range(space.n)])
        float_mismatch += int(not np.allclose(got, want, rtol=1e-12, atol=0))
    ok = exact_mismatch == 0 and float_mismatch == 0
    record("6 maximal-oracle", ok, f"1000 dyadic cases exact: {exact_mismatch} mismatches; "
                                   f"float cases at rtol 1e-12: {float_mismatch} mismatches")
    assert ok


# -- 7 ---------------------------------------------------------------------
def test_differentiation_interval_bad_set():
    """The stated bound 2(r + cell) is below the true bad-set measure.

    For |x| < r around an endpoint the average is (r + x)/(2r), which is
    within 0.1 of the value of f only when |x| >= 0.8 r.  Each endpoint
    therefore contributes 1.6 r, for about 3.2 r in total, and the bound
    fails on most of the schedule.  The check runs as stated.
    """
    space = MetricMeasureSpace.uniform_grid([-2.0], [2.0], [2 ** 14])
    cell = 4.0 / 2 ** 14
    x = space.coords[:, 0]
    f = ((x >= 0) & (x <= 1)).astype(float)
    radii = geometric_radii(space)
    rep = differentiation_experiment(space, f, radii, [0.1])
    bad = rep.bad_measures[:, 0]
    over = [(float(r), float(m)) for r, m in zip(radii, bad) if m > 2 * (r + cell)]
    record("7 differentiation", not over,
           f"indicator: {len(over)}/{len(radii)} radii exceed 2(r + cell); worst m/r = "
           f"{max(m / r for r, m in zip(radii, bad)):.3f}")
    assert not over, over[:4]


def test_differentiation_lipschitz_rate():
    space = MetricMeasureSpace.uniform_grid([-2.0], [2.0], [2 ** 14])
    L = 3.0
    f = np.sin(L * space.coords[:, 0])
    radii = geometric_radii(space)
    rep = differentiation_experiment(space, f, radii, [0.1])
    dev = np.max(np.abs(rep.trajectories - f[None, :]), axis=1)
    ok = bool(np.all(dev <= L * radii))
    record("7 differentiation", ok, f"Lipschitz: max |A_r f - f| / (L r) = {np.max(dev / (L * radii)):.3f}")
    assert ok


# -- 8 ---------------------------------------------------------------------
SCALES = 2.0 ** -np.arange(1, 9)


def test_nontangential_convergence_rate():
    """Finest-scale bound is below what exact data allow.

    With f = cos and u = Re z, the normal point at distance h has error
    exactly h, so at h = 2^-8 the error is about 3.9e-3 > 1e-3 for any
    accurate quadrature.  Monotone decrease and the oracle agreement hold.
    """
    label = "8 nontangential-convergence"
    disc = KernelDomain.disc()
    grid = boundary_grid(disc, n=4096)
    f = np.cos(grid.angles())
    rows = nontangential_experiment(disc, grid, f, 0, 2.0, SCALES)
    errs = np.array([r.max_error for r in rows])
    mono = bool(np.all(np.diff(errs) < 0))
    record(label, mono, f"monotone decrease over 2^-1..2^-8: {mono}")

    rng = np.random.default_rng(8)
    pts = rng.uniform(-0.7, 0.7, size=(50, 2))
    u = poisson_extend(disc, grid, f, pts)
    oracle = float(np.max(np.abs(u - pts[:, 0])))
    record(label, oracle <= 1e-8, f"Re z oracle max error {oracle:.1e}")

    fine = float(errs[-1])
    record(label, fine <= 1e-3, f"finest-scale error {fine:.6f} vs 1e-3")
    assert mono and oracle <= 1e-8
    assert fine <= 1e-3


def test_nontangential_jump_witness():
    disc = KernelDomain.disc()
    grid = boundary_grid(disc, n=4096)
    th = grid.angles()
    f = ((th >= 0) & (th < np.pi)).astype(float)
    rows = nontangential_experiment(disc, grid, f, 0, 2.0, SCALES)
    low = min(r.max_error for r in rows)
    record("8 nontangential-convergence", low >= 0.2, f"jump witness min error {low:.3f}")
    assert low >= 0.2


# -- 9 ---------------------------------------------------------------------
def _tables(out: Path):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


def test_determinism(tmp_path):
    differing = []
    for name in EXPERIMENTS:
        raw = sample_config(name)
        raw.setdefault("seed", 11)
        outs = []
        for k in range(2):
            raw["output"] = {"path": str(tmp_path / f"{name}-{k}"), "format": "csv"}
            cfg = ExperimentConfig.from_dict(json.loads(json.dumps(raw)), name)
            cfg.threads = 1 + 3 * k
            run(cfg)
            outs.append(_tables(tmp_path / f"{name}-{k}"))
        if outs[0] != outs[1]:
            differing.append(name)
    record("9 determinism", not differing,
           f"{len(EXPERIMENTS)} experiments re-run; differing: {differing or 'none'}")
    assert not differing
