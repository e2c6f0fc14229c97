import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_maximal
from hlkit import (AlgorithmFailure, DomainError, MeasurableSet, MetricMeasureSpace, distribution,
                   hl_maximal, l1_norm, maximal_field, maximal_profile, restricted_weak_type_test,
                   weak_type_pipeline)
from hlkit.maximal import boundary_slack


def test_spike_on_three_points(line3):
    f = [0.0, 3.0, 0.0]
    assert hl_maximal(line3, f, 1) == 3.0
    assert hl_maximal(line3, f, 0) == 1.5
    np.testing.assert_array_equal(maximal_field(line3, f).values, [1.5, 3.0, 1.5])


def test_profile_lists_every_realised_ball(line3):
    radii, avg, mass = maximal_profile(line3, [0.0, 3.0, 0.0], 0)
    np.testing.assert_array_equal(avg, [0.0, 1.5, 1.0])
    np.testing.assert_array_equal(mass, [1, 2, 3])
    assert np.all(np.diff(radii) > 0)


def test_interval_indicator_decay():
    g = MetricMeasureSpace.uniform_grid([-4.0], [4.0], [4096])
    x = g.coords[:, 0]
    f = ((x >= 0) & (x <= 1)).astype(float)
    Mf = maximal_field(g, f).values
    cell = 8 / 4096
    far = (x > 1.2) & (x < 1.9)
    # average over (x - r, x + r) at r = x is 1/(2x) while that ball stays on the grid
    np.testing.assert_allclose(Mf[far], 1 / (2 * x[far]), atol=2 * cell)


def test_distribution_counts_strict_superlevel():
    s = MetricMeasureSpace.from_points([[0.0], [1.0], [2.0]])
    rep = distribution(s, [1.0, 2.0, 3.0], [1.5])
    assert rep.superlevel_measures[0] == 2.0
    with pytest.raises(DomainError):
        distribution(s, [1.0, 2.0, 3.0], [2.0, 1.0])
    with pytest.raises(DomainError):
        distribution(s, [1.0, 2.0, 3.0], [0.0])


def test_restricted_weak_type_closed_form():
    g = MetricMeasureSpace.uniform_grid([-4.0], [4.0], [4096])
    E = MeasurableSet((g.coords[:, 0] >= 0) & (g.coords[:, 0] <= 1))
    rep = restricted_weak_type_test(g, E, [0.25, 0.5])
    assert rep.superlevel_measures[0] == pytest.approx(3.0, abs=2 * 8 / 4096)
    assert rep.constants[0] == pytest.approx(0.75, abs=0.01)
    assert rep.passed
    assert rep.slack == pytest.approx(2 * (8 / 4096))


def test_restricted_weak_type_rejects_bad_lambda(line3):
    E = line3.subset([1])
    with pytest.raises(DomainError):
        restricted_weak_type_test(line3, E, [1.0])
    with pytest.raises(DomainError):
        restricted_weak_type_test(line3, line3.nothing(), [0.5])


def test_boundary_slack_one_cell_per_endpoint():
    g = MetricMeasureSpace.uniform_grid([0.0], [1.0], [100])
    E = MeasurableSet((g.coords[:, 0] > 0.2) & (g.coords[:, 0] < 0.4))
    assert boundary_slack(g, E) == pytest.approx(2 / 20)


def test_chain_on_singleton():
    w = 0.25
    s = MetricMeasureSpace.from_points([[0.0], [1.0], [2.0], [3.0]], [w, 1.0, 1.0, 1.0])
    tr = weak_type_pipeline(s, s.subset([0]), 0.5)
    assert tr.holds
    assert tr.links[-1][2] == pytest.approx(8 * w)


def test_chain_links_are_ordered(rng):
    g = MetricMeasureSpace.uniform_grid([0.0], [1.0], [300])
    E = MeasurableSet(rng.random(g.n) < 0.1)
    tr = weak_type_pipeline(g, E, 0.3)
    vals = [tr.S_mass, 2 * tr.K_mass, 4 * tr.ball_mass, 4 / 0.3 * tr.ball_E_mass, 4 * tr.E_mass / 0.3]
    assert all(a <= b * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
    assert tr.to_dict()["links"][0]["holds"]


def test_chain_rejects_lambda_outside_unit_interval(line3):
    with pytest.raises(DomainError):
        weak_type_pipeline(line3, line3.subset([0]), 1.5)


def test_threads_do_not_change_the_field(rng):
    s = MetricMeasureSpace.from_points(rng.random((700, 2)))
    f = rng.standard_normal(s.n)
    a = maximal_field(s, f, threads=1).values
    b = maximal_field(s, f, threads=4).values
    np.testing.assert_array_equal(a, b)


def test_algorithm_failure_carries_condition():
    exc = AlgorithmFailure("x", "c")
    assert exc.condition == "c" and isinstance(exc, RuntimeError)


@st.composite
def small_spaces(draw):
    n = draw(st.integers(1, 9))
    dim = draw(st.integers(1, 3))
    seed = draw(st.integers(0, 2 ** 31))
    rng = np.random.default_rng(seed)
    s = MetricMeasureSpace.from_points(rng.random((n, dim)), rng.uniform(0.1, 2, n))
    return s, rng


@settings(max_examples=80, deadline=None)
@given(small_spaces())
def test_field_matches_brute_force(data):
    s, rng = data
    f = rng.standard_normal(s.n)
    want = [brute_maximal(s, f, x) for x in range(s.n)]
    np.testing.assert_allclose(maximal_field(s, f).values, want, rtol=1e-12)


@settings(max_examples=80, deadline=None)
@given(small_spaces(), st.floats(-5, 5, allow_nan=False))
def test_sublinear_and_homogeneous(data, c):
    s, rng = data
    f, g = rng.standard_normal((2, s.n))
    Mf, Mg = maximal_field(s, f).values, maximal_field(s, g).values
    assert np.all(maximal_field(s, f + g).values <= (Mf + Mg) * (1 + 1e-12) + 1e-12)
    np.testing.assert_allclose(maximal_field(s, c * f).values, abs(c) * Mf, rtol=1e-12, atol=1e-300)


@settings(max_examples=80, deadline=None)
@given(small_spaces())
def test_dominates_absolute_value_and_bounded_by_sup(data):
    s, rng = data
    f = rng.standard_normal(s.n)
    Mf = maximal_field(s, f).values
    assert np.all(Mf >= np.abs(f) * (1 - 1e-12))
    assert np.all(Mf <= np.abs(f).max() * (1 + 1e-12))


@settings(max_examples=50, deadline=None)
@given(small_spaces())
def test_weak_type_constants_recomputed(data):
    s, rng = data
    E = MeasurableSet(rng.random(s.n) < 0.5)
    if not E.mask.any():
        return
    lam = np.sort(rng.uniform(0.05, 0.95, 4))
    rep = restricted_weak_type_test(s, E, lam, slack=0.0)
    Mchi = np.array([brute_maximal(s, E.mask.astype(float), x) for x in range(s.n)])
    mE = l1_norm(s, E.mask.astype(float))
    for k, l in enumerate(lam):
        S = s.weights[Mchi > l].sum()
        assert rep.superlevel_measures[k] == pytest.approx(S, rel=1e-12)
        assert rep.constants[k] == pytest.approx(l * S / mE, rel=1e-12)
