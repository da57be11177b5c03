import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regretlab.errors import ConfigError
from regretlab.geometry import Box, EuclideanBall, NegativeEntropy, Simplex
from regretlab.solver import (
    CERTIFIED,
    TRUNCATED,
    InnerObjective,
    solve,
    solve_ball_hinge,
    solve_exact,
    solve_lagged,
    solve_lp_hinge,
)

from .strategies import sets, simplex_points, vectors


def sampled_min(obj, n=20000, seed=0):
    pts = obj.feasible.sample(np.random.default_rng(seed), n)
    return obj.values(pts).min()


# -- closed forms ------------------------------------------------------------


def test_half_squared_distance_returns_center_exactly():
    c = np.array([0.3, -0.7])
    w, cert = solve(InnerObjective.zero(Box.cube(2)).plus_half_sq(1.0, c), 1e-3)
    np.testing.assert_array_equal(w, c)
    assert cert.delta == 0.0 and cert.status == CERTIFIED


@given(vectors(3), vectors(3), st.floats(0.01, 2.0))
def test_proximal_step_on_ball_matches_closed_form(wt, g, eta):
    fs = EuclideanBall.centered(3, 1.5)
    wt = fs.project(wt)
    obj = InnerObjective.zero(fs).plus_linear(g, eta).plus_half_sq(1.0, wt)
    w, cert = solve(obj, 1e-20, method="iterative")
    np.testing.assert_allclose(w, fs.project(wt - eta * g), atol=1e-8)
    assert cert.status == CERTIFIED


@given(st.lists(vectors(2), min_size=1, max_size=8), st.floats(0.1, 3.0))
def test_dual_averaging_step_matches_first_order_condition(gs, lam):
    fs = Box.cube(2)
    t = len(gs)
    obj = InnerObjective.zero(fs).plus_linear(np.sum(gs, axis=0)).plus_half_sq(t * lam)
    expected = fs.project(-np.sum(gs, axis=0) / (t * lam))
    w_closed, _ = solve(obj)
    w_iter, _ = solve(obj, 1e-20, method="iterative")
    np.testing.assert_allclose(w_closed, expected, atol=1e-12)
    np.testing.assert_allclose(w_iter, expected, atol=1e-8)


def test_solve_exact_uses_exact_precision():
    obj = InnerObjective.zero(EuclideanBall.centered(2)).plus_linear([1.0, 2.0]).plus_half_sq(0.5, [0.2, 0.2])
    _, cert = solve_exact(obj, method="iterative")
    assert cert.delta <= 1e-10


def test_entropic_step_is_multiplicative_weights():
    fs = Simplex(4)
    w0 = np.array([0.1, 0.2, 0.3, 0.4])
    g = np.array([1.0, -0.5, 0.2, 0.0])
    eta = 0.7
    obj = InnerObjective.zero(fs).plus_linear(g, eta).plus_bregman(NegativeEntropy(), w0)
    expected = w0 * np.exp(-eta * g)
    expected /= expected.sum()
    w, _ = solve(obj)
    np.testing.assert_allclose(w, expected, atol=1e-14)
    w_iter, cert = solve(obj, 1e-14, method="iterative")
    np.testing.assert_allclose(w_iter, expected, atol=1e-6)
    assert cert.norm == "l1"


# -- certificate soundness ---------------------------------------------------


@st.composite
def euclidean_objectives(draw):
    fs = draw(sets())
    if isinstance(fs, Simplex):
        fs = Box.cube(fs.dim)
    d = fs.dim
    obj = InnerObjective.zero(fs).plus_linear(draw(vectors(d))).plus_half_sq(draw(st.floats(0.05, 5.0)),
                                                                           draw(vectors(d)))
    if draw(st.booleans()) and not (isinstance(fs, EuclideanBall) and not fs.is_centered):
        obj = obj.plus_l1(draw(st.floats(0.0, 2.0)))
    return obj


@given(euclidean_objectives(), st.sampled_from([1e-2, 1e-5, 1e-9]))
def test_certificate_bounds_suboptimality_and_distance(obj, target):
    w_star, _ = solve(obj)  # closed form
    w, cert = solve(obj, target, method="iterative", warm_start=obj.feasible.sample(np.random.default_rng(0), 1)[0])
    assert cert.delta <= target
    assert obj.value(w) - obj.value(w_star) <= cert.delta + 1e-12
    assert np.linalg.norm(w - w_star) <= cert.distance_bound + 1e-9


@given(euclidean_objectives())
def test_monotone_refinement(obj):
    start = obj.feasible.project(np.zeros(obj.feasible.dim)) + 0.0
    vals = []
    w = start
    for target in (1e-1, 1e-3, 1e-6, 1e-9):
        w, _ = solve(obj, target, method="iterative", warm_start=w)
        vals.append(obj.value(w))
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_truncation_is_reported():
    obj = InnerObjective.zero(Box.cube(5)).plus_linear(1e-4 * np.arange(5.0)).plus_half_sq(1e-3)
    _, cert = solve(obj, 1e-12, method="iterative", warm_start=np.zeros(5), max_iters=2)
    assert cert.status == TRUNCATED
    assert not cert.certified


def test_bad_inputs():
    obj = InnerObjective.zero(Box.cube(2)).plus_linear([1.0, 0.0])
    with pytest.raises(ConfigError):
        solve(obj)  # mu = 0
    with pytest.raises(ConfigError):
        solve(obj.plus_half_sq(1.0), 0.0)
    with pytest.raises(ConfigError):
        InnerObjective.zero(Box.cube(2)).plus_kl(1.0, [0.5, 0.5])


# -- lagged oracle -----------------------------------------------------------


@given(euclidean_objectives(), st.floats(1e-8, 1.0))
def test_lagged_point_respects_budget(obj, budget):
    w_star, _ = solve(obj)
    anchor = obj.feasible.sample(np.random.default_rng(3), 1)[0]
    w, cert = solve_lagged(obj, budget, anchor)
    excess = obj.value(w) - obj.value(w_star)
    assert excess <= budget + 1e-12
    assert cert.delta <= budget + 1e-12
    assert obj.feasible.contains(w)
    # collinear with the minimizer and the anchor
    v, u = w - w_star, anchor - w_star
    assert abs(v[0] * u[1] - v[1] * u[0]) <= 1e-9 * (1 + np.linalg.norm(u) ** 2)


def test_lagged_returns_anchor_when_budget_allows():
    obj = InnerObjective.zero(Box.cube(2)).plus_half_sq(1.0, [0.0, 0.0])
    w, cert = solve_lagged(obj, 1.0, [0.1, 0.1])
    np.testing.assert_array_equal(w, [0.1, 0.1])
    assert cert.delta == pytest.approx(0.01)


@given(st.data(), st.integers(2, 5), st.floats(1e-6, 1e-1))
def test_lagged_on_simplex_stays_feasible(data, d, budget):
    fs = Simplex(d)
    ref = data.draw(simplex_points(d))
    obj = InnerObjective.zero(fs).plus_linear(data.draw(vectors(d))).plus_kl(1.0, ref)
    w, cert = solve_lagged(obj, budget, data.draw(simplex_points(d)))
    assert fs.contains(w)
    assert cert.delta <= budget + 1e-12


# -- hinge objectives --------------------------------------------------------


@st.composite
def hinge_objectives(draw, fs, curvature=True):
    d = fs.dim
    obj = InnerObjective.zero(fs).plus_linear(draw(vectors(d)), 0.2)
    for _ in range(draw(st.integers(1, 6))):
        obj = obj.plus_hinge(draw(vectors(d)), draw(st.floats(-2, 2)), draw(st.floats(0.1, 2.0)))
    if curvature:
        obj = obj.plus_half_sq(draw(st.floats(0.1, 3.0)), draw(vectors(d)))
    return obj.plus_l1(draw(st.sampled_from([0.0, 0.3])))


@given(st.data())
def test_dual_solve_certificate_is_sound(data):
    # degenerate draws (parallel hinges with nearby kinks) may truncate; the
    # reported delta must still bound the suboptimality
    fs = data.draw(st.sampled_from([Box.cube(2), EuclideanBall.centered(2)]))
    obj = data.draw(hinge_objectives(fs))
    w, cert = solve(obj, 1e-10, max_iters=5000)
    assert fs.contains(w)
    assert obj.value(w) <= sampled_min(obj) + cert.delta + 1e-12


@pytest.mark.parametrize("fs", [Box.cube(3), EuclideanBall.centered(3), Simplex(3)])
def test_dual_solve_certifies_generic_instances(fs):
    rng = np.random.default_rng(11)
    for _ in range(30):
        obj = InnerObjective.zero(fs).plus_linear(rng.standard_normal(3))
        for _ in range(8):
            obj = obj.plus_hinge(rng.standard_normal(3), rng.uniform(-1, 1), rng.uniform(0.1, 2))
        if isinstance(fs, Simplex):
            obj = obj.plus_kl(rng.uniform(0.1, 2), rng.dirichlet(np.ones(3)))
        else:
            obj = obj.plus_half_sq(rng.uniform(0.1, 2), rng.standard_normal(3))
        w, cert = solve(obj, 1e-10)
        assert cert.certified
        assert obj.value(w) <= sampled_min(obj) + 1e-10


@given(st.data())
def test_linear_program_beats_samples(data):
    fs = data.draw(st.sampled_from([Box([-1, 0], [1, 2]), Simplex(3)]))
    obj = data.draw(hinge_objectives(fs, curvature=False))
    w, gap = solve_lp_hinge(obj)
    assert gap <= 1e-8
    assert obj.value(w) <= sampled_min(obj) + 1e-9


@given(st.data())
def test_ball_hinge_gap_and_samples(data):
    fs = EuclideanBall.centered(2, 1.3)
    obj = data.draw(hinge_objectives(fs, curvature=False))
    w, gap = solve_ball_hinge(obj)
    assert gap <= 1e-8
    assert fs.contains(w)
    assert obj.value(w) <= sampled_min(obj) + 1e-9


def test_values_matches_value():
    fs = Simplex(3)
    obj = (InnerObjective.zero(fs).plus_linear([0.1, -0.2, 0.3]).plus_kl(0.5, [0.2, 0.3, 0.5])
           .plus_hinge([1.0, 0.0, -1.0], 0.1).plus_l1(0.2))
    pts = fs.sample(np.random.default_rng(5), 40)
    np.testing.assert_allclose(obj.values(pts), [obj.value(p) for p in pts], rtol=0, atol=1e-13)


def test_difference_matches_value_gap():
    fs = Box.cube(3)
    obj = InnerObjective.zero(fs).plus_linear([1.0, 2.0, 3.0]).plus_half_sq(2.0, [0.5, 0, 0]).plus_hinge([1, 1, 1], 0.5)
    x, y = np.array([0.1, 0.2, -0.3]), np.array([-0.5, 0.4, 0.9])
    assert obj.difference(x, y) == pytest.approx(obj.value(x) - obj.value(y), abs=1e-13)
