import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from regretlab.algorithms import EXACT, FTL, IOL, MD, approx, run
from regretlab.errors import ConfigError
from regretlab.geometry import Box, EuclideanBall
from regretlab.losses import (
    AdversarySequence,
    CompositePart,
    HindsightOptimum,
    LinearLoss,
    LossList,
    QuadraticLoss,
)
from regretlab.metrics import (
    BOUND_NAMES,
    BoundVerdict,
    Trajectory,
    check_all,
    check_bound,
    check_equivalence,
    comid_regret_general_bound,
    diagnose,
    forward_regret,
    ftl_regret_bound,
    ftl_stability_bound,
    ftrl_regret_bound,
    iol_regret_general_bound,
    rda_regret_sqrt_bound,
    regret,
    slope_fit,
    slope_verdict,
    stability,
    uniform_stability,
)

BOX = Box.cube(2)


def constant_trajectory(seq, w, learner="ftl"):
    pts = np.tile(np.asarray(w, dtype=float), (len(seq) + 1, 1))
    return Trajectory(points=pts, sequence=seq, learner=learner)


# -- trajectory quantities ----------------------------------------------------


def test_constant_learner_at_optimum_has_zero_everything():
    c = np.array([0.3, -0.1])
    seq = LossList((QuadraticLoss(c, 1.0),) * 6, BOX)
    rep = diagnose(constant_trajectory(seq, c))
    # the hindsight point is a weighted mean, equal to c up to rounding
    assert rep.regret == pytest.approx(0.0, abs=1e-15)
    assert rep.forward_regret == pytest.approx(0.0, abs=1e-15)
    assert rep.stability == 0.0


def test_constant_learner_has_equal_regret_and_forward_regret():
    seq = AdversarySequence("linear", 12, BOX, 3)
    rep = diagnose(constant_trajectory(seq, [0.5, 0.5]))
    assert rep.regret == rep.forward_regret
    assert rep.stability == 0.0
    assert rep.regret > 0


def test_single_step_stability_is_distance():
    seq = LossList((LinearLoss([1.0, 0.0]),), BOX)
    traj = Trajectory(points=np.array([[0.0, 0.0], [0.3, 0.4]]), sequence=seq, learner="ftl")
    assert stability(traj) == pytest.approx(0.5)
    assert stability(traj, "l1") == pytest.approx(0.7)


def test_regret_on_hand_example():
    # l_1 = l_2 = <(1, 0), w> on the unit box, w* = (-1, y)
    seq = LossList((LinearLoss([1.0, 0.0]),) * 2, BOX)
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
    traj = Trajectory(points=pts, sequence=seq, learner="ftl")
    assert regret(traj) == pytest.approx((0 + 1) - (-2))
    assert forward_regret(traj) == pytest.approx((1 - 1) - (-2))


@st.composite
def trajectories(draw):
    T = draw(st.integers(1, 10))
    seq = AdversarySequence(draw(st.sampled_from(["linear", "quadratic", "hinge"])), T,
                            EuclideanBall.centered(3), draw(st.integers(0, 1000)))
    pts = draw(arrays(np.float64, (T + 1, 3), elements=st.floats(-0.57, 0.57)))
    return Trajectory(points=pts, sequence=seq, learner="ftl")


@given(trajectories())
def test_uniform_series_sums_to_stability(traj):
    assert np.sum(uniform_stability(traj)) == pytest.approx(stability(traj), abs=1e-12)
    assert np.all(uniform_stability(traj) >= 0)


@given(trajectories(), st.integers(0, 1000))
def test_equivalence_holds_for_any_trajectory(traj, seed):
    # any fixed comparator works; the identity is pathwise
    w = EuclideanBall.centered(3).sample(np.random.default_rng(seed), 1)[0]
    opt = HindsightOptimum(w, 0.0)
    rep = diagnose(traj, opt)
    for v in check_equivalence(rep, traj.sequence.total_lipschitz()):
        assert v.slack_applied == 0.0
        assert v.passed


def test_mirror_descent_matches_term_by_term_oracle():
    seq = AdversarySequence("hinge", 50, EuclideanBall.centered(3), 8)
    traj = run(MD(eta=0.05), seq)
    opt = traj.optimum()
    W = traj.points
    total, fwd, stab = 0.0, 0.0, 0.0
    for t, l in enumerate(seq.losses):
        total += max(0.0, l.threshold - l.g @ W[t]) - max(0.0, l.threshold - l.g @ opt.point)
        fwd += max(0.0, l.threshold - l.g @ W[t + 1]) - max(0.0, l.threshold - l.g @ opt.point)
        stab += math.sqrt(sum((W[t + 1] - W[t]) ** 2))
    rep = diagnose(traj)
    assert rep.regret == pytest.approx(total, abs=1e-10)
    assert rep.forward_regret == pytest.approx(fwd, abs=1e-10)
    assert rep.stability == pytest.approx(stab, abs=1e-12)


def test_iol_forward_regret_by_resummation():
    seq = AdversarySequence("quadratic", 30, BOX, 2)
    traj = run(IOL(eta=0.2), seq)
    w_star = traj.optimum().point
    terms = [0.5 * l.alpha * (np.sum((traj.points[t + 1] - l.center) ** 2) - np.sum((w_star - l.center) ** 2))
             for t, l in enumerate(seq.losses)]
    assert forward_regret(traj) == pytest.approx(math.fsum(terms), abs=1e-10)


# -- bound formulas ----------------------------------------------------------


def test_ftl_bound_value():
    assert ftl_regret_bound(2.0, 1.0, 100) == pytest.approx(8.0 * (1.0 + math.log(100)))
    assert ftl_stability_bound(2.0, 1.0, 100) == pytest.approx(4.0 * (1.0 + math.log(100)))


@pytest.mark.parametrize("bound", [
    lambda T: ftl_regret_bound(1.5, 0.5, T),
    lambda T: ftrl_regret_bound(1.0, 2.0, 3.0, T),
    lambda T: iol_regret_general_bound(1.0, 0.5, T),
    lambda T: comid_regret_general_bound(1.0, 0.5, T),
    lambda T: rda_regret_sqrt_bound(1.0, 2.0, T),
])
def test_bounds_are_monotone_in_horizon(bound):
    vals = [bound(T) for T in range(1, 300)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@given(st.floats(0.1, 2.0), st.floats(0.01, 100.0))
def test_slope_fit_recovers_exponent(k, c):
    T = 2.0 ** np.arange(6, 13)
    assert slope_fit(T, c * T ** k) == pytest.approx(k, abs=1e-9)


def test_slope_verdict_tolerance():
    T = 2.0 ** np.arange(6, 13)
    assert slope_verdict("x", T, T ** 0.55, 0.5).passed
    assert not slope_verdict("x", T, T ** 0.7, 0.5).passed


def test_verdict_rule():
    assert BoundVerdict("b", 1.0, 1.0 + 5e-9).passed
    assert not BoundVerdict("b", 1.0, 1.0 + 2e-8).passed
    assert BoundVerdict("b", 1.0, 1.5, 0.5).passed
    assert BoundVerdict("b", 1.0, 2.0).line().startswith("FAIL b:")


# -- verdicts on runs ---------------------------------------------------------


@pytest.mark.parametrize("learner", [FTL, IOL, MD])
def test_empty_horizon_verdicts_pass(learner):
    # an empty quadratic suite has no curvature of its own, the composite supplies it
    seq = AdversarySequence("quadratic", 0, BOX, composite=CompositePart("l2", 0.5))
    rep, verdicts = check_all(run(learner(), seq))
    assert rep.regret == 0.0 and rep.stability == 0.0
    assert len(verdicts) >= 4 and all(v.passed for v in verdicts)


def test_bound_for_wrong_learner_is_refused():
    traj = run(FTL(), AdversarySequence("quadratic", 5, BOX))
    with pytest.raises(ConfigError):
        check_bound(traj, "iol_regret")
    with pytest.raises(ConfigError):
        check_bound(traj, "batch_regret")
    with pytest.raises(ConfigError):
        check_bound(traj, "not_a_bound")
    assert "ftl_regret" in BOUND_NAMES


def test_exact_mode_slack_is_negligible():
    seq = AdversarySequence("quadratic", 60, EuclideanBall.centered(3), 1)
    traj = run(FTL(), seq, EXACT)
    rep, verdicts = check_all(traj)
    assert rep.certificate_slack < 1e-4
    assert all(v.passed for v in verdicts)


def test_ftl_forward_regret_is_nonpositive():
    seq = AdversarySequence("quadratic", 80, BOX, 6, alpha=0.7)
    traj = run(FTL(), seq)
    v = check_bound(traj, "ftl_forward_regret")
    assert v.empirical_value <= v.slack_applied + 1e-8
    assert v.passed


@pytest.mark.parametrize("seed", range(20))
def test_iol_general_bounds_hold(seed):
    seq = AdversarySequence("hinge", 40, EuclideanBall.centered(5), seed)
    _, verdicts = check_all(run(IOL(), seq))
    assert [v.bound_name for v in verdicts] == ["equivalence_regret", "equivalence_forward", "iol_regret",
                                                "iol_stability", "iol_uniform_stability"]
    assert all(v.passed for v in verdicts), [v.line() for v in verdicts]


def test_approx_mode_slack_is_charged():
    seq = AdversarySequence("quadratic", 40, BOX, 4)
    traj = run(FTL(), seq, approx("constant", 1e-3))
    rep, verdicts = check_all(traj)
    assert rep.certificate_slack > 0
    reg = next(v for v in verdicts if v.bound_name == "ftl_regret")
    assert reg.slack_applied >= rep.certificate_slack
    assert all(v.passed for v in verdicts)
