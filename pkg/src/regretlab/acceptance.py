"""Acceptance criteria 1-10, grouped into named suites.

Each ``criterion_N`` function runs its experiments and returns a
:class:`CriterionResult`; :func:`run_suite` prints one verdict line per
criterion and returns the results.
"""
from __future__ import annotations

import itertools
import math
import time
from functools import lru_cache
from dataclasses import dataclass, field, replace

import numpy as np

from .algorithms import approx, make_learner, run
from .geometry import Box, EuclideanBall, Simplex, soft_threshold
from .losses import AdversarySequence, CompositePart
from .metrics import check_all, regret, slope_verdict
from .solver import solve

SUITE_CRITERIA = {
    "equivalence": (1,),
    "bounds-exact": (2, 3, 4, 5, 6),
    "wrapper": (7,),
    "bounds-approx": (8,),
    "oracles": (9, 10),
}


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} criterion {self.number}: {self.title} ({self.summary}; {self.seconds:.1f}s)"


def _collect(number, title, verdicts, extra_fail=(), note=""):
    fails = [v.line() for v in verdicts if not v.passed] + list(extra_fail)
    summary = f"{len(verdicts) - sum(not v.passed for v in verdicts)}/{len(verdicts)} checks pass"
    if note:
        summary += f"; {note}"
    return CriterionResult(number, title, not fails, summary, fails)


def _checked(tag, traj, names):
    _, verdicts = check_all(traj, names)
    return [replace(v, bound_name=f"{tag}:{v.bound_name}") for v in verdicts]


# -- 1 ------------------------------------------------------------------------

EQUIVALENCE_LEARNERS = ("ftl", "ftrl", "rda", "iol", "comid", "md", "batch-ftl")


def criterion_1(seeds=range(5), T=512, dims=(2, 10)):
    """Both regret/forward-regret inequalities with zero slack, all learners and suites."""
    verdicts = []
    for d, suite, kind, seed in itertools.product(dims, ("linear", "quadratic", "hinge"),
                                                  EQUIVALENCE_LEARNERS, seeds):
        needs_curv = kind in ("ftl", "batch-ftl") and suite != "quadratic"
        comp = CompositePart("l2", 0.1) if needs_curv else CompositePart()
        seq = AdversarySequence(suite, T, Box.cube(d), seed=seed, composite=comp)
        learner = make_learner("ftl", batch=True) if kind == "batch-ftl" else make_learner(kind)
        traj = run(learner, seq)
        verdicts += _checked(f"{kind}/{suite}/d={d}/seed={seed}", traj,
                             ("equivalence_regret", "equivalence_forward"))
    return _collect(1, "regret and forward regret within L*S of each other", verdicts)


# -- 2 ------------------------------------------------------------------------

def criterion_2(T=1000, dims=(2, 10), seeds=(0, 1)):
    verdicts = []
    for d, seed, fs in itertools.product(dims, seeds, ("box", "ball")):
        feas = Box.cube(d) if fs == "box" else EuclideanBall.centered(d)
        traj = run(make_learner("ftl"), AdversarySequence("quadratic", T, feas, seed=seed, alpha=1.0))
        verdicts += _checked(f"ftl/{fs}/d={d}/seed={seed}", traj,
                             ("ftl_regret", "ftl_stability", "ftl_forward_regret"))
    return _collect(2, "follow-the-leader logarithmic regret and stability", verdicts)


# -- 3 ------------------------------------------------------------------------

def criterion_3(horizons=(256, 1024), d=5, seeds=(0, 1, 2)):
    verdicts = []
    for T, seed, fs in itertools.product(horizons, seeds, ("ball", "box")):
        feas = Box.cube(d) if fs == "box" else EuclideanBall.centered(d)
        traj = run(make_learner("ftrl", eta=1.0 / math.sqrt(T)),
                   AdversarySequence("linear", T, feas, seed=seed))
        verdicts += _checked(f"ftrl/{fs}/T={T}/seed={seed}", traj,
                             ("ftrl_regret", "ftrl_regret_eta", "ftrl_uniform_stability"))
    return _collect(3, "regularized leader sqrt(T) regret at eta = 1/sqrt(T)", verdicts)


# -- 4 ------------------------------------------------------------------------

def criterion_4(T=1000, dims=(2, 10), seeds=(0, 1)):
    verdicts = []
    names = ("iol_regret", "iol_stability", "iol_uniform_stability")
    for d, seed in itertools.product(dims, seeds):
        for suite in ("linear", "hinge"):
            traj = run(make_learner("iol"), AdversarySequence(suite, T, EuclideanBall.centered(d), seed=seed))
            verdicts += _checked(f"iol-general/{suite}/d={d}/seed={seed}", traj, names)
        traj = run(make_learner("iol", regime="strong"),
                   AdversarySequence("quadratic", T, Box.cube(d), seed=seed))
        verdicts += _checked(f"iol-strong/d={d}/seed={seed}", traj, names)
    return _collect(4, "implicit online learning in both regimes", verdicts)


# -- 5 ------------------------------------------------------------------------

def criterion_5(T=1000, dims=(2, 10), seeds=(0, 1)):
    verdicts = []
    for d, seed in itertools.product(dims, seeds):
        ball = EuclideanBall.centered(d)
        traj = run(make_learner("rda", beta="zero"),
                   AdversarySequence("linear", T, ball, seed=seed, composite=CompositePart("l2", 0.5)))
        verdicts += _checked(f"rda-zero/d={d}/seed={seed}", traj,
                             ("rda_regret", "rda_stability", "rda_uniform_stability"))
        traj = run(make_learner("rda"),
                   AdversarySequence("hinge", T, Box.cube(d), seed=seed, composite=CompositePart("l1", 0.05)))
        verdicts += _checked(f"rda-sqrt/d={d}/seed={seed}", traj, ("rda_regret", "rda_stability"))
        traj = run(make_learner("rda", regularizer="entropy"),
                   AdversarySequence("linear", T, Simplex(d), seed=seed))
        verdicts += _checked(f"rda-sqrt-entropy/d={d}/seed={seed}", traj, ("rda_regret", "rda_stability"))
    return _collect(5, "dual averaging in both regimes", verdicts)


# -- 6 ------------------------------------------------------------------------

def criterion_6(T=1000, dims=(2, 10), seeds=(0, 1), lam=0.1):
    verdicts = []
    names = ("comid_regret", "comid_stability")
    for d, seed in itertools.product(dims, seeds):
        l1 = CompositePart("l1", lam)
        for suite in ("linear", "hinge"):
            traj = run(make_learner("comid"), AdversarySequence(suite, T, Box.cube(d), seed=seed, composite=l1))
            verdicts += _checked(f"comid-general/{suite}/d={d}/seed={seed}", traj, names)
        traj = run(make_learner("comid", regime="strong"),
                   AdversarySequence("quadratic", T, EuclideanBall.centered(d), seed=seed, composite=l1))
        verdicts += _checked(f"comid-strong/d={d}/seed={seed}", traj, names)
    return _collect(6, "composite mirror descent with an l1 term, both regimes", verdicts)


# -- 7 ------------------------------------------------------------------------

def criterion_7(T=1024, dims=(2, 10), seeds=(0, 1, 2)):
    verdicts = []
    B = math.ceil(math.sqrt(T))
    for d, seed, suite in itertools.product(dims, seeds, ("quadratic", "hinge")):
        comp = CompositePart("l2", 0.1) if suite == "hinge" else CompositePart()
        traj = run(make_learner("ftl", batch=True, B=B),
                   AdversarySequence(suite, T, Box.cube(d), seed=seed, composite=comp))
        verdicts += _checked(f"batch-ftl/{suite}/d={d}/seed={seed}", traj,
                             ("batch_stability", "batch_regret"))
    return _collect(7, f"batch wrapper around follow-the-leader, B={B}", verdicts)


# -- 8 ------------------------------------------------------------------------

APPROX_CASES = (
    ("rda", "inverse_sqrt_t", 0.5),
    ("ftrl", "inverse_horizon", 0.5),
    ("iol", "inverse_t", 0.75),
    ("iol", "inverse_t2", 0.5),
)


def criterion_8(exponents=range(6, 13), seeds=(0, 1, 2), d=5, tol=0.1):
    horizons = [2 ** k for k in exponents]
    verdicts, notes = [], []
    for kind, delta, k in APPROX_CASES:
        mode = approx(delta)
        means = []
        for T in horizons:
            rs = [regret(run(make_learner(kind), AdversarySequence("linear", T, EuclideanBall.centered(d), seed=s),
                             mode)) for s in seeds]
            means.append(float(np.mean(rs)))
        v = slope_verdict(f"{kind}/delta={delta}:slope", horizons, means, k, tol)
        verdicts.append(v)
        notes.append(f"{kind}/{delta} slope {v.empirical_value:.3f} <= {v.theoretical_value:.2f}")
    return _collect(8, "approximate updates keep sublinear regret slopes", verdicts, note=", ".join(notes))


# -- 9 ------------------------------------------------------------------------

def _instance(kind, rng, **kw):
    """A learner mid-run on a random short sequence, plus the next loss."""
    suite = kw.pop("suite")
    feas = kw.pop("feasible")
    comp = kw.pop("composite", CompositePart())
    k = int(rng.integers(0, 6))
    seed = int(rng.integers(0, 2 ** 31))
    seq = AdversarySequence(suite, k + 1, feas, seed=seed, composite=comp,
                            alpha=float(rng.uniform(0.5, 2.0)), scale=float(rng.uniform(0.5, 2.0)))
    learner = make_learner(kind, **kw)
    learner.start(seq, validate=False)
    for loss in seq.losses[:k]:
        learner.observe(loss)
    w_t = learner.play()
    loss = seq.losses[k]
    obj = learner.objective(loss, k + 1)
    return learner, seq, w_t, loss, obj, k


def _random_euclidean_set(rng, d):
    if rng.random() < 0.5:
        return Box.cube(d, -float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))
    return EuclideanBall.centered(d, float(rng.uniform(0.5, 2.0)))


def _oracle_cases():
    def md_step(rng):
        d = int(rng.integers(2, 7))
        eta = float(rng.uniform(0.05, 2.0))
        _, _, w, loss, obj, _ = _instance("md", rng, suite="linear", feasible=_random_euclidean_set(rng, d), eta=eta)
        return obj, obj.feasible.project(w - eta * loss.subgradient(w)), w

    def iol_linear(rng):
        d = int(rng.integers(2, 7))
        eta = float(rng.uniform(0.05, 2.0))
        _, _, w, loss, obj, _ = _instance("iol", rng, suite="linear", feasible=_random_euclidean_set(rng, d), eta=eta)
        return obj, obj.feasible.project(w - eta * loss.g), w

    def ftl_mean(rng):
        d = int(rng.integers(2, 7))
        learner, seq, w, loss, obj, k = _instance("ftl", rng, suite="quadratic", feasible=_random_euclidean_set(rng, d))
        centers = np.array([l.center for l in seq.losses[:k + 1]])
        return obj, obj.feasible.project(centers.mean(axis=0)), w

    def comid_soft(rng):
        d = int(rng.integers(2, 7))
        eta = float(rng.uniform(0.05, 2.0))
        lam = float(rng.uniform(0.01, 0.5))
        feas = Box.cube(d, -float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))
        _, _, w, loss, obj, _ = _instance("comid", rng, suite="linear", feasible=feas, eta=eta,
                                          composite=CompositePart("l1", lam))
        return obj, np.clip(soft_threshold(w - eta * loss.g, eta * lam), feas.lower, feas.upper), w

    def entropic_md(rng):
        d = int(rng.integers(2, 9))
        eta = float(rng.uniform(0.05, 2.0))
        _, _, w, loss, obj, _ = _instance("md", rng, suite="linear", feasible=Simplex(d), eta=eta,
                                          regularizer="entropy")
        z = np.log(w) - eta * loss.g
        z = np.exp(z - z.max())
        return obj, z / z.sum(), w

    return (("projected gradient step (mirror descent, Euclidean)", md_step),
            ("projected gradient step (implicit update, linear loss)", iol_linear),
            ("projected mean of centers (follow the leader)", ftl_mean),
            ("soft-threshold step (composite mirror descent, l1)", comid_soft),
            ("multiplicative weights (entropic mirror descent)", entropic_md))


def criterion_9(instances=100, tol=1e-8, seed=9):
    rng = np.random.default_rng(seed)
    fails, worst, n = [], {}, 0
    for name, make in _oracle_cases():
        worst[name] = 0.0
        for i in range(instances):
            obj, closed, w_t = make(rng)
            w_it, cert = solve(obj, 1e-22, warm_start=w_t, method="iterative")
            err = float(np.linalg.norm(w_it - closed))
            worst[name] = max(worst[name], err)
            n += 1
            if not err <= tol:
                fails.append(f"{name} instance {i}: |iterative - closed form| = {err:.3g}")
    res = CriterionResult(9, "closed-form updates match the iterative solver", not fails,
                          f"{n - len(fails)}/{n} instances within {tol:g}; worst "
                          + ", ".join(f"{v:.1e}" for v in worst.values()), fails)
    return res


# -- 10 -----------------------------------------------------------------------

GRID_CASES = (
    ("ftl", dict(suite="quadratic")),
    ("ftl", dict(suite="hinge", composite=CompositePart("l2", 1.0))),
    ("ftrl", dict(suite="linear", eta=1.0)),
    ("ftrl", dict(suite="hinge", eta=1.0)),
    ("rda", dict(suite="linear", composite=CompositePart("l1", 0.1))),
    ("rda", dict(suite="hinge", beta="zero", composite=CompositePart("l2", 1.0))),
    ("iol", dict(suite="hinge", eta=1.0)),
    ("iol", dict(suite="quadratic", eta=0.5)),
    ("comid", dict(suite="linear", eta=0.5, composite=CompositePart("l1", 0.2))),
    ("md", dict(suite="hinge", eta=0.5)),
)


@lru_cache(maxsize=8)
def _grid(kind, lo, hi, step, center=None, radius=None):
    xs = np.arange(lo[0], hi[0] + step / 2, step)
    ys = np.arange(lo[1], hi[1] + step / 2, step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = np.column_stack([X.ravel(), Y.ravel()])
    if kind == "ball":
        # lattice points outside the ball are replaced by their projections,
        # which covers the curved boundary at the interior spacing
        W -= center
        r = np.sqrt(np.einsum("ij,ij->i", W, W))
        W *= np.minimum(1.0, radius / np.maximum(r, 1e-300))[:, None]
        W += center
    W.setflags(write=False)
    return W


def grid_points(fs, step=1e-3):
    """Lattice of ``step`` over the set's bounding box, mapped into the set."""
    if isinstance(fs, Box):
        return _grid("box", tuple(fs.lower), tuple(fs.upper), step)
    lo, hi = fs.center - fs.radius, fs.center + fs.radius
    return _grid("ball", tuple(lo), tuple(hi), step, tuple(fs.center), fs.radius)


def kink_points(obj, step=1e-3):
    """Points spaced ``step`` along each hinge line ``g^T w = theta`` inside the set.

    Off a kink the objective grows linearly while along it the growth is only
    quadratic, so a plain lattice can land far from a minimizer that sits on
    a kink. Sampling the kinks at the same spacing removes that bias.
    """
    fs = obj.feasible
    if isinstance(fs, Box):
        mid, reach = 0.5 * (fs.lower + fs.upper), 0.5 * float(np.linalg.norm(fs.upper - fs.lower))
    else:
        mid, reach = fs.center, fs.radius
    out = []
    for j in range(obj.n_hinges):
        g, th = obj.hinge_g[j], obj.hinge_theta[j]
        gg = float(g @ g)
        if gg == 0:
            continue
        p0 = mid + (th - float(g @ mid)) / gg * g
        u = np.array([-g[1], g[0]]) / math.sqrt(gg)
        ts = np.arange(-reach, reach + step / 2, step)
        P = p0 + ts[:, None] * u
        if isinstance(fs, Box):
            inside = np.all((P >= fs.lower) & (P <= fs.upper), axis=1)
        else:
            inside = np.sum((P - fs.center) ** 2, axis=1) <= fs.radius ** 2
        out.append(P[inside])
    return np.vstack(out) if out else np.zeros((0, 2))


def grid_argmin(obj, step=1e-3):
    """Brute-force minimizer of ``obj`` over a ``step`` grid of its 2-d set (plus its kinks)."""
    W = np.vstack([grid_points(obj.feasible, step), kink_points(obj, step)])
    return W[int(np.argmin(obj.values(W)))]


def criterion_10(instances=20, tol=2e-3, step=1e-3, seed=10):
    rng = np.random.default_rng(seed)
    fails, n, worst = [], 0, 0.0
    for kind, spec in GRID_CASES:
        for i in range(instances):
            kw = dict(spec)
            kw["feasible"] = Box.cube(2) if rng.random() < 0.5 else EuclideanBall.centered(2)
            _, _, w_t, _, obj, _ = _instance(kind, rng, **kw)
            w, _ = solve(obj, 1e-12, warm_start=w_t)
            g = grid_argmin(obj, step)
            err = float(np.linalg.norm(w - g))
            worst = max(worst, err)
            n += 1
            if not err <= tol:
                fails.append(f"{kind}/{spec['suite']} instance {i}: |update - grid| = {err:.3g}")
    return CriterionResult(10, "updates match brute-force grid minimization in d=2", not fails,
                           f"{n - len(fails)}/{n} instances within {tol:g}; worst {worst:.2e}", fails)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10}


def run_criterion(number: int, **kw) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](**kw)
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(name: str = "all", echo=print) -> list:
    """Run a named suite (or ``"all"``) and print one line per criterion."""
    if name == "all":
        numbers = sorted(CRITERIA)
    elif name in SUITE_CRITERIA:
        numbers = SUITE_CRITERIA[name]
    else:
        from .errors import ConfigError

        raise ConfigError(f"unknown acceptance suite {name!r}; choose from {', '.join(SUITE_CRITERIA)}")
    results = []
    for k in numbers:
        res = run_criterion(k)
        echo(res.line())
        for f in res.failures[:20]:
            echo(f"    {f}")
        results.append(res)
    return results
