"""Regret, forward regret and stability of a trajectory, and bound verdicts.

Bound verdicts follow one rule: ``pass`` iff
``empirical <= theoretical + slack + 1e-8``. The slack converts each solve
certificate ``delta_t`` into an iterate-distance ``e_t = sqrt(2 delta_t / mu_t)``
and charges ``L * sum_t e_t`` to regret-type quantities and ``e_t + e_{t+1}``
to each consecutive-iterate distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DiagnosticError
from .geometry import dual_norm_grad_bound, norm
from .losses import HindsightOptimum, hindsight_optimum

VERDICT_TOL = 1e-8


@dataclass(eq=False)
class Trajectory:
    """Play/observe record of one run.

    Attributes
    ----------
    points : ndarray, shape (T + 1, d)
        ``w_1 .. w_{T+1}``; the last row is the provisional next point.
    sequence : AdversarySequence or LossList
        The losses ``l_1 .. l_T`` and the shared composite term.
    learner : str
    norm : str
        Norm used for stability (paired with the learner's regularizer).
    deltas, mus : ndarray, shape (T,)
        Certificate of the solve that produced ``w_{t+1}``.
    statuses : tuple of str
    etas, betas : ndarray or None
        Per-round step sizes and dual-averaging weights, when used.
    info : dict
        Learner description (regime, regularizer, constants).
    inner : Trajectory or None
        For the batch wrapper, the inner learner's run on block averages.
    """

    points: np.ndarray
    sequence: object
    learner: str
    norm: str = "l2"
    deltas: np.ndarray | None = None
    mus: np.ndarray | None = None
    statuses: tuple = ()
    etas: np.ndarray | None = None
    betas: np.ndarray | None = None
    info: dict = field(default_factory=dict)
    inner: "Trajectory | None" = None
    _optimum: HindsightOptimum | None = field(default=None, repr=False)

    def __post_init__(self):
        T = self.horizon
        if self.deltas is None:
            self.deltas = np.zeros(T)
        if self.mus is None:
            self.mus = np.ones(T)
        if not self.statuses:
            self.statuses = ("Certified",) * T

    @property
    def horizon(self) -> int:
        return max(self.points.shape[0] - 1, 0)

    @property
    def feasible(self):
        return self.sequence.feasible

    @property
    def losses(self):
        return self.sequence.losses

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def optimum(self) -> HindsightOptimum:
        """Hindsight optimum of the sequence (computed once)."""
        if self._optimum is None:
            self._optimum = hindsight_optimum(self.sequence)
        return self._optimum

    def set_optimum(self, opt: HindsightOptimum) -> None:
        self._optimum = opt

    def errors(self) -> np.ndarray:
        """``e_t = sqrt(2 delta_t / mu_t)`` for ``w_2 .. w_{T+1}``."""
        return np.sqrt(2.0 * np.maximum(self.deltas, 0.0) / self.mus)

    def step_errors(self) -> np.ndarray:
        """Per-step distance slack ``e_t + e_{t+1}`` (``e_1 = 0``)."""
        e = self.errors()
        return np.concatenate([[0.0], e[:-1]]) + e if e.size else e

    def truncated_steps(self) -> list:
        return [t + 1 for t, s in enumerate(self.statuses) if s != "Certified"]


@dataclass(frozen=True)
class DiagnosticsReport:
    regret: float
    forward_regret: float
    stability: float
    uniform_stability_series: np.ndarray
    hindsight_value: float
    hindsight_slack: float
    certificate_slack: float


@dataclass(frozen=True)
class BoundVerdict:
    bound_name: str
    theoretical_value: float
    empirical_value: float
    slack_applied: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.empirical_value <= self.theoretical_value + self.slack_applied + VERDICT_TOL)

    # alias matching the serialized column name
    @property
    def pass_(self) -> bool:
        return self.passed

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"{tag} {self.bound_name}: empirical={self.empirical_value:.6g} "
                f"bound={self.theoretical_value:.6g} slack={self.slack_applied:.3g}")


# -- trajectory quantities ----------------------------------------------------

def _opt(traj, opt):
    if opt is not None:
        return opt
    try:
        return traj.optimum()
    except Exception as exc:  # noqa: BLE001 - surface as a diagnostic
        raise DiagnosticError(f"hindsight optimum unavailable: {exc}") from exc


def loss_values(traj: Trajectory, offset: int = 0) -> np.ndarray:
    """``l_t(w_{t+offset}) + r(w_{t+offset})`` for ``t = 1..T``."""
    T = traj.horizon
    seq = traj.sequence
    return np.array([seq.total_value(t, traj.points[t - 1 + offset]) for t in range(1, T + 1)])


def comparator_values(traj: Trajectory, w_star) -> np.ndarray:
    seq = traj.sequence
    return np.array([seq.total_value(t, w_star) for t in range(1, traj.horizon + 1)])


def regret(traj: Trajectory, opt: HindsightOptimum | None = None) -> float:
    """``sum_t [f_t(w_t) - f_t(w*)]``."""
    if traj.horizon == 0:
        return 0.0
    opt = _opt(traj, opt)
    return float(np.sum(loss_values(traj, 0) - comparator_values(traj, opt.point)))


def forward_regret(traj: Trajectory, opt: HindsightOptimum | None = None) -> float:
    """``sum_t [f_t(w_{t+1}) - f_t(w*)]``."""
    if traj.horizon == 0:
        return 0.0
    opt = _opt(traj, opt)
    return float(np.sum(loss_values(traj, 1) - comparator_values(traj, opt.point)))


def uniform_stability(traj: Trajectory, kind: str | None = None) -> np.ndarray:
    """``||w_t - w_{t+1}||`` for ``t = 1..T``."""
    kind = kind or traj.norm
    diffs = np.diff(traj.points, axis=0)
    if kind == "l2":
        return np.sqrt(np.sum(diffs * diffs, axis=1))
    if kind == "l1":
        return np.sum(np.abs(diffs), axis=1)
    return np.array([norm(v, kind) for v in diffs])


def stability(traj: Trajectory, kind: str | None = None) -> float:
    """``sum_t ||w_t - w_{t+1}||``."""
    return float(np.sum(uniform_stability(traj, kind)))


def theorem_lipschitz(traj: Trajectory) -> float:
    """Lipschitz constant that appears in the learner's own bounds.

    Dual averaging and composite mirror descent only linearize ``l_t``, so
    their bounds use the constant of ``l_t``; the others see ``l_t + r``.
    """
    seq = traj.sequence
    base = traj.info.get("base", traj.learner)
    if base in ("rda", "comid"):
        return seq.lipschitz(traj.norm)
    return seq.total_lipschitz(traj.norm)


def certificate_slack(traj: Trajectory, lipschitz: float | None = None) -> float:
    L = theorem_lipschitz(traj) if lipschitz is None else lipschitz
    return float(L * np.sum(traj.errors()))


def diagnose(traj: Trajectory, opt: HindsightOptimum | None = None) -> DiagnosticsReport:
    """Compute every trajectory quantity in one pass."""
    us = uniform_stability(traj)
    if traj.horizon == 0:
        return DiagnosticsReport(0.0, 0.0, 0.0, us, 0.0, 0.0, 0.0)
    opt = _opt(traj, opt)
    now = loss_values(traj, 0)
    nxt = loss_values(traj, 1)
    ref = comparator_values(traj, opt.point)
    return DiagnosticsReport(
        regret=float(np.sum(now - ref)),
        forward_regret=float(np.sum(nxt - ref)),
        stability=float(np.sum(us)),
        uniform_stability_series=us,
        hindsight_value=opt.value,
        hindsight_slack=opt.eps,
        certificate_slack=certificate_slack(traj),
    )


def check_equivalence(report: DiagnosticsReport, lipschitz: float):
    """Both directions of the regret / forward-regret equivalence.

    ``R <= L S + FR`` and ``FR <= L S + R`` hold for every trajectory because
    ``|f_t(w_t) - f_t(w_{t+1})| <= L ||w_t - w_{t+1}||`` term by term.
    """
    ls = lipschitz * report.stability
    return (
        BoundVerdict("equivalence_regret", ls + report.forward_regret, report.regret),
        BoundVerdict("equivalence_forward", ls + report.regret, report.forward_regret),
    )


# -- closed-form bounds ------------------------------------------------------

def harmonic(T: int) -> float:
    return float(np.sum(1.0 / np.arange(1, T + 1))) if T > 0 else 0.0


def ftl_regret_bound(L, alpha, T):
    return 0.0 if T <= 0 else 2.0 * L * L / alpha * (1.0 + math.log(T))


def ftl_stability_bound(L, alpha, T):
    return 0.0 if T <= 0 else 2.0 * L / alpha * (1.0 + math.log(T))


def ftl_step_bound(L, alpha, t):
    return L / ((t - 0.5) * alpha)


def ftrl_regret_bound(L, G, D, T):
    """Tuned form ``2 L sqrt(G D) sqrt(T)``."""
    return 2.0 * L * math.sqrt(G * D) * math.sqrt(max(T, 0))


def ftrl_regret_bound_eta(L, G, D, eta, T):
    """``G D / eta + L^2 eta T`` for a fixed step ``eta``."""
    return 0.0 if T <= 0 else G * D / eta + L * L * eta * T


def ftrl_forward_bound(G, D, eta, T):
    return 0.0 if T <= 0 else G * D / eta


def iol_regret_general_bound(L, R_star, T):
    return 2.0 * L * math.sqrt(2.0 * R_star) * math.sqrt(max(T, 0))


def iol_regret_strong_bound(L, alpha, R_star, T):
    return 0.0 if T <= 0 else 2.0 * L * L / alpha * (1.0 + math.log(T)) + alpha * R_star


def comid_regret_general_bound(L, R_star, T):
    return L * math.sqrt(2.0 * R_star) * math.sqrt(max(T, 0))


def comid_regret_strong_bound(L, alpha, R_star, T):
    return iol_regret_strong_bound(L, alpha, R_star, T)


def rda_regret_strong_bound(L, alpha, T):
    return ftl_regret_bound(L, alpha, T)


def rda_stability_strong_bound(L, alpha, T):
    return ftl_stability_bound(L, alpha, T)


def rda_regret_sqrt_bound(L, D, T):
    return (D * D + L * (2.0 * L + D)) * math.sqrt(max(T, 0))


def rda_stability_sqrt_bound(L, D, T):
    return (2.0 * L + D) * math.sqrt(max(T, 0))


def rda_forward_sqrt_bound(D, T):
    return math.sqrt(max(T, 0)) * D * D


def batch_stability_bound(T, B, D):
    return T / B * D


def slope_fit(horizons, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(horizons)``."""
    x = np.log(np.asarray(horizons, dtype=float))
    y = np.log(np.maximum(np.asarray(values, dtype=float), 1e-300))
    return float(np.polyfit(x, y, 1)[0])


def slope_verdict(name, horizons, values, stated_exponent, tol=0.1) -> BoundVerdict:
    """Verdict for an ``O(T^k)`` claim: fitted exponent at most ``k + tol``."""
    return BoundVerdict(name, stated_exponent + tol, slope_fit(horizons, values))


# -- per-learner bound checks ------------------------------------------------

BOUND_NAMES = (
    "equivalence_regret", "equivalence_forward",
    "ftl_regret", "ftl_stability", "ftl_forward_regret", "ftl_uniform_stability",
    "ftrl_regret", "ftrl_regret_eta", "ftrl_stability", "ftrl_forward_regret",
    "ftrl_uniform_stability",
    "iol_regret", "iol_stability", "iol_uniform_stability",
    "rda_regret", "rda_stability", "rda_forward_regret", "rda_uniform_stability",
    "comid_regret", "comid_stability",
    "md_regret", "md_stability",
    "batch_stability", "batch_regret",
)

DEFAULT_BOUNDS = {
    "ftl": ("ftl_regret", "ftl_stability", "ftl_forward_regret", "ftl_uniform_stability"),
    "ftrl": ("ftrl_regret", "ftrl_regret_eta", "ftrl_stability", "ftrl_forward_regret",
             "ftrl_uniform_stability"),
    "iol": ("iol_regret", "iol_stability", "iol_uniform_stability"),
    "rda": ("rda_regret", "rda_stability", "rda_forward_regret", "rda_uniform_stability"),
    "comid": ("comid_regret", "comid_stability"),
    "md": ("md_regret", "md_stability"),
    "batch": ("batch_stability", "batch_regret"),
}


def default_bounds(traj: Trajectory) -> tuple:
    names = ("equivalence_regret", "equivalence_forward")
    base = traj.info.get("base", traj.learner)
    if traj.info.get("wrapped"):
        return names + DEFAULT_BOUNDS["batch"]
    return names + DEFAULT_BOUNDS.get(base, ())


def _regime(traj):
    return traj.info.get("regime", "general")


def _step_verdict(name, us, bounds, slack):
    excess = us - bounds - slack
    worst = float(np.max(excess)) if excess.size else -math.inf
    return BoundVerdict(name, 0.0, max(worst, -math.inf) if excess.size else 0.0, 0.0)


def _r_star(traj, opt):
    reg = traj.info["regularizer_obj"]
    return reg.value(opt.point)


def check_bound(traj: Trajectory, bound_name: str, report: DiagnosticsReport | None = None,
                opt: HindsightOptimum | None = None) -> BoundVerdict:
    """Evaluate one named bound on a trajectory.

    Raises
    ------
    ConfigError
        If the bound does not apply to the trajectory's learner or regime.
    """
    base = traj.info.get("base", traj.learner)
    T = traj.horizon
    if report is None:
        report = diagnose(traj, opt)
    if T > 0:
        opt = _opt(traj, opt)
    L = theorem_lipschitz(traj)
    e = traj.errors()
    cert = float(L * np.sum(e))
    eps = opt.eps if opt is not None else 0.0
    stab_slack = float(np.sum(traj.step_errors()))
    us = report.uniform_stability_series

    if bound_name == "equivalence_regret":
        return check_equivalence(report, traj.sequence.total_lipschitz(traj.norm))[0]
    if bound_name == "equivalence_forward":
        return check_equivalence(report, traj.sequence.total_lipschitz(traj.norm))[1]

    def need(*bases):
        if base not in bases:
            raise ConfigError(f"bound {bound_name!r} does not apply to learner {base!r}")

    alpha = traj.info.get("alpha")
    D = traj.feasible.diameter_in(traj.norm)

    if bound_name.startswith("batch_"):
        if not traj.info.get("wrapped"):
            raise ConfigError(f"bound {bound_name!r} needs a batch-wrapped run")
        return _check_batch(traj, bound_name, report, opt)

    if bound_name.startswith("ftl_"):
        need("ftl")
        if bound_name == "ftl_regret":
            return BoundVerdict(bound_name, ftl_regret_bound(L, alpha, T), report.regret, cert + eps)
        if bound_name == "ftl_stability":
            return BoundVerdict(bound_name, ftl_stability_bound(L, alpha, T), report.stability, stab_slack)
        if bound_name == "ftl_forward_regret":
            return BoundVerdict(bound_name, 0.0, report.forward_regret, cert + eps)
        if bound_name == "ftl_uniform_stability":
            t = np.arange(1, T + 1)
            return _step_verdict(bound_name, us, ftl_step_bound(L, alpha, t), traj.step_errors())

    if bound_name.startswith("ftrl_"):
        need("ftrl")
        eta = traj.info["eta"]
        G = traj.info["G"]
        if bound_name == "ftrl_regret":
            return BoundVerdict(bound_name, ftrl_regret_bound(L, G, D, T), report.regret, cert + eps)
        if bound_name == "ftrl_regret_eta":
            return BoundVerdict(bound_name, ftrl_regret_bound_eta(L, G, D, eta, T), report.regret, cert + eps)
        if bound_name == "ftrl_stability":
            return BoundVerdict(bound_name, L * eta * T, report.stability, stab_slack)
        if bound_name == "ftrl_forward_regret":
            return BoundVerdict(bound_name, ftrl_forward_bound(G, D, eta, T), report.forward_regret,
                                cert + eps + float(np.sum(np.maximum(traj.deltas, 0))) / eta)
        if bound_name == "ftrl_uniform_stability":
            return _step_verdict(bound_name, us, np.full(T, L * eta), traj.step_errors())

    if bound_name.startswith("iol_"):
        need("iol")
        etas = traj.etas
        if bound_name == "iol_regret":
            if _regime(traj) == "strong":
                theo = iol_regret_strong_bound(L, alpha, _r_star(traj, opt), T) if T else 0.0
            else:
                theo = iol_regret_general_bound(L, traj.info["R_star_used"], T) if T else 0.0
            return BoundVerdict(bound_name, theo, report.regret, cert + eps)
        if bound_name == "iol_stability":
            return BoundVerdict(bound_name, 2.0 * L * float(np.sum(etas)), report.stability, stab_slack)
        if bound_name == "iol_uniform_stability":
            return _step_verdict(bound_name, us, 2.0 * L * etas, traj.step_errors())

    if bound_name.startswith("rda_"):
        need("rda")
        strong = _regime(traj) == "strong"
        if bound_name == "rda_regret":
            theo = rda_regret_strong_bound(L, alpha, T) if strong else rda_regret_sqrt_bound(L, D, T)
            return BoundVerdict(bound_name, theo, report.regret, cert + eps)
        if bound_name == "rda_stability":
            theo = rda_stability_strong_bound(L, alpha, T) if strong else rda_stability_sqrt_bound(L, D, T)
            return BoundVerdict(bound_name, theo, report.stability, stab_slack)
        if bound_name == "rda_forward_regret":
            theo = 0.0 if strong else rda_forward_sqrt_bound(D, T)
            # the forward-regret argument is on the linearized losses
            lin = _linearized_forward_regret(traj, opt)
            return BoundVerdict(bound_name, theo, lin, cert + eps)
        if bound_name == "rda_uniform_stability":
            t = np.arange(1, T + 1, dtype=float)
            if strong:
                bounds = 2.0 * L / (alpha * t)
            else:
                # vacuous at t = 1
                bounds = np.where(t >= 2, (2.0 * L + D) / np.sqrt(np.maximum(t - 1.0, 1.0)), np.inf)
            return _step_verdict(bound_name, us, bounds, traj.step_errors())

    if bound_name.startswith("comid_") or bound_name.startswith("md_"):
        need("comid" if bound_name.startswith("comid_") else "md")
        etas = traj.etas
        if bound_name.endswith("_regret"):
            if _regime(traj) == "strong":
                theo = comid_regret_strong_bound(L, alpha, _r_star(traj, opt), T) if T else 0.0
            else:
                theo = comid_regret_general_bound(L, traj.info["R_star_used"], T) if T else 0.0
            return BoundVerdict(bound_name, theo, report.regret, cert + eps)
        if bound_name.endswith("_stability"):
            return BoundVerdict(bound_name, 2.0 * L * float(np.sum(etas)), report.stability, stab_slack)

    raise ConfigError(f"unknown bound {bound_name!r}")


def _linearized_forward_regret(traj, opt):
    """``sum_t [g_t^T (w_{t+1} - w*) + r(w_{t+1}) - r(w*)]`` with ``g_t`` at ``w_t``."""
    seq = traj.sequence
    comp = seq.composite
    total = 0.0
    for t, loss in enumerate(seq.losses):
        g = loss.subgradient(traj.points[t])
        total += float(g @ (traj.points[t + 1] - opt.point))
        total += comp.value(traj.points[t + 1]) - comp.value(opt.point)
    return total


def _check_batch(traj, bound_name, report, opt):
    B = traj.info["B"]
    T = traj.horizon
    D = traj.feasible.diameter_in(traj.norm)
    if bound_name == "batch_stability":
        return BoundVerdict(bound_name, batch_stability_bound(T, B, D), report.stability, 0.0)
    inner = traj.inner
    K = T // B
    L = traj.sequence.total_lipschitz(traj.norm)
    if K == 0:
        return BoundVerdict(bound_name, L * D * B, report.regret, 0.0)
    full = truncate(inner, K)
    r_inner = regret(full)
    theo = B * r_inner + L * D * B
    return BoundVerdict(bound_name, theo, report.regret, opt.eps + B * full.optimum().eps)


def truncate(traj: Trajectory, K: int) -> Trajectory:
    """First ``K`` rounds of a trajectory (keeps ``w_{K+1}``)."""
    from .losses import LossList

    seq = LossList(tuple(traj.sequence.losses[:K]), traj.sequence.feasible, traj.sequence.composite)
    return Trajectory(
        points=traj.points[:K + 1], sequence=seq, learner=traj.learner, norm=traj.norm,
        deltas=traj.deltas[:K], mus=traj.mus[:K], statuses=tuple(traj.statuses[:K]),
        etas=None if traj.etas is None else traj.etas[:K],
        betas=None if traj.betas is None else traj.betas[:K], info=dict(traj.info),
    )


def check_all(traj: Trajectory, names=None, opt: HindsightOptimum | None = None):
    """Diagnostics plus verdicts for ``names`` (default: every applicable bound)."""
    report = diagnose(traj, opt)
    names = default_bounds(traj) if names is None else names
    return report, [check_bound(traj, n, report, opt) for n in names]


def gradient_bound(traj: Trajectory) -> float:
    return dual_norm_grad_bound(traj.info["regularizer_obj"], traj.feasible)
