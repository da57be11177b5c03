"""Online learners with a shared play/observe interface, and the run loop.

Every learner turns its update into an :class:`~regretlab.solver.InnerObjective`
and hands it to the solver, so exact and approximate modes share one code
path. The learners are

* :class:`FTL`    - minimize the summed losses so far,
* :class:`FTRL`   - the same plus ``R / eta``,
* :class:`RDA`    - summed linearized losses plus ``t r + beta_t h``,
* :class:`IOL`    - ``eta_t l_t + D_R(., w_t)`` with the full loss,
* :class:`COMiD`  - ``eta_t (g_t^T w + r) + D_R(., w_t)``,
* :class:`MD`     - ``eta_t g_t^T w + D_R(., w_t)`` with ``g_t`` from ``l_t + r``,
* :class:`BatchWrapper` - holds a point for ``B`` rounds and feeds block
  averages to an inner learner.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SolverError
from .geometry import (
    ENTROPY_FLOOR,
    HalfSquaredL2,
    Regularizer,
    dual_norm_grad_bound,
    make_regularizer,
)
from .losses import AveragedLoss, LossList, hindsight_optimum
from .metrics import Trajectory
from .solver import (
    CERTIFIED,
    DELTA_FLOOR,
    EXACT_DELTA,
    InnerObjective,
    SolveCertificate,
    solve,
    solve_lagged,
)

R_STAR_FLOOR = 1e-12


@dataclass(frozen=True)
class Schedule:
    """Step-size or weight schedule ``t -> value`` (``t`` is 1-based).

    kinds: ``constant`` (c), ``inverse_t`` (c / t), ``inverse_sqrt_t``
    (c / sqrt t), ``sqrt_t`` (c sqrt t) and ``zero``.
    """

    kind: str = "constant"
    c: float = 1.0

    KINDS = ("constant", "inverse_t", "inverse_sqrt_t", "sqrt_t", "zero")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"schedule.kind: unknown schedule {self.kind!r}")
        if self.kind != "zero" and not (self.c > 0 and math.isfinite(self.c)):
            raise ConfigError(f"schedule.c must be positive and finite, got {self.c!r}")

    def at(self, t: int) -> float:
        if self.kind == "constant":
            return self.c
        if self.kind == "inverse_t":
            return self.c / t
        if self.kind == "inverse_sqrt_t":
            return self.c / math.sqrt(t)
        if self.kind == "sqrt_t":
            return self.c * math.sqrt(t)
        return 0.0

    def values(self, T: int) -> np.ndarray:
        return np.array([self.at(t) for t in range(1, T + 1)], dtype=float)


@dataclass(frozen=True)
class DeltaSchedule:
    """Accuracy budget ``delta_t`` for approximate updates, floored at ``1e-12``.

    kinds: ``inverse_sqrt_t``, ``inverse_t``, ``inverse_t2``, ``constant``
    and ``inverse_horizon`` (c / T, the same at every step).
    """

    kind: str = "inverse_t"
    c: float = 1.0

    KINDS = ("inverse_sqrt_t", "inverse_t", "inverse_t2", "constant", "inverse_horizon")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"mode.delta.kind: unknown delta schedule {self.kind!r}")
        if not self.c > 0:
            raise ConfigError("mode.delta.c must be positive")

    def at(self, t: int, T: int) -> float:
        if self.kind == "inverse_sqrt_t":
            v = self.c / math.sqrt(t)
        elif self.kind == "inverse_t":
            v = self.c / t
        elif self.kind == "inverse_t2":
            v = self.c / (t * t)
        elif self.kind == "constant":
            v = self.c
        else:
            v = self.c / max(T, 1)
        return max(v, DELTA_FLOOR)

    def values(self, T: int) -> np.ndarray:
        return np.array([self.at(t, T) for t in range(1, T + 1)])


@dataclass(frozen=True)
class Mode:
    """Exact updates, or ``delta_t``-approximate ones.

    ``oracle="lagged"`` returns the point farthest back toward the previous
    iterate that still meets the budget (a warm-started solver stopped as soon
    as it may); ``oracle="solver"`` runs the iterative solver to the budget.
    """

    kind: str = "exact"
    delta: DeltaSchedule | None = None
    oracle: str = "lagged"

    def __post_init__(self):
        if self.kind not in ("exact", "approx"):
            raise ConfigError(f"mode.kind: unknown mode {self.kind!r}")
        if self.kind == "approx" and self.delta is None:
            raise ConfigError("mode.delta is required for approximate mode")
        if self.oracle not in ("lagged", "solver"):
            raise ConfigError(f"mode.oracle: unknown oracle {self.oracle!r}")

    @property
    def label(self) -> str:
        return "exact" if self.kind == "exact" else f"approx:{self.delta.kind}"


EXACT = Mode()


def approx(kind: str, c: float = 1.0, oracle: str = "lagged") -> Mode:
    return Mode("approx", DeltaSchedule(kind, c), oracle)


def _as_schedule(eta) -> Schedule | None:
    if eta is None or isinstance(eta, Schedule):
        return eta
    if isinstance(eta, (int, float)):
        return Schedule("constant", float(eta))
    if isinstance(eta, dict):
        return Schedule(eta.get("kind", "constant"), float(eta.get("c", 1.0)))
    raise ConfigError(f"cannot interpret step size {eta!r}")


# -- learners -----------------------------------------------------------------

class Learner(ABC):
    """Common state and solve dispatch.

    A learner is single-run: :meth:`start` resets it, then the caller
    alternates :meth:`play` and :meth:`observe`.
    """

    name = ""

    def __init__(self, regularizer: Regularizer | str | None = None):
        if isinstance(regularizer, str):
            regularizer = make_regularizer(regularizer)
        self.regularizer = regularizer or HalfSquaredL2()
        self.mode = EXACT
        self.info: dict = {}
        self._w = None
        self._t = 0
        self._dual = None

    # -- protocol ---------------------------------------------------------
    @property
    def norm(self) -> str:
        return self.regularizer.norm

    def start(self, seq, mode: Mode = EXACT, validate: bool = True) -> None:
        """Reset for a run over ``seq`` (its set, horizon and composite term)."""
        self.seq = seq
        self.feasible = seq.feasible
        self.composite = seq.composite
        self.T = len(seq)
        self.mode = mode
        self._t = 0
        self._dual = None
        self._opt = None
        self.etas: list = []
        self.betas: list = []
        self.regularizer.check_compatible(self.feasible)
        self.info = {"base": self.name, "regularizer": self.regularizer.name,
                     "regularizer_obj": self.regularizer, "mode": mode.label}
        self.configure(validate)
        self._w = self.feasible.check_point(self.first_point())

    def configure(self, validate: bool) -> None:
        """Resolve schedules and check the regime premises."""

    def first_point(self) -> np.ndarray:
        return self.regularizer.argmin(self.feasible)

    def play(self) -> np.ndarray:
        return self._w.copy()

    def observe(self, loss) -> SolveCertificate:
        """Take ``l_t`` and compute ``w_{t+1}``; returns the solve certificate."""
        self._t += 1
        w, cert = self._solve(self.objective(loss, self._t), self._t)
        self._w = w
        return cert

    @abstractmethod
    def objective(self, loss, t: int) -> InnerObjective:
        """Inner objective whose minimizer is ``w_{t+1}``."""

    # -- helpers ----------------------------------------------------------
    def _solve(self, obj: InnerObjective, t: int):
        if self.mode.kind == "exact":
            w, cert = solve(obj, EXACT_DELTA, warm_start=self._w, dual_start=self._dual)
        else:
            delta = self.mode.delta.at(t, self.T)
            if self.mode.oracle == "lagged":
                w, cert = solve_lagged(obj, delta, self._w, dual_start=self._dual)
            else:
                w, cert = solve(obj, delta, warm_start=self._w, method="iterative",
                                dual_start=self._dual)
        if cert.dual is not None:
            self._dual = cert.dual
        return self.feasible.project(w) if not self.feasible.contains(w) else w, cert

    def _hindsight(self):
        opt = getattr(self, "_opt", None)
        if opt is None:
            opt = hindsight_optimum(self.seq)
            self._opt = opt
        return opt

    def _alpha_total(self) -> float:
        return self.seq.strong_convexity() + self.composite.strong_convexity

    def _bregman_anchor(self):
        if self.regularizer.norm == "l1":
            return np.maximum(self._w, ENTROPY_FLOOR)
        return self._w

    def describe(self) -> str:
        return self.name


class FTL(Learner):
    """Follow the leader: ``w_{t+1} = argmin sum_{tau <= t} (l_tau + r)``."""

    name = "ftl"

    def __init__(self, regularizer=None):
        super().__init__(HalfSquaredL2() if regularizer is None else regularizer)
        if not isinstance(self.regularizer, HalfSquaredL2):
            raise ConfigError("FTL measures stability in l2 and takes no regularizer")

    def configure(self, validate):
        alpha = self._alpha_total()
        if not alpha > 0:
            raise ConfigError(
                "FTL requires strongly convex losses (alpha > 0); without curvature its "
                "regret need not be bounded. Add an l2 composite or use the quadratic suite")
        self.info.update(alpha=alpha, regime="strong")
        self._obj = InnerObjective.zero(self.feasible)

    def first_point(self):
        return self.feasible.project(np.zeros(self.feasible.dim))

    def objective(self, loss, t):
        self._obj = self._obj.plus_loss(loss).plus_composite(self.composite)
        return self._obj


class FTRL(Learner):
    """``w_{t+1} = argmin sum_{tau <= t} (l_tau + r) + R / eta``; default ``eta = 1/sqrt(T)``."""

    name = "ftrl"

    def __init__(self, regularizer=None, eta=None):
        super().__init__(regularizer)
        self.eta_spec = _as_schedule(eta)

    def configure(self, validate):
        T = max(self.T, 1)
        sched = self.eta_spec or Schedule("constant", 1.0 / math.sqrt(T))
        if validate and sched.kind != "constant":
            raise ConfigError("FTRL's regret bound assumes a constant step size eta")
        self.schedule = sched
        eta = sched.at(1)
        self.info.update(eta=eta, regime="general",
                         G=dual_norm_grad_bound(self.regularizer, self.feasible))
        self._obj = InnerObjective.zero(self.feasible).plus_regularizer(self.regularizer, 1.0 / eta)

    def objective(self, loss, t):
        self.etas.append(self.info["eta"])
        self._obj = self._obj.plus_loss(loss).plus_composite(self.composite)
        return self._obj


class RDA(Learner):
    """Dual averaging: ``argmin sum g_tau^T w + t r(w) + beta_t h(w)``.

    ``beta="zero"`` needs a strongly convex composite ``r`` (the l2 kind);
    ``beta="sqrt_t"`` needs ``0 <= h <= D^2`` on the set.
    """

    name = "rda"

    def __init__(self, regularizer=None, beta="sqrt_t"):
        super().__init__(regularizer)
        if isinstance(beta, str):
            beta = Schedule(beta, 1.0) if beta != "zero" else Schedule("zero", 0.0)
        self.beta = beta

    def configure(self, validate):
        D = self.feasible.diameter_in(self.norm)
        if self.beta.kind == "zero":
            if self.composite.kind != "l2":
                raise ConfigError(
                    "RDA with beta = 0 requires a strongly convex composite r (kind 'l2')")
            self.info.update(regime="strong", alpha=self.composite.strong_convexity)
        else:
            if validate and not (self.beta.kind == "sqrt_t" and self.beta.c == 1.0):
                raise ConfigError("RDA's sqrt(T) regret bound assumes beta_t = sqrt(t)")
            h_max = self._h_max()
            if validate and h_max > D * D + 1e-12:
                raise ConfigError(
                    f"RDA with beta_t = sqrt(t) requires 0 <= h <= D^2 on the set; "
                    f"max h = {h_max:.6g} exceeds D^2 = {D * D:.6g}")
            self.info.update(regime="sqrt", alpha=None)
        self.info["D"] = D
        self._gsum = np.zeros(self.feasible.dim)

    def _h_max(self) -> float:
        reg, fs = self.regularizer, self.feasible
        if isinstance(reg, HalfSquaredL2):
            return 0.5 * fs.max_distance(np.zeros(fs.dim), "l2") ** 2
        return math.log(fs.dim)  # entropy on the simplex peaks at a vertex

    def objective(self, loss, t):
        self._gsum = self._gsum + loss.subgradient(self._w)
        beta = self.beta.at(t)
        self.betas.append(beta)
        obj = InnerObjective.zero(self.feasible).plus_linear(self._gsum)
        obj = obj.plus_composite(self.composite, float(t))
        if beta > 0:
            obj = obj.plus_regularizer(self.regularizer, beta)
        return obj


class _ProximalLearner(Learner):
    """Shared step-size handling for the Bregman-proximal learners."""

    regimes = ("general", "strong")
    lipschitz_of = "total"  # or "loss": constant of l_t alone

    def __init__(self, regularizer=None, eta=None, regime="general"):
        super().__init__(regularizer)
        if regime not in self.regimes:
            raise ConfigError(f"{self.name}: unsupported regime {regime!r}")
        self.regime = regime
        self.eta_spec = _as_schedule(eta)

    def _lipschitz(self) -> float:
        if self.lipschitz_of == "loss":
            return self.seq.lipschitz(self.norm)
        return self.seq.total_lipschitz(self.norm)

    def _strong_alpha(self) -> float:
        return self._alpha_total()

    def tuned_eta(self) -> float:
        raise NotImplementedError

    def configure(self, validate):
        self.info["regime"] = self.regime
        if self.regime == "strong":
            if validate and not isinstance(self.regularizer, HalfSquaredL2):
                raise ConfigError(
                    f"{self.name}: the strongly convex regime is implemented for the "
                    "Euclidean regularizer only")
            alpha = self._strong_alpha()
            if not alpha > 0:
                raise ConfigError(
                    f"{self.name}: the strongly convex regime needs losses strongly convex "
                    "with respect to D_R (alpha > 0)")
            self.info["alpha"] = alpha
            expect = Schedule("inverse_t", 1.0 / alpha)
            sched = self.eta_spec or expect
            if validate and sched != expect:
                raise ConfigError(
                    f"{self.name}: the strongly convex regime requires eta_t = 1/(alpha t) "
                    f"with alpha = {alpha:.6g}")
        else:
            sched = self.eta_spec
            if sched is None:
                sched = Schedule("constant", self.tuned_eta())
            elif validate and sched.kind != "constant":
                raise ConfigError(
                    f"{self.name}: the general convex regime assumes a constant step size eta")
        self.schedule = sched
        if "R_star" not in self.info:
            self._r_star()

    def _r_star(self) -> float:
        r = self.regularizer.value(self._hindsight().point)
        self.info["R_star"] = r
        self.info["R_star_used"] = max(r, R_STAR_FLOOR)
        return self.info["R_star_used"]


class IOL(_ProximalLearner):
    """Implicit online learning: ``argmin eta_t (l_t + r) + D_R(., w_t)``."""

    name = "iol"

    def tuned_eta(self):
        L = self._lipschitz()
        T = max(self.T, 1)
        if self.mode.kind == "approx":
            return self._approx_eta(L, T)
        r = self._r_star()
        return math.sqrt(r) / (max(L, 1e-300) * math.sqrt(2.0 * T))

    def _approx_eta(self, L, T):
        # balances A / eta against L^2 eta T, where A collects the diameter and
        # accuracy terms of the forward-regret bound for inexact updates
        D = self.feasible.diameter_in(self.norm)
        deltas = self.mode.delta.values(T)
        A = 0.5 * D * D + float(np.sum(deltas)) + D * float(np.sum(np.sqrt(2.0 * deltas)))
        self._r_star()
        return math.sqrt(A / (max(L, 1e-300) ** 2 * T))

    def objective(self, loss, t):
        eta = self.schedule.at(t)
        self.etas.append(eta)
        obj = InnerObjective.zero(self.feasible).plus_bregman(self.regularizer, self._bregman_anchor())
        return obj.plus_loss(loss, eta).plus_composite(self.composite, eta)


class COMiD(_ProximalLearner):
    """Composite mirror descent: ``argmin eta_t (g_t^T w + r) + D_R(., w_t)``.

    The starting point minimizes ``r`` over the set, with ties broken toward
    the minimizer of ``R``.
    """

    name = "comid"
    lipschitz_of = "loss"

    def _strong_alpha(self):
        return self.seq.strong_convexity()

    def tuned_eta(self):
        L = self._lipschitz()
        T = max(self.T, 1)
        return math.sqrt(2.0 * self._r_star()) / (max(L, 1e-300) * math.sqrt(T))

    def objective(self, loss, t):
        eta = self.schedule.at(t)
        self.etas.append(eta)
        g = loss.subgradient(self._w)
        obj = InnerObjective.zero(self.feasible).plus_bregman(self.regularizer, self._bregman_anchor())
        return obj.plus_linear(g, eta).plus_composite(self.composite, eta)


class MD(_ProximalLearner):
    """Mirror descent: ``argmin eta_t g_t^T w + D_R(., w_t)`` with ``g_t`` from ``l_t + r``."""

    name = "md"
    regimes = ("general",)

    def tuned_eta(self):
        L = self._lipschitz()
        T = max(self.T, 1)
        return math.sqrt(2.0 * self._r_star()) / (max(L, 1e-300) * math.sqrt(T))

    def first_point(self):
        return self.feasible.project(np.zeros(self.feasible.dim))

    def objective(self, loss, t):
        eta = self.schedule.at(t)
        self.etas.append(eta)
        g = loss.subgradient(self._w) + self.composite.subgradient(self._w)
        obj = InnerObjective.zero(self.feasible).plus_bregman(self.regularizer, self._bregman_anchor())
        return obj.plus_linear(g, eta)


class BatchWrapper(Learner):
    """Hold each point for ``B`` rounds; feed block averages to ``inner``.

    The inner learner sees ``g_i = (1/B) sum`` of the block's losses (the last
    block averages over its actual length) and its own horizon ``ceil(T/B)``.
    ``B=None`` picks ``ceil(sqrt(T))``.
    """

    def __init__(self, inner: Learner, B: int | None = None):
        if B is not None and (int(B) != B or B < 1):
            raise ConfigError("batch.B must be a positive integer")
        self.inner = inner
        self.B_spec = None if B is None else int(B)
        super().__init__(inner.regularizer)
        self.name = f"batch({inner.name})"

    @property
    def norm(self):
        return self.inner.norm

    def start(self, seq, mode=EXACT, validate=True):
        self.seq = seq
        self.feasible = seq.feasible
        self.composite = seq.composite
        self.T = len(seq)
        self.mode = mode
        T = self.T
        self.B = self.B_spec or max(1, math.ceil(math.sqrt(T)))
        B = self.B
        blocks = [seq.losses[i:i + B] for i in range(0, T, B)]
        self.inner_seq = LossList(tuple(AveragedLoss(b) for b in blocks), seq.feasible, seq.composite)
        self.inner.start(self.inner_seq, mode, validate)
        self._inner_points = [self.inner.play()]
        self._inner_certs = []
        self._w = self._inner_points[0]
        self._t = 0
        self.etas, self.betas = [], []
        self.info = dict(self.inner.info, wrapped=True, B=B, base=self.inner.name)

    def observe(self, loss):
        self._t += 1
        if self._t % self.B == 0 or self._t == self.T:
            cert = self.inner.observe(self.inner_seq.losses[len(self._inner_certs)])
            self._inner_certs.append(cert)
            self._w = self.inner.play()
            self._inner_points.append(self._w.copy())
            return cert
        return SolveCertificate(0.0, 0, CERTIFIED, 1.0, self.norm)

    def objective(self, loss, t):  # pragma: no cover - observe is overridden
        raise NotImplementedError

    def inner_trajectory(self) -> Trajectory:
        certs = self._inner_certs
        return Trajectory(
            points=np.array(self._inner_points), sequence=self.inner_seq, learner=self.inner.name,
            norm=self.inner.norm, deltas=np.array([c.delta for c in certs]),
            mus=np.array([c.mu for c in certs]), statuses=tuple(c.status for c in certs),
            etas=np.array(self.inner.etas) if self.inner.etas else None,
            betas=np.array(self.inner.betas) if self.inner.betas else None,
            info=dict(self.inner.info),
        )


LEARNERS = {"ftl": FTL, "ftrl": FTRL, "rda": RDA, "iol": IOL, "comid": COMiD, "md": MD}


def make_learner(kind: str, regularizer="l2", eta=None, beta="sqrt_t", regime="general",
                 B=None, batch: bool = False) -> Learner:
    """Build a learner from plain configuration values."""
    if kind not in LEARNERS:
        raise ConfigError(f"learner.kind: unknown learner {kind!r}")
    if kind == "ftl":
        inner = FTL()
    elif kind == "ftrl":
        inner = FTRL(regularizer, eta)
    elif kind == "rda":
        inner = RDA(regularizer, beta)
    else:
        inner = LEARNERS[kind](regularizer, eta, regime)
    return BatchWrapper(inner, B) if batch else inner


def validate_regime(learner: Learner, seq, mode: Mode = EXACT) -> None:
    """Raise :class:`ConfigError` if ``learner`` violates its bound premises on ``seq``."""
    learner.start(seq, mode, validate=True)


def run(learner: Learner, seq, mode: Mode = EXACT, validate: bool = True,
        strict: bool = False) -> Trajectory:
    """Play ``learner`` against ``seq`` and record the trajectory.

    Raises
    ------
    ConfigError
        When ``validate`` is set and the configuration violates a premise of
        the learner's bounds.
    SolverError
        In ``strict`` mode, when an update misses its accuracy target; the
        exception carries the 1-based round index.
    """
    learner.start(seq, mode, validate)
    T = len(seq)
    d = seq.feasible.dim
    points = np.empty((T + 1, d))
    points[0] = learner.play()
    deltas, mus, statuses = np.zeros(T), np.ones(T), []
    for t, loss in enumerate(seq.losses, start=1):
        cert = learner.observe(loss)
        if strict and not cert.certified:
            raise SolverError(
                f"update at round {t} stopped at delta={cert.delta:.3g} above its target",
                certificate=cert, step=t)
        points[t] = learner.play()
        deltas[t - 1], mus[t - 1] = cert.delta, cert.mu
        statuses.append(cert.status)
    traj = Trajectory(
        points=points, sequence=seq, learner=learner.name, norm=learner.norm,
        deltas=deltas, mus=mus, statuses=tuple(statuses),
        etas=np.array(learner.etas) if learner.etas else (np.zeros(0) if T == 0 else None),
        betas=np.array(learner.betas) if learner.betas else None,
        info=dict(learner.info),
    )
    opt = getattr(learner, "_opt", None)
    if opt is not None:
        traj.set_optimum(opt)
    if isinstance(learner, BatchWrapper):
        traj.inner = learner.inner_trajectory()
        iopt = getattr(learner.inner, "_opt", None)
        if iopt is not None:
            traj.inner.set_optimum(iopt)
    return traj
