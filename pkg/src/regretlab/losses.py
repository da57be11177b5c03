"""Adversary moves: loss families, shared composite terms and seeded sequences.

Each loss reports a Lipschitz constant that is exact over a given feasible set
in the dual of the norm paired with the learner's regularizer, together with
its strong-convexity modulus.
"""
from __future__ import annotations

import zlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, DiagnosticError
from .geometry import (
    EuclideanBall,
    FeasibleSet,
    Simplex,
    as_point,
    dual_norm_kind,
    norm,
)


class Loss(ABC):
    """One adversary move ``l_t``."""

    dim: int

    @abstractmethod
    def value(self, w) -> float: ...

    @abstractmethod
    def subgradient(self, w) -> np.ndarray: ...

    @abstractmethod
    def lipschitz(self, feasible: FeasibleSet, kind: str = "l2") -> float:
        """Exact Lipschitz constant over ``feasible`` with respect to norm ``kind``."""

    @property
    def strong_convexity(self) -> float:
        """Modulus with respect to l2 (and, for quadratics, to ``D_R`` with ``R = 0.5||.||^2``)."""
        return 0.0

    def terms(self):
        """Flat ``(weight, primitive_loss)`` decomposition used by the solver."""
        return ((1.0, self),)


class LinearLoss(Loss):
    """``l(w) = g^T w``."""

    def __init__(self, g):
        self.g = as_point(g)
        self.g.setflags(write=False)
        self.dim = self.g.size

    def __repr__(self):
        return f"LinearLoss(g={self.g.tolist()})"

    def value(self, w):
        return float(np.dot(self.g, w))

    def subgradient(self, w):
        return self.g.copy()

    def lipschitz(self, feasible, kind="l2"):
        return norm(self.g, dual_norm_kind(kind))


class QuadraticLoss(Loss):
    """``l(w) = (alpha / 2) ||w - center||^2``."""

    def __init__(self, center, alpha: float):
        if not alpha > 0:
            raise ConfigError(f"quadratic curvature must be positive, got {alpha}")
        self.center = as_point(center)
        self.center.setflags(write=False)
        self.alpha = float(alpha)
        self.dim = self.center.size

    def __repr__(self):
        return f"QuadraticLoss(center={self.center.tolist()}, alpha={self.alpha})"

    def value(self, w):
        r = np.asarray(w, dtype=float) - self.center
        return 0.5 * self.alpha * float(np.dot(r, r))

    def subgradient(self, w):
        return self.alpha * (np.asarray(w, dtype=float) - self.center)

    def lipschitz(self, feasible, kind="l2"):
        # sup ||alpha (w - c)||_* over C
        return self.alpha * feasible.max_distance(self.center, dual_norm_kind(kind))

    @property
    def strong_convexity(self):
        return self.alpha


class HingeLoss(Loss):
    """``l(w) = max(0, threshold - g^T w)``.

    At the kink the right-limit subgradient ``-g`` is returned.
    """

    def __init__(self, g, threshold: float):
        self.g = as_point(g)
        self.g.setflags(write=False)
        self.threshold = float(threshold)
        self.dim = self.g.size

    def __repr__(self):
        return f"HingeLoss(g={self.g.tolist()}, threshold={self.threshold})"

    def value(self, w):
        return max(0.0, self.threshold - float(np.dot(self.g, w)))

    def subgradient(self, w):
        if self.threshold - float(np.dot(self.g, w)) >= 0:
            return -self.g
        return np.zeros(self.dim)

    def lipschitz(self, feasible, kind="l2"):
        return norm(self.g, dual_norm_kind(kind))


class AveragedLoss(Loss):
    """Weighted combination ``sum_i weight_i * l_i`` of primitive losses."""

    def __init__(self, losses, weights=None):
        losses = tuple(losses)
        if not losses:
            raise ConfigError("cannot average an empty list of losses")
        if weights is None:
            weights = np.full(len(losses), 1.0 / len(losses))
        self.losses = losses
        self.weights = np.asarray(weights, dtype=float)
        self.dim = losses[0].dim

    def __repr__(self):
        return f"AveragedLoss(n={len(self.losses)})"

    def value(self, w):
        return float(sum(a * l.value(w) for a, l in zip(self.weights, self.losses)))

    def subgradient(self, w):
        return sum(a * l.subgradient(w) for a, l in zip(self.weights, self.losses))

    def lipschitz(self, feasible, kind="l2"):
        return float(sum(a * l.lipschitz(feasible, kind) for a, l in zip(self.weights, self.losses)))

    @property
    def strong_convexity(self):
        return float(sum(a * l.strong_convexity for a, l in zip(self.weights, self.losses)))

    def terms(self):
        out = []
        for a, l in zip(self.weights, self.losses):
            out.extend((a * b, p) for b, p in l.terms())
        return tuple(out)


@dataclass(frozen=True)
class CompositePart:
    """Shared regularization term ``r`` added to every loss.

    ``kind`` is ``"none"``, ``"l1"`` (``weight * ||w||_1``) or ``"l2"``
    (``weight / 2 * ||w||^2``).
    """

    kind: str = "none"
    weight: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "l1", "l2"):
            raise ConfigError(f"composite.kind: unknown composite {self.kind!r}")
        if self.kind != "none" and not self.weight > 0:
            raise ConfigError("composite.weight must be positive")

    @property
    def active(self) -> bool:
        return self.kind != "none"

    def value(self, w) -> float:
        w = np.asarray(w, dtype=float)
        if self.kind == "l1":
            return self.weight * float(np.sum(np.abs(w)))
        if self.kind == "l2":
            return 0.5 * self.weight * float(np.dot(w, w))
        return 0.0

    def subgradient(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.kind == "l1":
            return self.weight * np.sign(w)
        if self.kind == "l2":
            return self.weight * w
        return np.zeros_like(w)

    def min_over(self, feasible: FeasibleSet) -> float:
        """Closed-form ``min_{w in C} r(w)``."""
        if self.kind == "l1":
            return self.weight * feasible.min_l1()
        if self.kind == "l2":
            p = feasible.project(np.zeros(feasible.dim))
            return 0.5 * self.weight * float(np.dot(p, p))
        return 0.0

    def normalized_value(self, w, feasible: FeasibleSet) -> float:
        """``r(w) - min_C r``, which is zero at the constrained minimizer."""
        return self.value(w) - self.min_over(feasible)

    def lipschitz(self, feasible: FeasibleSet, kind: str = "l2") -> float:
        dual = dual_norm_kind(kind)
        if self.kind == "l1":
            if isinstance(feasible, Simplex):
                return 0.0  # constant on the simplex
            return self.weight * norm(np.ones(feasible.dim), dual)
        if self.kind == "l2":
            return self.weight * feasible.max_distance(np.zeros(feasible.dim), dual)
        return 0.0

    @property
    def strong_convexity(self) -> float:
        return self.weight if self.kind == "l2" else 0.0


NO_COMPOSITE = CompositePart()

SUITES = ("linear", "quadratic", "hinge")


def _kind_code(kind: str, dim: int) -> int:
    return zlib.crc32(f"{kind}/{dim}".encode())


def step_rng(seed: int, kind: str, dim: int, t: int) -> np.random.Generator:
    """Counter-based generator for round ``t`` (``t = 0`` holds sequence-level draws)."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, _kind_code(kind, dim)], dtype=np.uint64)
    counter = np.array([0, int(t), 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True, eq=False)
class AdversarySequence:
    """Oblivious, seeded sequence of ``horizon`` losses on ``feasible``.

    Round ``t`` draws only from the generator keyed by ``(seed, t)``, so any
    prefix is reproducible without materializing the rest.

    Parameters
    ----------
    kind : {"linear", "quadratic", "hinge"}
    horizon : int
    feasible : FeasibleSet
    seed : int
    alpha : float
        Curvature of the quadratic suite.
    scale : float
        Magnitude of linear and hinge gradients.
    composite : CompositePart
        Shared term ``r`` added to every loss.
    """

    kind: str
    horizon: int
    feasible: FeasibleSet
    seed: int = 0
    alpha: float = 1.0
    scale: float = 1.0
    composite: CompositePart = NO_COMPOSITE

    def __post_init__(self):
        if self.kind not in SUITES:
            raise ConfigError(f"adversary.suite: unknown suite {self.kind!r}")
        if self.horizon < 0:
            raise ConfigError("adversary.T must be nonnegative")

    @property
    def dim(self) -> int:
        return self.feasible.dim

    @cached_property
    def drift(self) -> np.ndarray:
        """Sequence-level direction that biases linear and hinge gradients."""
        v = step_rng(self.seed, self.kind, self.dim, 0).standard_normal(self.dim)
        return v / norm(v)

    def loss_at(self, t: int) -> Loss:
        """Loss for round ``t`` (1-based)."""
        rng = step_rng(self.seed, self.kind, self.dim, t)
        d = self.dim
        if self.kind == "quadratic":
            return QuadraticLoss(self.feasible.sample(rng, 1)[0], self.alpha)
        noise = rng.standard_normal(d)
        noise /= max(norm(noise), 1e-300)
        g = self.scale * (0.6 * self.drift + 0.4 * rng.random() * noise)
        if self.kind == "linear":
            return LinearLoss(g)
        # thresholds chosen so the kink crosses the set
        support = self.feasible.max_distance(np.zeros(d), "l2") * norm(g)
        return HingeLoss(g, (rng.random() - 0.5) * support)

    @cached_property
    def losses(self) -> tuple:
        return tuple(self.loss_at(t) for t in range(1, self.horizon + 1))

    def __len__(self):
        return self.horizon

    def __iter__(self):
        return iter(self.losses)

    def lipschitz(self, kind: str = "l2") -> float:
        """Exact max over rounds of the per-loss constants (composite excluded)."""
        return max((l.lipschitz(self.feasible, kind) for l in self.losses), default=0.0)

    def total_lipschitz(self, kind: str = "l2") -> float:
        return self.lipschitz(kind) + self.composite.lipschitz(self.feasible, kind)

    def strong_convexity(self) -> float:
        """Exact min over rounds of the l2 modulus of ``l_t`` (composite excluded)."""
        return min((l.strong_convexity for l in self.losses), default=0.0)

    def total_value(self, t: int, w) -> float:
        """``l_t(w) + r(w)`` for 1-based ``t``."""
        return self.losses[t - 1].value(w) + self.composite.value(w)


@dataclass(frozen=True, eq=False)
class LossList:
    """A plain list of losses sharing a composite term (e.g. block averages)."""

    losses: tuple
    feasible: FeasibleSet
    composite: CompositePart = NO_COMPOSITE

    @property
    def horizon(self) -> int:
        return len(self.losses)

    @property
    def dim(self) -> int:
        return self.feasible.dim

    def __len__(self):
        return len(self.losses)

    def __iter__(self):
        return iter(self.losses)

    def lipschitz(self, kind="l2"):
        return max((l.lipschitz(self.feasible, kind) for l in self.losses), default=0.0)

    def total_lipschitz(self, kind="l2"):
        return self.lipschitz(kind) + self.composite.lipschitz(self.feasible, kind)

    def strong_convexity(self):
        return min((l.strong_convexity for l in self.losses), default=0.0)

    def total_value(self, t, w):
        return self.losses[t - 1].value(w) + self.composite.value(w)


@dataclass(frozen=True)
class HindsightOptimum:
    """Best fixed point ``w*`` with its total loss and suboptimality bound ``eps``."""

    point: np.ndarray
    value: float
    eps: float = 0.0
    method: str = "closed_form"


def total_objective(losses, composite: CompositePart, feasible: FeasibleSet):
    """The summed objective ``sum_t (l_t + r)`` as a solver objective."""
    from .solver import InnerObjective

    obj = InnerObjective.zero(feasible)
    for l in losses:
        obj = obj.plus_loss(l)
    return obj.plus_composite(composite, float(len(losses)))


def hindsight_optimum(seq, feasible: FeasibleSet | None = None, tol: float = 1e-8) -> HindsightOptimum:
    """Minimizer over the set of ``sum_t (l_t + r)``.

    Closed forms cover quadratic sums (projected weighted mean of centers, with
    the composite folded in) and linear sums (radial, vertex or coordinatewise
    points). Sums containing hinge losses go through a linear program on boxes
    and simplices, or through the certified solver when the sum is strongly
    convex; ``eps`` records the certified suboptimality.

    Raises
    ------
    DiagnosticError
        If the certified suboptimality exceeds ``tol``.
    """
    from . import solver

    feasible = feasible or seq.feasible
    losses = tuple(seq.losses)
    composite = seq.composite
    if not losses:
        w = feasible.project(np.zeros(feasible.dim))
        return HindsightOptimum(w, 0.0)
    obj = total_objective(losses, composite, feasible)

    def total(w):
        return float(sum(l.value(w) for l in losses)) + len(losses) * composite.value(w)

    if obj.n_hinges == 0 and obj.quad_weight == 0:
        w = feasible.argmin_linear_l1(obj.linear, obj.l1)
        return HindsightOptimum(w, total(w), 0.0, "closed_form")
    if obj.quad_weight > 0:
        w, cert = solver.solve(obj, target_delta=min(tol, 1e-10))
        if cert.delta > tol:
            raise DiagnosticError(f"hindsight solve reached only eps={cert.delta:.3g}")
        method = "closed_form" if obj.n_hinges == 0 else "dual"
        return HindsightOptimum(w, total(w), cert.delta, method)
    if isinstance(feasible, EuclideanBall):
        w, eps = solver.solve_ball_hinge(obj)
        if eps > tol:
            raise DiagnosticError(f"hindsight dual solve on the ball reached only eps={eps:.3g}")
        return HindsightOptimum(w, total(w), eps, "dual")
    w, eps = solver.solve_lp_hinge(obj)
    if eps > tol:
        raise DiagnosticError(f"hindsight linear program reached only eps={eps:.3g}")
    return HindsightOptimum(w, total(w), eps, "linear_program")
