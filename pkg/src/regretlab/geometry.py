"""Feasible sets, norms, regularizers and Bregman divergences.

Every object here is immutable after construction and every operation is a
pure function, so instances can be shared freely between runs and threads.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from .errors import ConfigError, DomainError

#: absolute tolerance used when asserting nonnegativity of divergences
NONNEG_TOL = 1e-10
#: entropic iterates are floored here before the gradient is evaluated
ENTROPY_FLOOR = 1e-12

_DUAL = {"l2": "l2", "l1": "linf", "linf": "l1"}


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Convert ``x`` to a finite 1-d float array, optionally checking its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ConfigError(f"expected a 1-d point, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ConfigError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("point has non-finite coordinates")
    return arr


def norm(x, kind: str = "l2") -> float:
    """Vector norm by name: ``"l2"``, ``"l1"`` or ``"linf"``."""
    x = np.asarray(x, dtype=float)
    if kind == "l2":
        return float(np.sqrt(np.dot(x, x)))
    if kind == "l1":
        return float(np.sum(np.abs(x)))
    if kind == "linf":
        return float(np.max(np.abs(x))) if x.size else 0.0
    raise ConfigError(f"unknown norm {kind!r}")


def dual_norm_kind(kind: str) -> str:
    """Name of the dual norm (l2 <-> l2, l1 <-> linf)."""
    try:
        return _DUAL[kind]
    except KeyError:
        raise ConfigError(f"unknown norm {kind!r}") from None


def soft_threshold(x, lam):
    """Coordinatewise shrinkage ``sign(x) * max(|x| - lam, 0)``."""
    x = np.asarray(x, dtype=float)
    if lam == 0:
        return x.copy()
    return np.maximum(x - lam, 0.0) + np.minimum(x + lam, 0.0)


def project_simplex(x) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based, exact)."""
    x = np.asarray(x, dtype=float)
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, x.size + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(x - theta, 0.0)


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


class FeasibleSet(ABC):
    """Compact convex set with exact Euclidean projection."""

    dim: int

    @property
    @abstractmethod
    def diameter(self) -> float:
        """Exact l2 diameter."""

    @abstractmethod
    def project(self, x) -> np.ndarray:
        """Exact Euclidean projection of ``x``."""

    @abstractmethod
    def contains(self, x, tol: float = 1e-9) -> bool:
        """Membership test with absolute tolerance ``tol``."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` points of the set, shape ``(n, dim)``."""

    @abstractmethod
    def max_distance(self, p, kind: str = "l2") -> float:
        """``sup_{w in C} ||w - p||`` in the given norm."""

    @abstractmethod
    def prox_l1(self, x, lam: float) -> np.ndarray:
        """Exact minimizer of ``0.5||w - x||^2 + lam ||w||_1`` over the set."""

    def _prox_l1(self, x, lam: float) -> np.ndarray:
        # unchecked variant for solver inner loops
        return self.prox_l1(x, lam)

    @abstractmethod
    def min_l1(self) -> float:
        """``min_{w in C} ||w||_1``."""

    @abstractmethod
    def argmin_linear_l1(self, c, lam: float = 0.0) -> np.ndarray:
        """A minimizer of ``c^T w + lam ||w||_1`` over the set."""

    def diameter_in(self, kind: str = "l2") -> float:
        """Diameter measured in ``kind``; the l2 value is :attr:`diameter`."""
        if kind == "l2":
            return self.diameter
        raise ConfigError(f"{type(self).__name__} has no certified {kind} diameter")

    def check_point(self, x) -> np.ndarray:
        return as_point(x, self.dim)


class EuclideanBall(FeasibleSet):
    """Closed ball ``{w : ||w - center|| <= radius}``."""

    def __init__(self, center, radius: float):
        center = as_point(center)
        if not radius > 0:
            raise ConfigError(f"ball radius must be positive, got {radius}")
        self.center = _frozen(center)
        self.radius = float(radius)
        self.dim = center.size

    @classmethod
    def centered(cls, dim: int, radius: float = 1.0) -> "EuclideanBall":
        return cls(np.zeros(dim), radius)

    def __repr__(self):
        return f"EuclideanBall(center={self.center.tolist()}, radius={self.radius})"

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def is_centered(self) -> bool:
        return not np.any(self.center)

    def project(self, x) -> np.ndarray:
        x = self.check_point(x)
        v = x - self.center
        n = norm(v)
        if n <= self.radius:
            return x.copy()
        return self.center + v * (self.radius / n)

    def contains(self, x, tol: float = 1e-9) -> bool:
        return norm(np.asarray(x) - self.center) <= self.radius + tol

    def sample(self, rng, n):
        z = rng.standard_normal((n, self.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = self.radius * rng.random(n) ** (1.0 / self.dim)
        return self.center + z * r[:, None]

    def max_distance(self, p, kind="l2"):
        if kind != "l2":
            raise ConfigError("ball distances are only certified in l2")
        return norm(np.asarray(p) - self.center) + self.radius

    def prox_l1(self, x, lam):
        return self._prox_l1(self.check_point(x), lam)

    def _prox_l1(self, x, lam):
        if lam != 0:
            if not self.is_centered:
                raise ConfigError("l1 terms on a ball require the ball to be centered at the origin")
            # radial scaling of the soft-threshold satisfies the joint KKT system
            x = soft_threshold(x, lam)
        v = x - self.center
        n = math.sqrt(float(v @ v))
        if n <= self.radius:
            return x.copy()
        return self.center + v * (self.radius / n)

    def min_l1(self):
        if norm(self.center) <= self.radius:
            return 0.0
        raise ConfigError("l1 terms on a ball require the ball to contain the origin")

    def argmin_linear_l1(self, c, lam=0.0):
        c = self.check_point(c)
        if lam > 0 and not self.is_centered:
            raise ConfigError("l1 terms on a ball require the ball to be centered at the origin")
        v = soft_threshold(c, lam) if lam > 0 else c
        n = norm(v)
        if n == 0:
            return self.center.copy()
        return self.center - v * (self.radius / n)


class Box(FeasibleSet):
    """Axis-aligned box ``{w : lower <= w <= upper}``."""

    def __init__(self, lower, upper):
        lower, upper = as_point(lower), as_point(upper)
        if lower.size != upper.size:
            raise ConfigError("box bounds have different lengths")
        if np.any(lower > upper):
            raise ConfigError("box lower bound exceeds upper bound")
        if not np.any(upper > lower):
            raise ConfigError("box is a single point")
        self.lower = _frozen(lower)
        self.upper = _frozen(upper)
        self.dim = lower.size

    @classmethod
    def cube(cls, dim: int, low: float = -1.0, high: float = 1.0) -> "Box":
        return cls(np.full(dim, low), np.full(dim, high))

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"

    @property
    def diameter(self) -> float:
        return norm(self.upper - self.lower)

    def diameter_in(self, kind="l2"):
        return norm(self.upper - self.lower, kind)

    def project(self, x):
        return np.clip(self.check_point(x), self.lower, self.upper)

    def contains(self, x, tol=1e-9):
        x = np.asarray(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def sample(self, rng, n):
        return self.lower + (self.upper - self.lower) * rng.random((n, self.dim))

    def max_distance(self, p, kind="l2"):
        p = np.asarray(p, dtype=float)
        far = np.maximum(np.abs(p - self.lower), np.abs(p - self.upper))
        return norm(far, kind)

    def prox_l1(self, x, lam):
        return self._prox_l1(self.check_point(x), lam)

    def _prox_l1(self, x, lam):
        # separable: shrink then clip is exact coordinate by coordinate
        return np.minimum(np.maximum(soft_threshold(x, lam), self.lower), self.upper)

    def min_l1(self):
        return float(np.sum(np.abs(np.clip(0.0, self.lower, self.upper))))

    def argmin_linear_l1(self, c, lam=0.0):
        c = self.check_point(c)
        zero = np.clip(0.0, self.lower, self.upper)
        cands = np.stack([zero, self.lower, self.upper])
        vals = cands * c + lam * np.abs(cands)
        return cands[np.argmin(vals, axis=0), np.arange(self.dim)]


class Simplex(FeasibleSet):
    """Probability simplex ``{w >= 0 : sum(w) = 1}`` in ``dim`` coordinates."""

    def __init__(self, dim: int):
        if int(dim) < 2:
            raise ConfigError("simplex needs at least two coordinates")
        self.dim = int(dim)

    def __repr__(self):
        return f"Simplex({self.dim})"

    @property
    def diameter(self) -> float:
        return math.sqrt(2.0)

    def diameter_in(self, kind="l2"):
        return {"l2": math.sqrt(2.0), "l1": 2.0, "linf": 1.0}[kind]

    def project(self, x):
        return project_simplex(self.check_point(x))

    def contains(self, x, tol=1e-9):
        x = np.asarray(x)
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)

    def sample(self, rng, n):
        return rng.dirichlet(np.ones(self.dim), size=n)

    def max_distance(self, p, kind="l2"):
        # a convex function attains its max over the simplex at a vertex
        p = np.asarray(p, dtype=float)
        return max(norm(np.eye(self.dim)[i] - p, kind) for i in range(self.dim))

    def prox_l1(self, x, lam):
        # ||w||_1 is constant on the simplex
        return self.project(x)

    def _prox_l1(self, x, lam):
        return project_simplex(x)

    def min_l1(self):
        return 1.0

    def argmin_linear_l1(self, c, lam=0.0):
        c = self.check_point(c)
        w = np.zeros(self.dim)
        w[int(np.argmin(c))] = 1.0
        return w


class Regularizer(ABC):
    """Strongly convex generator of a Bregman divergence.

    Attributes
    ----------
    norm : str
        Norm in which :attr:`modulus` is stated (``"l2"`` or ``"l1"``).
    modulus : float
        Strong-convexity modulus with respect to :attr:`norm`.
    nonneg : bool
        Whether ``R >= 0`` holds on every compatible set.
    """

    norm = "l2"
    modulus = 1.0
    nonneg = True
    name = ""

    @abstractmethod
    def value(self, w) -> float: ...

    @abstractmethod
    def grad(self, w) -> np.ndarray: ...

    @abstractmethod
    def argmin(self, feasible: FeasibleSet) -> np.ndarray:
        """Minimizer of ``R`` over the set."""

    def check_compatible(self, feasible: FeasibleSet) -> None:
        """Raise :class:`ConfigError` if the pairing is not supported."""

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self).__name__)


class HalfSquaredL2(Regularizer):
    """``R(w) = 0.5 ||w||^2``; modulus 1 with respect to l2."""

    name = "half_squared_l2"

    def value(self, w):
        w = np.asarray(w, dtype=float)
        return 0.5 * float(np.dot(w, w))

    def grad(self, w):
        return np.array(w, dtype=float)

    def argmin(self, feasible):
        return feasible.project(np.zeros(feasible.dim))


class NegativeEntropy(Regularizer):
    """``R(w) = sum w_i ln w_i + ln d`` on the simplex; modulus 1 with respect to l1.

    The ``+ ln d`` shift makes the minimum over the simplex exactly zero.
    """

    name = "negative_entropy"
    norm = "l1"

    def value(self, w):
        w = np.asarray(w, dtype=float)
        pos = w[w > 0]
        return float(np.sum(pos * np.log(pos)) + math.log(w.size))

    def grad(self, w):
        w = np.maximum(np.asarray(w, dtype=float), ENTROPY_FLOOR)
        return 1.0 + np.log(w)

    def argmin(self, feasible):
        self.check_compatible(feasible)
        return np.full(feasible.dim, 1.0 / feasible.dim)

    def check_compatible(self, feasible):
        if not isinstance(feasible, Simplex):
            raise ConfigError("negative entropy is only supported on the simplex")


def project(feasible: FeasibleSet, x) -> np.ndarray:
    """Exact Euclidean projection of ``x`` onto ``feasible``."""
    return feasible.project(x)


def bregman(reg: Regularizer, x, y) -> float:
    """Bregman divergence ``R(x) - R(y) - grad R(y)^T (x - y)``.

    Raises
    ------
    DomainError
        For the entropy, when ``y`` has a nonpositive coordinate.
    """
    x = as_point(x)
    y = as_point(y, x.size)
    if isinstance(reg, NegativeEntropy) and np.any(y <= 0):
        raise DomainError("entropic divergence needs y in the relative interior")
    return reg.value(x) - reg.value(y) - float(np.dot(reg.grad(y), x - y))


def dual_norm_grad_bound(reg: Regularizer, feasible: FeasibleSet, floor: float = 1e-6) -> float:
    """``sup_{w in C} ||grad R(w)||_*`` for supported pairings.

    For the entropy the gradient is unbounded at the boundary, so the supremum
    is taken over ``{w in C : w_i >= floor}``.
    """
    if isinstance(reg, HalfSquaredL2):
        # grad R(w) = w, so this is the largest l2 norm in the set
        return feasible.max_distance(np.zeros(feasible.dim), "l2")
    if isinstance(reg, NegativeEntropy):
        reg.check_compatible(feasible)
        d = feasible.dim
        hi = 1.0 - (d - 1) * floor
        return max(abs(1.0 + math.log(floor)), abs(1.0 + math.log(hi)))
    raise ConfigError(f"no gradient bound for {reg!r} on {feasible!r}")


def make_set(spec: dict, dim: int) -> FeasibleSet:
    """Build a set from a config mapping such as ``{"kind": "ball", "radius": 1}``."""
    kind = spec.get("kind", "ball")
    if kind == "ball":
        center = spec.get("center")
        center = np.zeros(dim) if center is None else np.broadcast_to(np.asarray(center, float), (dim,))
        return EuclideanBall(center, spec.get("radius", 1.0))
    if kind == "box":
        lo = np.broadcast_to(np.asarray(spec.get("lower", -1.0), float), (dim,))
        hi = np.broadcast_to(np.asarray(spec.get("upper", 1.0), float), (dim,))
        return Box(lo, hi)
    if kind == "simplex":
        return Simplex(dim)
    raise ConfigError(f"set.kind: unknown set {kind!r}")


def make_regularizer(name: str) -> Regularizer:
    if name in ("half_squared_l2", "l2"):
        return HalfSquaredL2()
    if name in ("negative_entropy", "entropy"):
        return NegativeEntropy()
    raise ConfigError(f"unknown regularizer {name!r}")
