"""Certified minimization of the strongly convex inner problems.

Every update rule in the package minimizes an objective of the form

    F(w) = c^T w + (a/2)||w - z||^2 + lam ||w||_1
           + b * sum_i w_i (ln w_i - ln u_i)
           + sum_j rho_j max(0, theta_j - g_j^T w)

over a feasible set. Linear and quadratic losses, composite terms and
Bregman terms all fold into ``(c, a, z, lam, b, u)``; hinge losses stay as
explicit terms. Either ``a > 0`` (Euclidean geometry, modulus ``a`` in l2)
or ``b > 0`` (entropic geometry on the simplex, modulus ``b`` in l1).

The returned certificate ``delta`` bounds ``F(w) - min F`` and comes from a
subgradient ``v`` of ``F`` at the returned point: ``delta = ||v||_*^2 / (2 mu)``.
Hinge terms are handled through the box-constrained dual, certified by the
duality gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, SolverError
from .geometry import Box, EuclideanBall, FeasibleSet, Simplex, soft_threshold

#: precision stand-in for an exact argmin
EXACT_DELTA = 1e-10
#: smallest target an accuracy schedule may request
DELTA_FLOOR = 1e-12
MAX_ITERS = 100_000

HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}

CERTIFIED = "Certified"
TRUNCATED = "Truncated"


@dataclass(frozen=True)
class SolveCertificate:
    """Outcome of one inner solve.

    Attributes
    ----------
    delta : float
        Certified bound on ``F(w) - min F``.
    iterations : int
        Solver iterations (0 for closed forms).
    status : str
        ``"Certified"`` when ``delta <= target``, else ``"Truncated"``.
    mu : float
        Strong-convexity modulus of the objective in ``norm``.
    norm : str
        ``"l2"`` (Euclidean objectives) or ``"l1"`` (entropic objectives).
    dual : ndarray or None
        Final dual multipliers of the hinge terms, usable as a warm start.
    """

    delta: float
    iterations: int = 0
    status: str = CERTIFIED
    mu: float = 1.0
    norm: str = "l2"
    dual: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def distance_bound(self) -> float:
        """``sqrt(2 delta / mu)``: how far the point can be from the true minimizer."""
        return math.sqrt(2.0 * max(self.delta, 0.0) / self.mu)

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED


def _xlogx(w):
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] * np.log(w[pos])
    return out


def _softmax(logits):
    m = np.max(logits)
    e = np.exp(logits - m)
    return e / e.sum()


@dataclass(frozen=True, eq=False)
class InnerObjective:
    """Structured strongly convex objective (see module docstring).

    Build instances with :meth:`zero` and the ``plus_*`` methods; each returns
    a new object, so partially built objectives can be reused.
    """

    feasible: FeasibleSet
    linear: np.ndarray
    quad_weight: float = 0.0
    quad_center: np.ndarray | None = None
    l1: float = 0.0
    entropy_weight: float = 0.0
    entropy_logref: np.ndarray | None = None
    hinge_g: np.ndarray | None = None
    hinge_theta: np.ndarray | None = None
    hinge_weight: np.ndarray | None = None
    const: float = 0.0

    # -- construction -----------------------------------------------------
    @classmethod
    def zero(cls, feasible: FeasibleSet) -> "InnerObjective":
        d = feasible.dim
        return cls(feasible, np.zeros(d), quad_center=np.zeros(d))

    def plus_linear(self, g, weight: float = 1.0) -> "InnerObjective":
        return replace(self, linear=self.linear + weight * np.asarray(g, dtype=float))

    def plus_half_sq(self, weight: float, center=None) -> "InnerObjective":
        """Add ``weight/2 * ||w - center||^2``."""
        if weight == 0:
            return self
        if weight < 0:
            raise ConfigError("quadratic weight must be nonnegative")
        center = np.zeros(self.feasible.dim) if center is None else np.asarray(center, dtype=float)
        a0, z0 = self.quad_weight, self.quad_center
        a = a0 + weight
        z = (a0 * z0 + weight * center) / a
        diff = z0 - center
        const = self.const + 0.5 * a0 * weight / a * float(np.dot(diff, diff))
        return replace(self, quad_weight=a, quad_center=z, const=const)

    def plus_l1(self, weight: float) -> "InnerObjective":
        if weight < 0:
            raise ConfigError("l1 weight must be nonnegative")
        return replace(self, l1=self.l1 + weight)

    def plus_kl(self, weight: float, ref) -> "InnerObjective":
        """Add ``weight * KL(w || ref)`` (simplex only)."""
        if weight == 0:
            return self
        if not isinstance(self.feasible, Simplex):
            raise ConfigError("entropic terms are only supported on the simplex")
        ref = np.asarray(ref, dtype=float)
        if np.any(ref <= 0):
            raise ConfigError("entropic reference must be strictly positive")
        logref = np.log(ref / ref.sum())
        b0 = self.entropy_weight
        if b0 == 0:
            new = logref
        else:
            new = (b0 * self.entropy_logref + weight * logref) / (b0 + weight)
        return replace(self, entropy_weight=b0 + weight, entropy_logref=new)

    def plus_hinge(self, g, theta: float, weight: float = 1.0) -> "InnerObjective":
        g = np.asarray(g, dtype=float)[None, :]
        if self.hinge_g is None:
            return replace(self, hinge_g=g, hinge_theta=np.array([float(theta)]),
                           hinge_weight=np.array([float(weight)]))
        return replace(
            self,
            hinge_g=np.vstack([self.hinge_g, g]),
            hinge_theta=np.append(self.hinge_theta, float(theta)),
            hinge_weight=np.append(self.hinge_weight, float(weight)),
        )

    def plus_loss(self, loss, weight: float = 1.0) -> "InnerObjective":
        """Fold ``weight * loss`` into the objective."""
        from .losses import HingeLoss, LinearLoss, QuadraticLoss

        obj = self
        for a, p in loss.terms():
            a *= weight
            if isinstance(p, LinearLoss):
                obj = obj.plus_linear(p.g, a)
            elif isinstance(p, QuadraticLoss):
                obj = obj.plus_half_sq(a * p.alpha, p.center)
            elif isinstance(p, HingeLoss):
                obj = obj.plus_hinge(p.g, p.threshold, a)
            else:
                raise ConfigError(f"cannot fold loss {p!r} into an inner objective")
        return obj

    def plus_composite(self, part, weight: float = 1.0) -> "InnerObjective":
        if weight == 0 or not part.active:
            return self
        if part.kind == "l1":
            return self.plus_l1(weight * part.weight)
        return self.plus_half_sq(weight * part.weight)

    def plus_bregman(self, reg, anchor, weight: float = 1.0) -> "InnerObjective":
        """Add ``weight * D_R(w, anchor)``."""
        from .geometry import ENTROPY_FLOOR, HalfSquaredL2, NegativeEntropy

        if isinstance(reg, HalfSquaredL2):
            return self.plus_half_sq(weight, anchor)
        if isinstance(reg, NegativeEntropy):
            ref = np.maximum(np.asarray(anchor, dtype=float), ENTROPY_FLOOR)
            return self.plus_kl(weight, ref)
        raise ConfigError(f"unsupported regularizer {reg!r}")

    def plus_regularizer(self, reg, weight: float = 1.0) -> "InnerObjective":
        """Add ``weight * R(w)``."""
        from .geometry import HalfSquaredL2, NegativeEntropy

        if isinstance(reg, HalfSquaredL2):
            return self.plus_half_sq(weight)
        if isinstance(reg, NegativeEntropy):
            d = self.feasible.dim
            return self.plus_kl(weight, np.full(d, 1.0 / d))
        raise ConfigError(f"unsupported regularizer {reg!r}")

    # -- properties -------------------------------------------------------
    @property
    def n_hinges(self) -> int:
        return 0 if self.hinge_g is None else self.hinge_g.shape[0]

    @property
    def entropic(self) -> bool:
        return self.entropy_weight > 0

    @property
    def mu(self) -> float:
        """Strong-convexity modulus (l1 for entropic objectives, else l2)."""
        return self.entropy_weight if self.entropic else self.quad_weight

    @property
    def norm(self) -> str:
        return "l1" if self.entropic else "l2"

    # -- evaluation -------------------------------------------------------
    def _hinge_slacks(self, w):
        return self.hinge_theta - self.hinge_g @ w

    def value(self, w) -> float:
        w = np.asarray(w, dtype=float)
        r = w - self.quad_center
        v = float(self.linear @ w) + 0.5 * self.quad_weight * float(r @ r)
        v += self.l1 * float(np.sum(np.abs(w))) + self.const
        if self.entropic:
            v += self.entropy_weight * float(np.sum(_xlogx(w)) - self.entropy_logref @ w)
        if self.n_hinges:
            v += float(self.hinge_weight @ np.maximum(0.0, self._hinge_slacks(w)))
        return v

    def values(self, W) -> np.ndarray:
        """Objective at each row of ``W`` (vectorized :meth:`value`)."""
        W = np.asarray(W, dtype=float)
        R = W - self.quad_center
        v = W @ self.linear + 0.5 * self.quad_weight * np.einsum("ij,ij->i", R, R)
        v += self.l1 * np.sum(np.abs(W), axis=1) + self.const
        if self.entropic:
            v += self.entropy_weight * (np.sum(_xlogx(W), axis=1) - W @ self.entropy_logref)
        for j in range(self.n_hinges):
            v += self.hinge_weight[j] * np.maximum(0.0, self.hinge_theta[j] - W @ self.hinge_g[j])
        return v

    def difference(self, x, y) -> float:
        """``F(x) - F(y)`` evaluated without forming the two large values."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dxy = x - y
        v = float(self.linear @ dxy)
        v += 0.5 * self.quad_weight * float(dxy @ (x + y - 2.0 * self.quad_center))
        v += self.l1 * float(np.sum(np.abs(x)) - np.sum(np.abs(y)))
        if self.entropic:
            v += self.entropy_weight * float(np.sum(_xlogx(x) - _xlogx(y)) - self.entropy_logref @ dxy)
        if self.n_hinges:
            hx = np.maximum(0.0, self._hinge_slacks(x))
            hy = np.maximum(0.0, self._hinge_slacks(y))
            v += float(self.hinge_weight @ (hx - hy))
        return v

    def smooth_grad(self, w) -> np.ndarray:
        """Gradient of ``c^T w + (a/2)||w - z||^2``."""
        return self.linear + self.quad_weight * (np.asarray(w, dtype=float) - self.quad_center)

    def base_argmin(self, tilt=None) -> np.ndarray:
        """Closed-form minimizer of the hinge-free part plus ``tilt^T w``."""
        c = self.linear if tilt is None else self.linear + tilt
        if self.entropic:
            if self.quad_weight > 0:
                raise ConfigError("no closed form for mixed quadratic and entropic terms")
            return _softmax(self.entropy_logref - c / self.entropy_weight)
        a = self.quad_weight
        if not a > 0:
            raise ConfigError("inner objective is not strongly convex (zero quadratic weight)")
        return self.feasible._prox_l1(self.quad_center - c / a, self.l1 / a)

    @property
    def has_closed_form(self) -> bool:
        return self.n_hinges == 0 and not (self.entropic and self.quad_weight > 0)


def _check(obj: InnerObjective):
    if obj.entropic and not isinstance(obj.feasible, Simplex):
        raise ConfigError("entropic objectives require the simplex")
    if not obj.mu > 0:
        raise ConfigError("inner objective is not strongly convex (mu = 0)")


def solve(obj: InnerObjective, target_delta: float = EXACT_DELTA, warm_start=None,
          method: str = "auto", max_iters: int = MAX_ITERS, dual_start=None):
    """Minimize ``obj`` over its set to certified accuracy ``target_delta``.

    Parameters
    ----------
    obj : InnerObjective
    target_delta : float
        Requested bound on ``F(w) - min F``.
    warm_start : array_like, optional
        Starting point for iterative paths.
    method : {"auto", "iterative"}
        ``"auto"`` takes a closed form whenever one exists; ``"iterative"``
        always runs the proximal-gradient (Euclidean) or exponentiated-gradient
        (entropic) iteration.
    max_iters : int
    dual_start : array_like, optional
        Warm start for the hinge multipliers.

    Returns
    -------
    w : ndarray
    cert : SolveCertificate
        ``status`` is ``"Truncated"`` if the target was not reached.
    """
    if not target_delta > 0:
        raise ConfigError("target_delta must be positive")
    _check(obj)
    if obj.n_hinges:
        return _solve_hinged(obj, target_delta, warm_start, method, max_iters, dual_start)
    if method == "auto" and obj.has_closed_form:
        return obj.base_argmin(), SolveCertificate(0.0, 0, CERTIFIED, obj.mu, obj.norm)
    if method not in ("auto", "iterative"):
        raise ConfigError(f"unknown solve method {method!r}")
    if obj.entropic:
        return _solve_entropic(obj, target_delta, warm_start, max_iters)
    return _solve_proxgrad(obj, target_delta, warm_start, max_iters)


def solve_exact(obj: InnerObjective, warm_start=None, **kw):
    """:func:`solve` at the exact-mode precision ``1e-10``."""
    return solve(obj, EXACT_DELTA, warm_start, **kw)


def _solve_proxgrad(obj, target, warm_start, max_iters):
    feasible = obj.feasible
    lam_total = obj.l1
    mu = obj.quad_weight
    # twice the smoothness constant: a full step 1/a would land on the closed
    # form in one move, while a half step contracts by 1/2 per iteration and
    # so checks the closed form through different arithmetic
    big = 2.0 * obj.quad_weight
    w = feasible.project(np.zeros(feasible.dim) if warm_start is None else warm_start)
    grad = obj.smooth_grad(w)
    delta = math.inf
    for k in range(1, max_iters + 1):
        w_new = feasible._prox_l1(w - grad / big, lam_total / big)
        grad_new = obj.smooth_grad(w_new)
        # grad_new - grad + big (w - w_new) is a subgradient of F at w_new
        v = grad_new - grad + big * (w - w_new)
        delta = float(v @ v) / (2.0 * mu)
        stalled = np.array_equal(w_new, w)
        w, grad = w_new, grad_new
        if delta <= target:
            return w, SolveCertificate(delta, k, CERTIFIED, mu, "l2")
        if stalled:
            break
    return w, SolveCertificate(delta, k, TRUNCATED, mu, "l2")


def _entropic_delta(obj, w):
    # on the relative interior the normal cone of the simplex is span{1};
    # removing the midrange leaves a subgradient with linf norm spread / 2
    g = obj.smooth_grad(w) + obj.entropy_weight * (np.log(w) - obj.entropy_logref + 1.0)
    spread = float(np.max(g) - np.min(g))
    return spread * spread / (8.0 * obj.entropy_weight)


def _solve_entropic(obj, target, warm_start, max_iters):
    b = obj.entropy_weight
    d = obj.feasible.dim
    step = 1.0 / max(obj.quad_weight, b)
    w = np.full(d, 1.0 / d) if warm_start is None else np.maximum(np.asarray(warm_start, float), 1e-300)
    w = w / w.sum()
    logw = np.log(w)
    delta = math.inf
    for k in range(1, max_iters + 1):
        gq = obj.smooth_grad(w)
        logits = (b * obj.entropy_logref + logw / step - gq) / (b + 1.0 / step)
        logits -= np.max(logits)
        logw_new = logits - math.log(np.sum(np.exp(logits)))
        w_new = np.exp(logw_new)
        stalled = np.array_equal(w_new, w)
        w, logw = np.maximum(w_new, 1e-300), logw_new
        delta = _entropic_delta(obj, w)
        if delta <= target:
            return w, SolveCertificate(delta, k, CERTIFIED, b, "l1")
        if stalled:
            break
    return w, SolveCertificate(delta, k, TRUNCATED, b, "l1")


def _dual_gap(rho, s, lam):
    return float(rho @ (np.maximum(s, 0.0) - lam * s))


def _linear_range(feasible, G):
    """Row-wise ``(min, max)`` of ``G @ w`` over the set."""
    if isinstance(feasible, EuclideanBall):
        mid, half = G @ feasible.center, feasible.radius * np.linalg.norm(G, axis=1)
    elif isinstance(feasible, Box):
        mid = G @ (0.5 * (feasible.upper + feasible.lower))
        half = np.abs(G) @ (0.5 * (feasible.upper - feasible.lower))
    else:
        return G.min(axis=1), G.max(axis=1)
    return mid - half, mid + half


def fold_flat_hinges(obj: InnerObjective):
    """Rewrite hinges whose kink misses the set.

    A hinge that is zero on the whole set is dropped; one that is positive on
    the whole set becomes linear. The result agrees with ``obj`` on the set.
    Returns the new objective, the indices of the kept hinges and the indices
    of the linearized ones.
    """
    G, theta, rho = obj.hinge_g, obj.hinge_theta, obj.hinge_weight
    lo, hi = _linear_range(obj.feasible, G)
    on = theta >= hi
    keep = np.flatnonzero((theta > lo) & ~on)
    on = np.flatnonzero(on)
    if keep.size == G.shape[0]:
        return obj, keep, on
    out = replace(obj, linear=obj.linear - rho[on] @ G[on], const=obj.const + float(rho[on] @ theta[on]),
                  hinge_g=G[keep] if keep.size else None, hinge_theta=theta[keep] if keep.size else None,
                  hinge_weight=rho[keep] if keep.size else None)
    return out, keep, on


def _solve_hinged(obj, target, warm_start, method, max_iters, dual_start):
    m = obj.n_hinges
    flat, keep, on = fold_flat_hinges(obj)
    if keep.size == m:
        return _solve_dual(obj, target, max_iters, dual_start)
    sub_start = None
    if dual_start is not None:
        ds = np.asarray(dual_start, dtype=float)
        sub_start = ds[keep[keep < ds.size]]
    if keep.size:
        w, cert = _solve_dual(flat, target, max_iters, sub_start)
    else:
        w, cert = solve(flat, target, warm_start, method, max_iters)
    dual = np.zeros(m)
    dual[on] = 1.0
    if keep.size:
        dual[keep] = cert.dual
    return w, replace(cert, dual=dual)


def _solve_dual(obj, target, max_iters, dual_start):
    if obj.entropic and obj.quad_weight > 0:
        raise ConfigError("hinge terms need a closed-form base (pure quadratic or pure entropic)")
    G, theta, rho = obj.hinge_g, obj.hinge_theta, obj.hinge_weight
    m = G.shape[0]
    RG = rho[:, None] * G

    if obj.entropic:
        def primal(lam):
            w = obj.base_argmin(-(RG.T @ lam))
            return w, theta - G @ w
    else:
        # base_argmin unrolled: prox of the shifted center
        a, fs = obj.quad_weight, obj.feasible
        z0, RGa, lam1 = obj.quad_center - obj.linear / a, RG.T / a, obj.l1 / a

        def primal(lam):
            w = fs._prox_l1(z0 + RGa @ lam, lam1)
            return w, theta - G @ w

    if m == 1:
        return _solve_dual_1d(obj, primal, rho, target, max_iters)

    if obj.entropic:
        lip = float(np.max(np.sum(RG * RG, axis=0))) / obj.entropy_weight
    else:
        lip = float(np.linalg.eigvalsh(RG.T @ RG)[-1]) / obj.quad_weight
    lip = max(lip, 1e-300)

    lam = np.zeros(m)
    if dual_start is not None:
        ds = np.clip(np.asarray(dual_start, dtype=float)[:m], 0.0, 1.0)
        lam[:ds.size] = ds
        if ds.size < m:
            # new hinges start at the multiplier matching their current sign
            _, s0 = primal(lam)
            lam[ds.size:] = (s0[ds.size:] > 0).astype(float)
    w, s = primal(lam)
    best = (_dual_gap(rho, s, lam), w, lam.copy())
    y, lam_prev, tk = lam.copy(), lam.copy(), 1.0
    k = 0
    for k in range(1, max_iters + 1):
        wy, sy = primal(y)
        lam_new = np.clip(y + (rho * sy) / lip, 0.0, 1.0)
        w, s = primal(lam_new)
        gap = _dual_gap(rho, s, lam_new)
        if gap < best[0]:
            best = (gap, w, lam_new.copy())
        if gap <= target:
            break
        tk_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        # adaptive restart when the step points against the momentum
        if float((rho * sy) @ (lam_new - lam_prev)) < 0:
            tk_new, y = 1.0, lam_new.copy()
        else:
            y = lam_new + ((tk - 1.0) / tk_new) * (lam_new - lam_prev)
        lam_prev, tk = lam_new, tk_new
    gap, w, lam = best
    gap = max(gap, 0.0)
    status = CERTIFIED if gap <= target else TRUNCATED
    return w, SolveCertificate(gap, k, status, obj.mu, obj.norm, dual=lam)


def _solve_dual_1d(obj, primal, rho, target, max_iters):
    # s(lam) = theta - g^T w(lam) is nonincreasing; bisect for its sign change
    lo, hi = 0.0, 1.0
    w, s = primal(np.array([hi]))
    best = (_dual_gap(rho, s, np.array([hi])), w, hi)
    if s[0] < 0:
        w, s = primal(np.array([lo]))
        gap = _dual_gap(rho, s, np.array([lo]))
        if gap < best[0]:
            best = (gap, w, lo)
        k = 0
        while best[0] > target and k < min(max_iters, 200) and s[0] > 0:
            k += 1
            mid = 0.5 * (lo + hi)
            w, s_mid = primal(np.array([mid]))
            gap = _dual_gap(rho, s_mid, np.array([mid]))
            if gap < best[0]:
                best = (gap, w, mid)
            if s_mid[0] > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-17:
                break
    else:
        k = 0
    gap, w, lam = best
    gap = max(gap, 0.0)
    status = CERTIFIED if gap <= target else TRUNCATED
    return w, SolveCertificate(gap, max(k, 1), status, obj.mu, obj.norm, dual=np.array([lam]))


def solve_lagged(obj: InnerObjective, target_delta: float, anchor, **kw):
    """A ``target_delta``-suboptimal point on the segment from the minimizer to ``anchor``.

    This models a warm-started iterative solver stopped as soon as its
    accuracy budget is met: the returned point is the one farthest from the
    exact minimizer (toward the previous iterate ``anchor``) whose excess
    objective stays within ``target_delta``. The segment lies in the set by
    convexity, so no projection is needed.
    """
    w0, cert0 = solve(obj, min(EXACT_DELTA, target_delta), **kw)
    budget = target_delta - cert0.delta
    anchor = np.asarray(anchor, dtype=float)
    v = anchor - w0
    if budget <= 0 or not np.any(v):
        return w0, cert0
    phi1 = obj.difference(anchor, w0)
    if phi1 <= budget:
        return anchor.copy(), replace(cert0, delta=max(phi1, 0.0) + cert0.delta, iterations=cert0.iterations + 1)
    lo, hi, k = 0.0, 1.0, 0
    for k in range(1, 61):
        mid = 0.5 * (lo + hi)
        if obj.difference(w0 + mid * v, w0) <= budget:
            lo = mid
        else:
            hi = mid
    w = w0 + lo * v
    if isinstance(obj.feasible, Simplex):
        w = np.maximum(w, 0.0)
    phi = max(obj.difference(w, w0), 0.0)
    return w, replace(cert0, delta=phi + cert0.delta, iterations=cert0.iterations + k)


def _hinge_lp(obj, w_bounds, simplex=False, cuts=()):
    """LP form of ``min c^T w + lam ||w||_1 + sum_j rho_j max(0, theta_j - g_j^T w)``.

    ``w_bounds`` are per-coordinate bounds, ``simplex`` adds ``sum w = 1`` and
    each cut ``(u, b)`` adds ``u^T w <= b``. Returns the ``w`` part of the
    solution and the dual objective read off the multipliers, a lower bound
    on the program's value.
    """
    from scipy.optimize import linprog

    d, m = obj.feasible.dim, obj.n_hinges
    use_p = obj.l1 > 0 and not simplex
    nv = d + (d if use_p else 0) + m
    cost = np.zeros(nv)
    cost[:d] = obj.linear
    if use_p:
        cost[d:2 * d] = obj.l1
    cost[nv - m:] = obj.hinge_weight
    a_ub = np.zeros((m + (2 * d if use_p else 0) + len(cuts), nv))
    b_ub = np.zeros(a_ub.shape[0])
    a_ub[:m, :d] = -obj.hinge_g
    a_ub[np.arange(m), nv - m + np.arange(m)] = -1.0
    b_ub[:m] = -obj.hinge_theta
    k = m
    if use_p:
        for i in range(d):
            for sgn in (1.0, -1.0):
                a_ub[k, i], a_ub[k, d + i] = sgn, -1.0
                k += 1
    for u, rhs in cuts:
        a_ub[k, :d], b_ub[k] = u, rhs
        k += 1
    a_eq = b_eq = None
    if simplex:
        a_eq = np.zeros((1, nv))
        a_eq[0, :d] = 1.0
        b_eq = np.array([1.0])
    bounds = list(w_bounds) + [(0.0, None)] * (nv - d)
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs",
                  options=HIGHS_OPTIONS)
    if res.status != 0:
        raise SolverError(f"linear program failed: {res.message}")
    dual = float(b_ub @ res.ineqlin.marginals)
    if simplex:
        dual += float(b_eq @ res.eqlin.marginals)
    lows = np.array([lo for lo, _ in bounds])
    highs = np.array([0.0 if hi is None else hi for _, hi in bounds])
    dual += float(lows @ res.lower.marginals) + float(highs @ res.upper.marginals)
    if simplex:
        dual += obj.l1  # ||w||_1 = 1 on the simplex, left out of the program
    return res.x[:d], dual


def solve_lp_hinge(obj: InnerObjective):
    """Minimize a hinge sum plus linear and l1 terms on a box or simplex.

    Returns the minimizer and the duality gap reported through the LP
    multipliers, evaluated against the exact objective at the returned point.
    """
    feasible = obj.feasible
    if obj.quad_weight > 0 or obj.entropic:
        raise ConfigError("linear-program path needs a purely piecewise-linear objective")
    if not isinstance(feasible, (Box, Simplex)):
        raise ConfigError("hinge sums without curvature are only supported on boxes and simplices")
    obj = fold_flat_hinges(obj)[0]
    if not obj.n_hinges:
        return feasible.argmin_linear_l1(obj.linear, obj.l1), 0.0
    if isinstance(feasible, Box):
        x, lower = _hinge_lp(obj, zip(feasible.lower, feasible.upper))
    else:
        x, lower = _hinge_lp(obj, [(0.0, 1.0)] * feasible.dim, simplex=True)
    w = feasible.project(x)
    return w, max(0.0, obj.value(w) - obj.const - lower)


def solve_ball_hinge(obj: InnerObjective, tol: float = 1e-12, max_cuts: int = 50):
    """Minimize a hinge sum plus linear and l1 terms on a Euclidean ball.

    Works on the box-constrained dual ``max_{0 <= lam <= 1}``, whose gradient
    is ``rho * s(w(lam))`` with ``w(lam)`` the boundary point minimizing the
    tilted linear part. The dual is nonsmooth when the minimizer is interior
    or degenerate; then cutting planes over the bounding box and a vanishing
    quadratic penalty supply further bounds. Returns the primal point and the
    certified gap.
    """
    from scipy.optimize import minimize

    feasible = obj.feasible
    if obj.quad_weight > 0 or obj.entropic:
        raise ConfigError("ball hinge path needs a purely piecewise-linear objective")
    if not isinstance(feasible, EuclideanBall):
        raise ConfigError("ball hinge path needs a Euclidean ball")
    obj = fold_flat_hinges(obj)[0]
    if not obj.n_hinges:
        return feasible.argmin_linear_l1(obj.linear, obj.l1), 0.0
    G, theta, rho = obj.hinge_g, obj.hinge_theta, obj.hinge_weight
    RG = rho[:, None] * G
    lam1, r, cen = obj.l1, feasible.radius, feasible.center

    def primal(lam):
        return feasible.argmin_linear_l1(obj.linear - RG.T @ lam, lam1)

    def neg_dual(lam):
        v = obj.linear - RG.T @ lam
        u = soft_threshold(v, lam1)
        val = float(rho @ (lam * theta)) - r * float(np.sqrt(u @ u)) + float(v @ cen)
        w = primal(lam)
        return -val, -(rho * (theta - G @ w))

    m = G.shape[0]
    res = minimize(neg_dual, np.full(m, 0.5), jac=True, method="L-BFGS-B",
                   bounds=[(0.0, 1.0)] * m, options={"ftol": 1e-15, "gtol": 1e-13, "maxiter": 20000})
    lam = np.clip(res.x, 0.0, 1.0)
    lower = -neg_dual(lam)[0]
    w = primal(lam)
    best = obj.value(w) - obj.const
    # Kelley cutting planes: the LP over the bounding box cut by tangent
    # planes of the ball bounds min F from below, exactly once the LP
    # solution lands in the ball
    box, cuts = list(zip(cen - r, cen + r)), []
    while best - lower > tol and len(cuts) < max_cuts:
        x, lp_lower = _hinge_lp(obj, box, cuts=cuts)
        lower = max(lower, lp_lower)
        w, best = _keep_better(obj, (w, best), feasible.project(x))
        out = float(np.linalg.norm(x - cen))
        if out <= r:
            break
        u = (x - cen) / out
        cuts.append((u, r + float(u @ cen)))
    # F + (mu/2)||w - c||^2 over the ball: its minimizer lies in argmin F once
    # mu is small enough (F is polyhedral), and its certified value minus
    # mu r^2 / 2 bounds min F from below
    scale = (float(rho @ np.linalg.norm(G, axis=1)) + float(np.linalg.norm(obj.linear))
             + lam1 * math.sqrt(feasible.dim)) / r
    mu, dual_start = scale, None
    while best - lower > tol and mu >= 1e-10 * scale:
        pen = obj.plus_half_sq(mu, cen)
        wp, cert = _solve_dual(pen, 0.1 * tol, 5000, dual_start)
        dual_start = cert.dual
        lower = max(lower, pen.value(wp) - obj.const - cert.delta - 0.5 * mu * r * r)
        w, best = _keep_better(obj, (w, best), wp)
        mu *= 0.1
    return w, max(best - lower, 0.0)


def _keep_better(obj, current, cand):
    val = obj.value(cand) - obj.const
    return (cand, val) if val < current[1] else current
