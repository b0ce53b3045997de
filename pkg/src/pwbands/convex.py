"""Small convex solvers used by the band constructions.

* ``qcqp_max``: maximise a positive-definite quadratic subject to one
  quadratic inequality, through the S-lemma dual.
* ``min_quad_over_box``: convex quadratic over a box (projected Newton).
* ``linear_extent``: range of the first coordinate over an ellipsoid
  intersected with a box on the remaining coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq, nnls

from .errors import Infeasible, NoStrictlyFeasiblePoint, NumericalError, ValidationError
from .kernel import psd_sqrt

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """q(x) = x^T matrix x + 2 linear^T x + constant."""

    matrix: np.ndarray
    linear: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ValidationError("quadratic form needs a square matrix")
        if not np.allclose(M, M.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(M).max())):
            raise ValidationError("quadratic form matrix must be symmetric")
        object.__setattr__(self, "matrix", 0.5 * (M + M.T))
        lin = np.asarray(self.linear, dtype=float).reshape(-1)
        if lin.size != M.shape[0]:
            raise ValidationError("linear term has the wrong length")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "constant", float(self.constant))

    @classmethod
    def centered(cls, matrix, center) -> "QuadraticForm":
        """(x - center)^T matrix (x - center)."""
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        c = np.asarray(center, dtype=float).reshape(-1)
        Mc = M @ c
        return cls(M, -Mc, float(c @ Mc))

    @property
    def dim(self) -> int:
        return self.linear.size

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.matrix @ x + 2.0 * self.linear @ x + self.constant)


# ---------------------------------------------------------------- qcqp_max

def _golden_min(fn, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Golden-section search for the minimiser of a unimodal function."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    return (c, fc) if fc <= fd else (d, fd)


def _psd_singular_feasible(w, V, lin, const, tol) -> bool:
    """Whether {x : x^T M x + 2 l^T x + c <= 0} is nonempty for PSD singular M."""
    null = w <= tol
    Vn = V[:, null]
    ln = Vn.T @ lin
    if np.linalg.norm(ln) > 1e-12 * max(1.0, np.linalg.norm(lin)):
        return True  # unbounded below along a null direction
    Vr, wr = V[:, ~null], w[~null]
    lr = Vr.T @ lin
    min_val = const - float(np.sum(lr * lr / wr)) if wr.size else const
    return min_val <= 1e-12 * max(1.0, abs(const))


def qcqp_max(objective: QuadraticForm, constraint: QuadraticForm, tol: float = 1e-10,
             scale: float | None = None) -> float:
    """sup objective(x) subject to constraint(x) <= 0.

    ``objective`` must have a positive definite matrix. Returns ``inf`` when
    the supremum is unbounded, which happens exactly when the constraint
    matrix is not positive definite and the feasible set is nonempty.
    Constraint eigenvalues below 1e-12 * scale count as zero; ``scale``
    defaults to the largest eigenvalue magnitude and should be raised by
    callers whose constraint matrix is a difference of larger terms.
    """
    A = objective.matrix
    n = objective.dim
    if constraint.dim != n:
        raise ValidationError("objective and constraint dimensions differ")
    try:
        LA = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("objective matrix must be positive definite") from exc
    center = -sla.cho_solve((LA, True), objective.linear)
    offset = objective(center)

    M, lin, const = constraint.matrix, constraint.linear, constraint.constant
    w, V = np.linalg.eigh(M)
    top = float(np.max(np.abs(w)))
    scale = max(top, float(scale or 0.0))
    pd_tol = 1e-12 * scale
    if scale == 0.0 or w[0] <= pd_tol:
        if w[0] < -pd_tol or _psd_singular_feasible(w, V, lin, const, pd_tol):
            return math.inf
        raise NoStrictlyFeasiblePoint("constraint set is empty")

    # whiten the constraint: with M = L L^T and z = L^T x + L^{-1} l the
    # feasible set is the ball ||z||^2 <= rho2
    L = np.linalg.cholesky(M)
    lp = sla.solve_triangular(L, lin, lower=True)
    rho2 = float(lp @ lp) - const
    if rho2 <= 1e-14 * max(1.0, float(lp @ lp), abs(const)):
        raise NoStrictlyFeasiblePoint("constraint set has no interior")
    zc = lp + L.T @ center
    T = sla.solve_triangular(L, A, lower=True)
    At = sla.solve_triangular(L, T.T, lower=True)
    lam, Q = np.linalg.eigh(0.5 * (At + At.T))
    a2 = (Q.T @ zc) ** 2
    lmax = float(lam[-1])
    gaps = lmax - lam  # >= 0, computed once to avoid cancellation in mu - lam

    # dual function of max sum lam (w - a)^2 s.t. ||w||^2 <= rho2, at mu = lmax + delta
    def dual(delta: float) -> float:
        mu = lmax + delta
        return mu * rho2 + float(np.sum(lam * mu * a2 / (gaps + delta)))

    spread = math.sqrt(float(np.sum(lam * lam * a2)) / rho2)
    hi = 2.0 * max(spread, 1e-300) + 1e-16 * lmax
    lo = max(1e-30 * lmax, 1e-300)
    if hi <= lo:
        best = dual(lo)
    else:
        t, best = _golden_min(lambda t: dual(math.exp(t)), math.log(lo), math.log(hi), tol)
        best = min(best, dual(hi))
    return best + offset


# ------------------------------------------------------ min_quad_over_box

def _box_arrays(n, lower, upper, fixed):
    lo = np.full(n, -np.inf) if lower is None else np.array(lower, dtype=float).reshape(n)
    hi = np.full(n, np.inf) if upper is None else np.array(upper, dtype=float).reshape(n)
    if fixed:
        for i, v in dict(fixed).items():
            lo[i] = hi[i] = float(v)
    if np.any(lo > hi):
        raise Infeasible("box has a lower bound above its upper bound")
    return lo, hi


def min_quad_over_box(quad: QuadraticForm, lower=None, upper=None, fixed=None,
                      tol: float = 1e-12):
    """Minimise ``quad`` over lower <= x <= upper.

    ``fixed`` maps coordinate indices to pinned values. The matrix must be
    positive definite on the coordinates that are not pinned. Returns
    ``(value, argmin)``.
    """
    Q, lin = quad.matrix, quad.linear
    n = quad.dim
    lo, hi = _box_arrays(n, lower, upper, fixed)
    pinned = lo == hi

    x = np.where(pinned, lo, 0.0)
    fr = ~pinned
    if np.any(fr):
        try:
            x[fr] = np.linalg.solve(Q[np.ix_(fr, fr)], -(lin[fr] + Q[np.ix_(fr, pinned)] @ x[pinned]))
        except np.linalg.LinAlgError as exc:
            raise NumericalError("quadratic is not positive definite on the free coordinates") from exc
    x = np.clip(x, lo, hi)

    def value(z):
        return float(z @ Q @ z + 2.0 * lin @ z)

    scale = max(1.0, float(np.abs(Q).max()), float(np.abs(lin).max(initial=0.0)))
    fx = value(x)
    for _ in range(max(50, 10 * n * n)):
        g = Q @ x + lin
        pg = x - np.clip(x - g, lo, hi)
        if np.max(np.abs(pg), initial=0.0) <= tol * scale:
            break
        clamped = pinned | ((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0))
        free = ~clamped
        step = np.zeros(n)
        if np.any(free):
            try:
                step[free] = -np.linalg.solve(Q[np.ix_(free, free)], g[free])
            except np.linalg.LinAlgError as exc:
                raise NumericalError("singular reduced Hessian in box QP") from exc
        else:
            break
        t = 1.0
        while True:
            xn = np.clip(x + t * step, lo, hi)
            fn = value(xn)
            if fn <= fx + 0.1 * 2.0 * float(g @ (xn - x)) or t < 1e-20:
                break
            t *= 0.5
        if fn >= fx and np.array_equal(xn, x):
            break
        x, fx = xn, fn
    return fx + quad.constant, x


def kkt_residual(quad: QuadraticForm, x, lower=None, upper=None, fixed=None) -> float:
    """Infinity norm of the projected gradient at x (zero at the box minimiser)."""
    lo, hi = _box_arrays(quad.dim, lower, upper, fixed)
    g = 2.0 * (quad.matrix @ x + quad.linear)
    return float(np.max(np.abs(x - np.clip(x - g, lo, hi)), initial=0.0))


# ----------------------------------------------------------- linear_extent

@dataclass(frozen=True, eq=False)
class BoxedEllipsoid:
    """{z : (z - c)^T gram^{-1} (z - c) <= level, lower_k <= z_k <= upper_k, k >= 1}.

    The ellipsoid is stored through ``gram`` (the inverse of the quadratic
    form) so that nearly singular kernel Gramians never have to be inverted.
    Coordinate 0 is unconstrained; ``lower``/``upper`` bound coordinates
    1..d and may contain infinities.
    """

    gram: np.ndarray
    level: float
    lower: np.ndarray
    upper: np.ndarray
    center: np.ndarray | None = None

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.gram, dtype=float))
        object.__setattr__(self, "gram", 0.5 * (G + G.T))
        d = G.shape[0] - 1
        lo = np.asarray(self.lower, dtype=float).reshape(d)
        hi = np.asarray(self.upper, dtype=float).reshape(d)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        c = np.zeros(d + 1) if self.center is None else np.asarray(self.center, dtype=float).reshape(d + 1)
        object.__setattr__(self, "center", c)
        if np.any(lo > hi):
            raise ValidationError("box lower bound exceeds upper bound")

    @classmethod
    def from_quad(cls, matrix, level, lower, upper, center=None) -> "BoxedEllipsoid":
        return cls(np.linalg.inv(np.asarray(matrix, dtype=float)), level, lower, upper, center)

    @property
    def quad(self) -> np.ndarray:
        return np.linalg.inv(self.gram)


def least_distance(G: np.ndarray, h: np.ndarray):
    """min ||s|| subject to G s >= h, via non-negative least squares.

    Returns ``(||s||^2, s)``; an infeasible system gives ``(inf, None)``.
    """
    m, r = G.shape
    if m == 0:
        return 0.0, np.zeros(r)
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(r + 1)
    f[-1] = 1.0
    u, _ = nnls(E, f, maxiter=50 * (m + r + 1))
    res = E @ u - f
    if res[-1] >= -1e-13:
        return math.inf, None
    s = -res[:-1] / res[-1]
    return float(s @ s), s


def linear_extent(problem: BoxedEllipsoid, xtol: float = 1e-10):
    """(min z_0, max z_0) over the boxed ellipsoid; raises Infeasible if empty.

    The ellipsoid is parametrised as z = c + S s with S the principal square
    root of ``gram`` and ||s||^2 <= level. For a fixed z_0 the smallest
    ||s||^2 compatible with the box is a least-distance problem; its value is
    convex in z_0, so each endpoint is the root of value(z_0) = level on one
    side of the unconstrained minimiser.
    """
    level = float(problem.level)
    if not level >= 0:
        raise Infeasible("negative level")
    if math.isinf(level):
        return -math.inf, math.inf
    S = psd_sqrt(problem.gram)
    c = problem.center
    rows, rhs = [], []
    for k in range(1, S.shape[0]):
        if np.isfinite(problem.lower[k - 1]):
            rows.append(S[k])
            rhs.append(problem.lower[k - 1] - c[k])
        if np.isfinite(problem.upper[k - 1]):
            rows.append(-S[k])
            rhs.append(c[k] - problem.upper[k - 1])
    G = np.array(rows).reshape(-1, S.shape[1])
    h = np.array(rhs, dtype=float)
    slack = level + 1e-12 * max(1.0, level)

    base, s_bar = least_distance(G, h)
    if base > slack:
        raise Infeasible(f"box-constrained minimum {base:.6g} exceeds level {level:.6g}")
    z_bar = c[0] + float(S[0] @ s_bar)
    half = math.sqrt(level * problem.gram[0, 0])
    cap = 1e6 * (1.0 + level)

    def excess(z0: float) -> float:
        Gp = np.vstack([G, S[0], -S[0]])
        hp = np.concatenate([h, [z0 - c[0], c[0] - z0]])
        val, _ = least_distance(Gp, hp)
        return min(val, cap) - level

    if excess(z_bar) >= 0:
        return z_bar, z_bar

    def endpoint(outer: float) -> float:
        if excess(outer) <= 0:
            return outer
        return brentq(excess, z_bar, outer, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)

    return endpoint(c[0] - half), endpoint(c[0] + half)
