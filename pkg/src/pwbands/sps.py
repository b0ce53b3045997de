"""Sign-perturbed sums confidence ellipsoids for kernel ridge regression.

The regularised least-squares problem is written as ordinary least squares
in the coefficient vector theta, ||v - Phi theta||^2. Randomly flipping the
signs of residual rows gives m - 1 perturbed normal equations; each defines a
quadratic constraint set whose largest value of (theta - theta_hat)^T R
(theta - theta_hat) is gamma_i. The q-th largest gamma_i is the radius of an
ellipsoid that contains the exact SPS region.

All quadratics are handled in whitened coordinates xi = S V^T (theta -
theta_hat) / sqrt(n), with Phi = U S V^T a thin SVD, which keeps the kernel
Gramian's poor conditioning out of the computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDesign, InvalidParams, NoStrictlyFeasiblePoint, ValidationError
from .convex import QuadraticForm, qcqp_max
from .kernel import KernelParams, check_distinct, cross_kernel, psd_sqrt
from .norm_bounds import check_risk
from .rng import rng_stream

PERTURB_MODES = ("first-d", "all")

# singular values of Phi below this fraction of the largest make R singular
_RANK_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class OlsProblem:
    """Least-squares problem ||v - phi theta||^2 with sign-perturbable rows.

    Only the first ``perturbed_rows`` rows are ever sign-flipped; the
    regularisation rows below the ``data_rows`` data rows never are.
    """

    phi: np.ndarray
    v: np.ndarray
    data_rows: int
    perturbed_rows: int
    ridge: float = 0.0
    weights: np.ndarray | None = None
    k1: np.ndarray | None = None

    def __post_init__(self):
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        v = np.asarray(self.v, dtype=float).ravel()
        if phi.shape[0] != v.size:
            raise ValidationError("phi and v disagree in row count")
        if not 1 <= self.perturbed_rows <= self.data_rows <= phi.shape[0]:
            raise ValidationError("need 1 <= perturbed_rows <= data_rows <= rows of phi")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.phi.shape[1]

    @classmethod
    def regression(cls, X, y, perturbed_rows: int | None = None) -> "OlsProblem":
        """Plain linear regression y ~ X theta, scaled by 1/sqrt(n)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        n = X.shape[0]
        p = n if perturbed_rows is None else int(perturbed_rows)
        return cls(X / math.sqrt(n), y / math.sqrt(n), n, p)


def build_ols(xs, ys, d: int, lam: float, weights=None, params: KernelParams = KernelParams(),
              perturb: str = "first-d") -> OlsProblem:
    """OLS form of kernel ridge regression with centres at the first d inputs.

    K1 is the n x d kernel matrix against the first d inputs and K2 its top
    d x d block. ``perturb="first-d"`` flips only the first d residuals;
    ``"all"`` flips all n data residuals (a heuristic variant without the
    finite-sample guarantee, see the README).
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    n = xs.size
    if ys.size != n:
        raise ValidationError("xs and ys differ in length")
    d = int(d)
    if not 1 <= d <= n:
        raise InvalidParams(f"d must satisfy 1 <= d <= n = {n}, got {d}")
    lam = float(lam)
    if not lam > 0:
        raise InvalidParams("lambda must be positive")
    if perturb not in PERTURB_MODES:
        raise InvalidParams(f"perturb must be one of {PERTURB_MODES}")
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.size != n or np.any(~(w > 0)):
        raise InvalidParams("weights must be n positive numbers")
    check_distinct(xs)
    K1 = cross_kernel(xs, xs[:d], params)
    K2 = K1[:d]
    K2 = 0.5 * (K2 + K2.T)
    root = psd_sqrt(K2)
    sw = np.sqrt(w)
    phi = np.vstack([(sw[:, None] * K1) / math.sqrt(n), math.sqrt(lam) * root])
    v = np.concatenate([sw * ys / math.sqrt(n), np.zeros(d)])
    rows = d if perturb == "first-d" else n
    return OlsProblem(phi, v, n, rows, lam, w, K1)


@dataclass(frozen=True)
class SpsConfig:
    m: int = 20
    q: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.m, (int, np.integer)) and isinstance(self.q, (int, np.integer))):
            raise InvalidParams("m and q must be integers")
        if self.m < 2 or not 1 <= self.q < self.m:
            raise InvalidParams(f"need m >= 2 and 1 <= q < m, got m={self.m}, q={self.q}")
        if int(self.seed) < 0:
            raise InvalidParams("seed must be nonnegative")

    @property
    def risk(self) -> float:
        return self.q / self.m

    @classmethod
    def from_risk(cls, beta: float, seed: int = 0) -> "SpsConfig":
        """m = max(20, ceil(2/beta)), q = largest integer with q/m <= beta (at least 1)."""
        beta = check_risk(beta, "beta")
        m = max(20, math.ceil(2.0 / beta - 1e-9))
        q = math.floor(beta * m)
        while (q + 1) / m <= beta:
            q += 1
        while q > 1 and q / m > beta:
            q -= 1
        return cls(m, max(1, q), seed)


def signs(config: SpsConfig, index: int, rows: int) -> np.ndarray:
    """The +-1 signs of perturbation ``index`` (1..m-1) on ``rows`` rows."""
    rng = rng_stream(config.seed, index)
    return np.where(rng.random(rows) < 0.5, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class ConfidenceEllipsoid:
    """{theta : (theta - center)^T R (theta - center) <= radius} with R = Phi^T Phi / n.

    R is kept as the thin SVD Phi = U S V^T. ``radius`` is ``inf`` when the
    ellipsoid is unbounded; ``empty`` marks an empty region. ``fitted`` is
    Phi theta_hat and ``row_scale`` the factor sqrt(w_k / n) relating data
    row k of Phi to the kernel row of input k.
    """

    center: np.ndarray
    radius: float
    risk: float
    singular_values: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    data_rows: int
    fitted: np.ndarray
    row_scale: np.ndarray | None = None
    gammas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    empty: bool = False

    @property
    def unbounded(self) -> bool:
        return (not self.empty) and math.isinf(self.radius)

    @property
    def shape(self) -> np.ndarray:
        Vt, s = self.right_vectors, self.singular_values
        R = (Vt.T * (s * s)) @ Vt / self.data_rows
        return 0.5 * (R + R.T)

    def inverse_quad(self, rows) -> np.ndarray:
        """phi^T R^{-1} phi for each row phi."""
        s = self.singular_values
        if s[-1] <= _RANK_RTOL * s[0]:
            raise DegenerateDesign("R is numerically singular")
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        z = (rows @ self.right_vectors.T) / s
        return self.data_rows * np.sum(z * z, axis=1)

    def quad(self, thetas) -> np.ndarray:
        """(theta - center)^T R (theta - center) for each row theta."""
        t = np.atleast_2d(np.asarray(thetas, dtype=float)) - self.center
        z = (t @ self.right_vectors.T) * self.singular_values
        return np.sum(z * z, axis=1) / self.data_rows

    def contains(self, thetas, rtol: float = 1e-9) -> np.ndarray:
        if self.empty:
            return np.zeros(np.atleast_2d(thetas).shape[0], dtype=bool)
        return self.quad(thetas) <= self.radius * (1.0 + rtol) + rtol


@dataclass(frozen=True, eq=False)
class _Whitened:
    U: np.ndarray
    s: np.ndarray
    Vt: np.ndarray
    center: np.ndarray
    fitted: np.ndarray
    residual: np.ndarray


def _whiten(problem: OlsProblem) -> _Whitened:
    U, s, Vt = np.linalg.svd(problem.phi, full_matrices=False)
    if s.size == 0 or not s[0] > 0 or not np.all(np.isfinite(s)):
        raise DegenerateDesign("design matrix is zero or not finite")
    coef = U.T @ problem.v
    fitted = U @ coef
    # minimum-norm centre; directions with negligible singular values only
    # move theta, never Phi theta, and are dropped
    keep = s > np.finfo(float).eps * s[0] * max(problem.phi.shape)
    center = Vt[keep].T @ (coef[keep] / s[keep])
    return _Whitened(U, s, Vt, center, fitted, problem.v - fitted)


def _perturbed_terms(problem: OlsProblem, w: _Whitened, g: np.ndarray):
    """B = U^T G U and b = U^T G e / sqrt(n) for the sign vector g."""
    full = np.ones(problem.phi.shape[0])
    full[: problem.perturbed_rows] = g
    GU = full[:, None] * w.U
    B = w.U.T @ GU
    B = 0.5 * (B + B.T)
    b = GU.T @ w.residual / math.sqrt(problem.data_rows)
    return B, b


def sps_ellipsoid(problem: OlsProblem, config: SpsConfig) -> ConfidenceEllipsoid:
    w = _whiten(problem)
    p = problem.dim
    objective = QuadraticForm(np.eye(p), np.zeros(p), 0.0)
    gammas = np.empty(config.m - 1)
    for i in range(1, config.m):
        B, b = _perturbed_terms(problem, w, signs(config, i, problem.perturbed_rows))
        # ||xi||^2 <= ||b - B xi||^2
        constraint = QuadraticForm(np.eye(p) - B @ B, B @ b, -float(b @ b))
        try:
            # I - B^2 is a difference of O(1) terms; judge its eigenvalues on that scale
            gammas[i - 1] = qcqp_max(objective, constraint, scale=1.0 + float(np.linalg.norm(B, 2)) ** 2)
        except NoStrictlyFeasiblePoint:
            # the constraint set collapses to xi = 0
            gammas[i - 1] = 0.0
    radius = float(np.sort(gammas)[::-1][config.q - 1])
    row_scale = None
    if problem.weights is not None:
        row_scale = np.sqrt(problem.weights / problem.data_rows)
    return ConfidenceEllipsoid(w.center, radius, config.risk, w.s, w.Vt, w.U, problem.data_rows,
                               w.fitted, row_scale, gammas)


def exact_region_contains(problem: OlsProblem, config: SpsConfig, thetas) -> np.ndarray:
    """Membership of each theta in the exact SPS region (testing aid).

    theta is accepted when at least q of the m - 1 perturbed statistics
    ||S_i(theta)||^2 are >= the reference ||S_0(theta)||^2, i.e. the reference
    is not among the q largest. Ties favour acceptance.
    """
    w = _whiten(problem)
    t = np.atleast_2d(np.asarray(thetas, dtype=float)) - w.center
    xi = (t @ w.Vt.T) * w.s / math.sqrt(problem.data_rows)
    s0 = np.sum(xi * xi, axis=1)
    count = np.zeros(xi.shape[0], dtype=int)
    for i in range(1, config.m):
        B, b = _perturbed_terms(problem, w, signs(config, i, problem.perturbed_rows))
        r = b[None, :] - xi @ B
        si = np.sum(r * r, axis=1)
        count += si >= s0 * (1.0 - 1e-12)
    return count >= config.q


@dataclass(frozen=True, eq=False)
class ObservedIntervals:
    lowers: np.ndarray
    uppers: np.ndarray
    risk: float

    @property
    def empty(self) -> bool:
        return bool(np.all(self.lowers == 1.0) and np.all(self.uppers == -1.0))

    def __len__(self):
        return self.lowers.size


def observed_intervals(ell: ConfidenceEllipsoid, k1) -> ObservedIntervals:
    """[phi_k^T theta_hat -+ sqrt(r phi_k^T R^{-1} phi_k)] for the first d rows of K1.

    When phi_k is (a multiple of) data row k of the design, as for the kernel
    problems of ``build_ols``, phi_k^T R^{-1} phi_k = n^2 ||U_k||^2 / w_k and
    phi_k^T theta_hat is the rescaled fitted value. This avoids dividing by
    the small singular values of the badly conditioned kernel design.
    """
    d = ell.center.size
    rows = np.atleast_2d(np.asarray(k1, dtype=float))[:d]
    if ell.empty:
        return ObservedIntervals(np.ones(d), -np.ones(d), ell.risk)
    if ell.unbounded:
        return ObservedIntervals(np.full(d, -np.inf), np.full(d, np.inf), ell.risk)
    phi_rows = None
    if ell.row_scale is not None and rows.shape[0] <= ell.row_scale.size:
        scale = ell.row_scale[: rows.shape[0]]
        U = ell.left_vectors[: rows.shape[0]]
        rebuilt = (U * ell.singular_values) @ ell.right_vectors
        if np.allclose(rows * scale[:, None], rebuilt, rtol=0.0,
                       atol=1e-10 * ell.singular_values[0]):
            phi_rows = (U, scale)
    if phi_rows is not None:
        U, scale = phi_rows
        n = ell.data_rows
        mid = ell.fitted[: U.shape[0]] / scale
        iq = np.sum(U * U, axis=1) / (scale * scale) * n
    else:
        mid = rows @ ell.center
        iq = ell.inverse_quad(rows)
    half = np.sqrt(ell.radius * iq)
    return ObservedIntervals(mid - half, mid + half, ell.risk)
