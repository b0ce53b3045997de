"""Confidence intervals and bands when the outputs are observed without noise.

For a query x0 the admissible values y0 are those for which the minimum-norm
interpolant of the data extended by (x0, y0) has squared norm at most kappa.
With the inverse of the extended Gramian partitioned as [[c, b^T], [b, A]]
this is the convex quadratic inequality

    c y0^2 + 2 (b^T y) y0 + y^T A y - kappa <= 0,

whose two roots are the interval endpoints.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .band import EMPTY, EMPTY_LOWER, EMPTY_UPPER, Band, IntervalPair, check_grid
from .errors import IllConditioned, QueryCollision, ValidationError
from .kernel import (
    PIVOT_RTOL,
    SEPARATION_TOL,
    KernelParams,
    check_distinct,
    cholesky_checked,
    cross_kernel,
    gram,
    kernel,
)
from .norm_bounds import NormBudget, noise_free_bound

_CHUNK = 256


def _as_data(xs, ys):
    xs = np.array(xs, dtype=float).ravel()
    ys = np.array(ys, dtype=float).ravel()
    if xs.size != ys.size:
        raise ValidationError("xs and ys differ in length")
    check_distinct(xs)
    return xs, ys


def collision_index(xs, x0, tol: float = SEPARATION_TOL) -> int | None:
    """Index of the observed input within ``tol`` of x0, if any."""
    if len(xs) == 0:
        return None
    gaps = np.abs(np.asarray(xs) - x0)
    i = int(np.argmin(gaps))
    return i if gaps[i] <= tol else None


def partition_extended_inverse(xs, x0: float, params: KernelParams):
    """Blocks (c, b, A) of the inverse Gramian over (x0, x_1, ..., x_n)."""
    xs = np.array(xs, dtype=float).ravel()
    check_distinct(xs)
    k = collision_index(xs, x0)
    if k is not None:
        raise QueryCollision(f"query {x0!r} coincides with observed input {xs[k]!r}")
    pts = np.concatenate([[x0], xs])
    K0 = cross_kernel(pts, pts, params)
    L = cholesky_checked(K0, params.diag)
    inv = sla.cho_solve((L, True), np.eye(pts.size))
    inv = 0.5 * (inv + inv.T)
    c = float(inv[0, 0])
    if not c > 0:
        raise IllConditioned("leading entry of the inverse Gramian is not positive")
    return c, inv[1:, 0].copy(), inv[1:, 1:].copy()


def quadratic_interval(a0, b0, c0):
    """Roots of a0 t^2 + b0 t + c0 = 0 (a0 > 0), vectorised.

    Returns (lower, upper) arrays; no real root gives the empty marker.
    Discriminants that are negative by no more than roundoff count as a
    double root.
    """
    a0, b0, c0 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a0, b0, c0)))
    disc = b0 * b0 - 4.0 * a0 * c0
    tol = 1e-12 * np.maximum(1.0, np.maximum(b0 * b0, np.abs(4.0 * a0 * c0)))
    real = disc >= -tol
    sq = np.sqrt(np.where(real, np.maximum(disc, 0.0), 0.0))
    # larger-magnitude root first, the other from Vieta
    q = -0.5 * (b0 + np.where(b0 >= 0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r1 = q / a0
        r2 = np.where(q != 0, c0 / q, r1)
    lo = np.where(real, np.minimum(r1, r2), EMPTY_LOWER)
    hi = np.where(real, np.maximum(r1, r2), EMPTY_UPPER)
    return lo, hi


def _direct_blocks(xs, queries, params: KernelParams):
    """Batched (c, b, A) over many queries by full re-factorisation.

    Also returns a mask of queries whose extended Gramian passed the pivot
    check; blocks for failing queries are left as NaN.
    """
    n, Q = xs.size, queries.size
    pts = np.empty((Q, n + 1))
    pts[:, 0] = queries
    pts[:, 1:] = xs
    K0 = kernel(pts[:, :, None], pts[:, None, :], params)
    L = np.full_like(K0, np.nan)
    try:
        L[:] = np.linalg.cholesky(K0)
    except np.linalg.LinAlgError:
        for q in range(Q):
            try:
                L[q] = np.linalg.cholesky(K0[q])
            except np.linalg.LinAlgError:
                pass
    pivots = np.diagonal(L, axis1=1, axis2=2) ** 2
    ok = np.all(pivots >= PIVOT_RTOL * params.diag, axis=1)
    inv = np.full_like(K0, np.nan)
    if np.any(ok):
        Linv = np.linalg.solve(L[ok], np.broadcast_to(np.eye(n + 1), L[ok].shape))
        inv[ok] = np.swapaxes(Linv, 1, 2) @ Linv
    return inv[:, 0, 0], inv[:, 1:, 0], inv[:, 1:, 1:], ok


def _direct_intervals(xs, ys, queries, kappa, params):
    lo = np.empty(queries.size)
    hi = np.empty(queries.size)
    good = np.ones(queries.size, dtype=bool)
    for start in range(0, queries.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        c, b, A, ok = _direct_blocks(xs, queries[sl], params)
        if np.any(c[ok] <= 0):
            raise IllConditioned("leading entry of the inverse Gramian is not positive")
        b0 = 2.0 * (b @ ys)
        c0 = np.einsum("i,qij,j->q", ys, A, ys) - kappa
        lo[sl], hi[sl] = quadratic_interval(c, b0, c0)
        good[sl] = ok
    if not np.all(good):
        # Pivot below the floor: the data pin f(x0) down almost exactly, so
        # use the outer interval from the data-only factor instead.
        lo[~good], hi[~good] = _schur_intervals(xs, ys, queries[~good], kappa, params)
    return lo, hi


def _schur_intervals(xs, ys, queries, kappa, params):
    """Same intervals through the precomputed factor of K.

    The quadratic reduces to (y0 - fbar(x0))^2 / P(x0)^2 + ||fbar||^2 <= kappa,
    P^2 being the Schur complement k(x0, x0) - k_0^T K^{-1} k_0.  Where P^2 is
    below the pivot floor it cannot be resolved in floating point, so the floor
    itself is used as an upper bound (the interval only gets wider).
    """
    L = gram(xs, params).cholesky
    u = sla.solve_triangular(L, ys, lower=True)
    alpha = sla.solve_triangular(L.T, u, lower=False)
    norm2 = float(u @ u)
    kq = cross_kernel(queries, xs, params)
    V = sla.solve_triangular(L, kq.T, lower=True)
    p2 = np.maximum(params.diag - np.sum(V * V, axis=0), PIVOT_RTOL * params.diag)
    centre = kq @ alpha
    slack = kappa - norm2
    if slack < 0:
        return np.full(queries.size, EMPTY_LOWER), np.full(queries.size, EMPTY_UPPER)
    half = np.sqrt(p2 * slack)
    return centre - half, centre + half


_METHODS = {"direct": _direct_intervals, "schur": _schur_intervals}


def _intervals(xs, ys, queries, kappa, params, method):
    try:
        fn = _METHODS[method]
    except KeyError:
        raise ValidationError(f"unknown method {method!r}; use one of {sorted(_METHODS)}") from None
    lo = np.empty(queries.size)
    hi = np.empty(queries.size)
    free = np.ones(queries.size, dtype=bool)
    for i, x0 in enumerate(queries):
        k = collision_index(xs, x0)
        if k is not None:
            lo[i] = hi[i] = ys[k]
            free[i] = False
    if np.any(free):
        lo[free], hi[free] = fn(xs, ys, queries[free], kappa, params)
    return lo, hi


def interval_at(xs, ys, x0: float, budget: NormBudget, params: KernelParams,
                method: str = "direct") -> IntervalPair:
    xs, ys = _as_data(xs, ys)
    if not np.isfinite(budget.value):
        raise ValidationError("norm budget must be finite")
    lo, hi = _intervals(xs, ys, np.array([float(x0)]), budget.value, params, method)
    pair = IntervalPair(float(lo[0]), float(hi[0]))
    return EMPTY if pair.empty else pair


def band(xs, ys, grid, alpha: float, delta0: float, params: KernelParams,
         method: str = "direct", meta: dict | None = None) -> Band:
    """Confidence band at every grid point with total risk ``alpha``."""
    xs, ys = _as_data(xs, ys)
    grid = check_grid(grid)
    budget = noise_free_bound(ys, alpha, delta0)
    lo, hi = _intervals(xs, ys, grid, budget.value, params, method)
    info = {
        "algorithm": "noise-free",
        "eta": params.eta,
        "n": int(xs.size),
        "alpha": budget.risk,
        "delta0": budget.delta0,
        "kappa": budget.value,
        "method": method,
    }
    if meta:
        info.update(meta)
    return Band(grid, lo, hi, risk=budget.risk, meta=info)
