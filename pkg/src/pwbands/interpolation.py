"""Minimum-norm interpolation in the Paley-Wiener space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import IllConditioned, ValidationError
from .kernel import KernelParams, cholesky_checked, cross_kernel, gram


@dataclass(frozen=True, eq=False)
class Interpolant:
    """f(x) = sum_k coefficients[k] * k(x, centers[k])."""

    coefficients: np.ndarray
    centers: np.ndarray
    params: KernelParams
    # y^T K^{-1} y from the construction, when known
    _norm_sq: float | None = None

    def __post_init__(self):
        if self.coefficients.shape != self.centers.shape:
            raise ValidationError("coefficients and centers must have the same length")

    def __call__(self, x):
        return evaluate(self, x)


def min_norm_interpolant(xs, ys, params: KernelParams) -> Interpolant:
    xs = np.array(xs, dtype=float).ravel()
    ys = np.array(ys, dtype=float).ravel()
    if xs.size == 0 or xs.size != ys.size:
        raise ValidationError("need the same nonzero number of inputs and outputs")
    K = gram(xs, params)
    L = K.cholesky
    # alpha = K^{-1} y through the triangular halves; ||L^{-1} y||^2 is the norm
    u = sla.solve_triangular(L, ys, lower=True)
    alpha = sla.solve_triangular(L.T, u, lower=False)
    return Interpolant(alpha, xs, params, float(u @ u))


def evaluate(f: Interpolant, x):
    x = np.asarray(x, dtype=float)
    vals = cross_kernel(x.ravel(), f.centers, f.params) @ f.coefficients
    return float(vals[0]) if x.ndim == 0 else vals.reshape(x.shape)


def norm_sq(f: Interpolant) -> float:
    """RKHS norm squared alpha^T K alpha.

    Uses ||L^T alpha||^2 with K = L L^T; forming K alpha first loses most of
    the digits when alpha is large.
    """
    if f._norm_sq is not None:
        return f._norm_sq
    a = f.coefficients
    if not np.any(a):
        return 0.0
    K = cross_kernel(f.centers, f.centers, f.params)
    try:
        L = cholesky_checked(K, f.params.diag)
    except IllConditioned:
        return float(max(a @ (K @ a), 0.0))
    t = L.T @ a
    return float(t @ t)
