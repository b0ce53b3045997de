"""Paley-Wiener (sinc) kernel and the dense Gram-matrix algebra built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import DuplicateInputs, IllConditioned, InvalidParams, NotPSD

# |z - s| at or below this uses the Taylor expansion of sinc
DIAGONAL_SWITCH = 1e-7
# inputs closer than this are treated as the same point
SEPARATION_TOL = 1e-9
# Cholesky pivots below PIVOT_RTOL * (largest diagonal) are rejected
PIVOT_RTOL = 1e-12


@dataclass(frozen=True)
class KernelParams:
    """Band limit ``eta`` (radians per unit input) of the Paley-Wiener space."""

    eta: float = 30.0

    def __post_init__(self):
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise InvalidParams(f"eta must be a positive finite number, got {self.eta!r}")

    @property
    def diag(self) -> float:
        """k(z, z) = eta / pi."""
        return self.eta / math.pi


def kernel(z, s, params: KernelParams) -> np.ndarray:
    """Vectorised k(z, s) = sin(eta (z - s)) / (pi (z - s)).

    Broadcasts ``z`` against ``s`` with numpy rules. Near the diagonal the
    two-term Taylor series eta/pi * (1 - (eta h)^2 / 6) is used instead of
    the closed form.
    """
    h = np.subtract(z, s, dtype=float)
    eta = params.eta
    near = np.abs(h) <= DIAGONAL_SWITCH
    safe = np.where(near, 1.0, h)
    out = np.sin(eta * safe) / (math.pi * safe)
    if np.any(near):
        taylor = (eta / math.pi) * (1.0 - (eta * h) ** 2 / 6.0)
        out = np.where(near, taylor, out)
    return out


def kernel_eval(z: float, s: float, params: KernelParams) -> float:
    return float(kernel(z, s, params))


def cross_kernel(a, b, params: KernelParams) -> np.ndarray:
    """Matrix with entries k(a_i, b_j)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    return kernel(a[:, None], b[None, :], params)


def check_distinct(inputs, tol: float = SEPARATION_TOL) -> None:
    x = np.sort(np.asarray(inputs, dtype=float).ravel())
    if x.size > 1:
        gaps = np.diff(x)
        i = int(np.argmin(gaps))
        if gaps[i] <= tol:
            raise DuplicateInputs(
                f"inputs {x[i]!r} and {x[i + 1]!r} coincide within {tol:g}")


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Kernel matrix K_ij = k(x_i, x_j) together with the inputs it came from.

    The Cholesky factor is computed lazily; large Paley-Wiener Gramians are
    numerically singular in double precision and several callers only need
    the entries.
    """

    entries: np.ndarray
    inputs: np.ndarray
    params: KernelParams

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor; raises IllConditioned on a small pivot."""
        return cholesky_checked(self.entries, self.params.diag)

    def is_positive_definite(self) -> bool:
        try:
            self.cholesky
        except IllConditioned:
            return False
        return True


def gram(inputs, params: KernelParams) -> GramMatrix:
    x = np.asarray(inputs, dtype=float).ravel()
    check_distinct(x)
    K = cross_kernel(x, x, params)
    # exact symmetry; the kernel is already symmetric bit-for-bit but the
    # diagonal comes from the Taylor branch
    K = 0.5 * (K + K.T)
    x.setflags(write=False)
    K.setflags(write=False)
    return GramMatrix(K, x, params)


def cholesky_checked(M: np.ndarray, scale: float | None = None) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if scale is None:
        scale = float(np.max(np.diag(M))) if M.size else 1.0
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise IllConditioned("matrix is not numerically positive definite") from exc
    pivots = np.diag(L) ** 2
    if pivots.size and pivots.min() < PIVOT_RTOL * scale:
        raise IllConditioned(
            f"Cholesky pivot {pivots.min():.3e} below {PIVOT_RTOL:g} * {scale:.6g}")
    return L


def solve_spd(G, rhs) -> np.ndarray:
    """Solve G w = rhs for symmetric positive definite G (matrix or GramMatrix)."""
    if isinstance(G, GramMatrix):
        L = G.cholesky
    else:
        L = cholesky_checked(G)
    return sla.cho_solve((L, True), np.asarray(rhs, dtype=float))


def psd_sqrt(M, rtol: float = 1e-10) -> np.ndarray:
    """Principal square root of a symmetric positive semi-definite matrix.

    Eigenvalues down to ``-rtol * ||M||_2`` are treated as roundoff and
    clipped to zero; anything more negative raises NotPSD.
    """
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(M)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[0] < -rtol * scale:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is below -{rtol:g} * {scale:.3e}")
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return 0.5 * (root + root.T)
