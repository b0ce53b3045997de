"""Confidence intervals and bands when the outputs carry symmetric noise.

Simultaneous intervals [nu_k, mu_k] for f at the first d inputs come from
the sign-perturbed sums ellipsoid. Together with a norm bound tau they
constrain the values (z_0, ..., z_d) of f at (x0, x_1, ..., x_d) to the set

    z^T K0^{-1} z <= tau,  nu_k <= z_k <= mu_k,

and the interval at x0 is the range of z_0 over that set.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .band import EMPTY, EMPTY_LOWER, EMPTY_UPPER, Band, IntervalPair, check_grid
from .band_free import collision_index
from .convex import BoxedEllipsoid, linear_extent
from .errors import Infeasible, InvalidParams, QueryCollision, ValidationError
from .kernel import KernelParams, check_distinct, cross_kernel
from .norm_bounds import NormBudget, check_risk, noisy_bound
from .sps import (
    PERTURB_MODES,
    ObservedIntervals,
    SpsConfig,
    build_ols,
    observed_intervals,
    sps_ellipsoid,
)


@dataclass(frozen=True)
class NoisyBandConfig:
    """Settings of the noisy band. ``d=None`` means ceil(sqrt(n)).

    ``m`` and ``q`` default to the policy of ``SpsConfig.from_risk(beta)``;
    when both are given, q/m must not exceed beta.
    """

    alpha: float = 0.05
    beta: float = 0.05
    d: int | None = None
    lam: float = 0.1
    weights: tuple | None = None
    seed: int = 0
    m: int | None = None
    q: int | None = None
    delta0: float = 0.0
    perturb: str = "first-d"
    clip: bool = False

    def __post_init__(self):
        a = check_risk(self.alpha, "alpha")
        b = check_risk(self.beta, "beta")
        if not a + b < 1.0:
            raise InvalidParams("alpha + beta must be below 1")
        if not self.lam > 0:
            raise InvalidParams("lambda must be positive")
        if not self.delta0 >= 0:
            raise InvalidParams("delta0 must be nonnegative")
        if self.d is not None and self.d < 1:
            raise InvalidParams("d must be at least 1")
        if self.perturb not in PERTURB_MODES:
            raise InvalidParams(f"perturb must be one of {PERTURB_MODES}")
        if (self.m is None) != (self.q is None):
            raise InvalidParams("give both m and q, or neither")
        if self.m is not None:
            cfg = SpsConfig(int(self.m), int(self.q), int(self.seed))
            if cfg.risk > self.beta * (1 + 1e-12):
                raise InvalidParams(f"q/m = {cfg.risk:g} exceeds beta = {self.beta:g}")

    @classmethod
    def from_total_risk(cls, total: float, **kwargs) -> "NoisyBandConfig":
        """Even split alpha = beta = total / 2."""
        total = check_risk(total, "total risk")
        return cls(alpha=total / 2, beta=total / 2, **kwargs)

    def resolve_d(self, n: int) -> int:
        d = math.ceil(math.sqrt(n)) if self.d is None else int(self.d)
        if d > n:
            raise InvalidParams(f"d = {d} exceeds n = {n}")
        return d

    def sps_config(self) -> SpsConfig:
        if self.m is None:
            return SpsConfig.from_risk(self.beta, int(self.seed))
        return SpsConfig(int(self.m), int(self.q), int(self.seed))


def interval_at_noisy(xs_d, intervals: ObservedIntervals, x0: float, budget: NormBudget,
                      params: KernelParams) -> IntervalPair:
    """Range of f(x0) over functions with norm^2 <= tau passing through the boxes."""
    if intervals.empty:
        return EMPTY
    xs_d = np.asarray(xs_d, dtype=float).ravel()
    if xs_d.size != len(intervals):
        raise ValidationError("need one observed interval per input")
    k = collision_index(xs_d, x0)
    if k is not None:
        raise QueryCollision(f"query {x0!r} coincides with observed input {xs_d[k]!r}")
    tau = budget.value
    if math.isinf(tau):
        return IntervalPair(-math.inf, math.inf)
    pts = np.concatenate([[float(x0)], xs_d])
    K0 = cross_kernel(pts, pts, params)
    problem = BoxedEllipsoid(K0, tau, intervals.lowers, intervals.uppers)
    try:
        lo, hi = linear_extent(problem)
    except Infeasible:
        return EMPTY
    return IntervalPair(float(lo), float(hi))


def _clip_unit(lo, hi):
    lo = np.maximum(lo, -1.0)
    hi = np.minimum(hi, 1.0)
    dead = lo > hi
    return np.where(dead, EMPTY_LOWER, lo), np.where(dead, EMPTY_UPPER, hi)


def band_noisy(xs, ys, grid, config: NoisyBandConfig, params: KernelParams,
               meta: dict | None = None) -> Band:
    """Band with total risk alpha + beta from noisy observations."""
    xs = np.array(xs, dtype=float).ravel()
    ys = np.array(ys, dtype=float).ravel()
    if xs.size != ys.size:
        raise ValidationError("xs and ys differ in length")
    check_distinct(xs)
    grid = check_grid(grid)
    n = xs.size
    d = config.resolve_d(n)
    sps_cfg = config.sps_config()
    weights = None if config.weights is None else np.asarray(config.weights, dtype=float)
    problem = build_ols(xs, ys, d, config.lam, weights, params, config.perturb)
    ell = sps_ellipsoid(problem, sps_cfg)
    obs = observed_intervals(ell, problem.k1)
    xs_d = xs[:d]

    lo = np.empty(grid.size)
    hi = np.empty(grid.size)
    tau = math.nan
    if obs.empty:
        lo[:], hi[:] = EMPTY_LOWER, EMPTY_UPPER
    else:
        budget = noisy_bound(obs, config.alpha, config.delta0)
        tau = budget.value
        for i, x0 in enumerate(grid):
            k = collision_index(xs_d, x0)
            if k is not None:
                lo[i], hi[i] = obs.lowers[k], obs.uppers[k]
            else:
                lo[i], hi[i] = interval_at_noisy(xs_d, obs, x0, budget, params)
        if config.clip:
            live = ~((lo == EMPTY_LOWER) & (hi == EMPTY_UPPER))
            lo[live], hi[live] = _clip_unit(lo[live], hi[live])

    info = {
        "algorithm": "noisy",
        "eta": params.eta,
        "n": int(n),
        "alpha": config.alpha,
        "beta": config.beta,
        "beta_achieved": sps_cfg.risk,
        "d": d,
        "m": sps_cfg.m,
        "q": sps_cfg.q,
        "lambda": config.lam,
        "seed": int(config.seed),
        "delta0": config.delta0,
        "tau": tau,
        "radius": ell.radius,
        "perturb": config.perturb,
        "clip": bool(config.clip),
        "observed_lower": obs.lowers.tolist(),
        "observed_upper": obs.uppers.tolist(),
    }
    if meta:
        info.update(meta)
    return Band(grid, lo, hi, risk=config.alpha + config.beta, meta=info)


def config_dict(config: NoisyBandConfig) -> dict:
    return asdict(config)
