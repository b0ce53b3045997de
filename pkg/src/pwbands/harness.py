"""Synthetic targets, datasets and Monte Carlo coverage experiments.

Targets are finite sinc expansions f(x) = sum_k w_k k(x, c_k) with random
centres in [0, 1] and weights in [-1, 1], rescaled so that max |f| <= 1 on a
fine grid. Their RKHS norm is exact: ||f||^2 = w^T K w.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .band import uniform_grid, write_band
from .band_free import band as band_noise_free
from .band_noisy import NoisyBandConfig, band_noisy
from .errors import InvalidParams, NonMonotoneCdf, PWBandsError, ValidationError
from .kernel import KernelParams, cross_kernel
from .norm_bounds import check_risk
from .rng import rng_stream

NORMALISATION_GRID = 10_000
_TAIL_SPAN = 50.0
_PANEL = 0.25
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True, eq=False)
class TrueFunction:
    centers: np.ndarray
    coeffs: np.ndarray
    params: KernelParams
    scale: float = 1.0

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).ravel()
        coeffs = np.asarray(self.coeffs, dtype=float).ravel()
        if centers.size != coeffs.size:
            raise ValidationError("centers and coeffs differ in length")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def weights(self) -> np.ndarray:
        return self.coeffs * self.scale

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = cross_kernel(np.atleast_1d(x).ravel(), self.centers, self.params) @ self.weights
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def norm_sq(self) -> float:
        """Exact squared RKHS norm w^T K w."""
        w = self.weights
        return float(w @ cross_kernel(self.centers, self.centers, self.params) @ w)

    @classmethod
    def normalised(cls, centers, coeffs, params: KernelParams) -> "TrueFunction":
        """Rescale so that max |f| <= 1 on a 10^4 point grid of [0, 1]."""
        raw = cls(centers, coeffs, params, 1.0)
        centers, coeffs = raw.centers, raw.coeffs
        peak = float(np.max(np.abs(raw(np.linspace(0.0, 1.0, NORMALISATION_GRID)))))
        scale = 1.0 / peak if peak > 1.0 else 1.0
        return cls(centers, coeffs, params, scale)


def generate_true_function(seed, params: KernelParams = KernelParams(), N: int = 20) -> TrueFunction:
    """Random target from the stream ``seed`` (an int or an address tuple)."""
    rng = rng_stream(seed)
    centers = rng.uniform(0.0, 1.0, N)
    coeffs = rng.uniform(-1.0, 1.0, N)
    return TrueFunction.normalised(centers, coeffs, params)


def _gauss_legendre(fn, a: float, b: float, panel: float = _PANEL) -> float:
    count = max(1, math.ceil((b - a) / panel))
    edges = np.linspace(a, b, count + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mids[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return float(weights @ fn(nodes))


def tail_quadrature(f: TrueFunction, left: float, right: float) -> float:
    """Quadrature of f^2 over [left, 0] and [1, right]."""
    sq = lambda x: f(x) ** 2  # noqa: E731
    return _gauss_legendre(sq, left, 0.0) + _gauss_legendre(sq, 1.0, right)


def tail_energy(f: TrueFunction) -> float:
    """Upper estimate of the integral of f^2 outside [0, 1].

    Quadrature over [-50, 0] and [1, 51] plus a bound on the rest: for x
    beyond the quadrature range, |pi f(x)| <= (|sum_k w_k e^{-i eta c_k}| +
    sum_k |w_k| / 50) / |x|, whose square integrates in closed form.
    """
    w = f.weights
    if not np.any(w):
        return 0.0
    eta = f.params.eta
    phase = abs(complex(np.sum(w * np.exp(-1j * eta * f.centers))))
    spread = float(np.sum(np.abs(w)))
    env = (phase + spread / _TAIL_SPAN) ** 2 / math.pi**2
    remainder = env / (_TAIL_SPAN + 1.0) + env / _TAIL_SPAN
    return tail_quadrature(f, -_TAIL_SPAN, 1.0 + _TAIL_SPAN) + remainder


@dataclass(frozen=True)
class NoiseSpec:
    family: str = "none"
    location: float = 0.0
    scale: float = 1.0

    FAMILIES = ("none", "laplace", "gaussian", "uniform")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise InvalidParams(f"noise family must be one of {self.FAMILIES}")
        if self.location != 0.0:
            raise InvalidParams("noise must be centred (location 0)")
        if not self.scale > 0:
            raise InvalidParams("noise scale must be positive")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.family == "none":
            return np.zeros(n)
        if self.family == "laplace":
            return rng.laplace(0.0, self.scale, n)
        if self.family == "gaussian":
            return rng.normal(0.0, self.scale, n)
        return rng.uniform(-self.scale, self.scale, n)


@dataclass(frozen=True, eq=False)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray

    def __len__(self):
        return self.xs.size


def sample_dataset(f: TrueFunction, n: int, noise: NoiseSpec = NoiseSpec(), seed=0) -> Dataset:
    if n < 1:
        raise InvalidParams("n must be at least 1")
    rng = rng_stream(seed)
    xs = rng.uniform(0.0, 1.0, n)
    eps = noise.sample(rng, n)
    return Dataset(xs, f(xs) + eps)


def uniformize(raw_inputs, cdf, checks: int = 1000) -> np.ndarray:
    """Map inputs through their cdf F; F must be strictly increasing on their range."""
    raw = np.asarray(raw_inputs, dtype=float).ravel()
    out = np.asarray(cdf(raw), dtype=float)
    if np.any(out < 0) or np.any(out > 1) or np.any(~np.isfinite(out)):
        raise ValidationError("cdf values must lie in [0, 1]")
    if raw.size > 1 and raw.min() < raw.max():
        probe = np.union1d(np.linspace(raw.min(), raw.max(), checks), raw)
        vals = np.asarray(cdf(probe), dtype=float)
        if np.any(np.diff(vals) <= 0):
            raise NonMonotoneCdf("cdf is not strictly increasing over the inputs")
    return out


ALGORITHMS = ("noise-free", "noisy")


@dataclass(frozen=True)
class CoverageConfig:
    algorithm: str = "noise-free"
    trials: int = 500
    n: int = 10
    eta: float = 30.0
    alpha: float = 0.1
    beta: float = 0.05
    d: int | None = None
    lam: float = 0.1
    m: int | None = None
    q: int | None = None
    grid: int = 512
    seed: int = 0
    centers: int = 20
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    perturb: str = "first-d"
    method: str = "direct"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidParams(f"algorithm must be one of {ALGORITHMS}")
        if self.trials < 1:
            raise InvalidParams("trials must be at least 1")
        if self.n < 1 or self.grid < 2 or self.centers < 1:
            raise InvalidParams("n, grid and centers must be positive (grid >= 2)")
        check_risk(self.alpha, "alpha")
        if self.algorithm == "noisy":
            self.band_config(0.0)  # validates the noisy settings

    @property
    def total_risk(self) -> float:
        return self.alpha + (self.beta if self.algorithm == "noisy" else 0.0)

    def band_config(self, delta0: float) -> NoisyBandConfig:
        return NoisyBandConfig(alpha=self.alpha, beta=self.beta, d=self.d, lam=self.lam,
                               seed=0, m=self.m, q=self.q, delta0=delta0, perturb=self.perturb)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CoverageReport:
    trials: int
    successes: int
    errors: int
    empirical_reliability: float
    guarantee: float
    config: dict
    mean_width: list
    error_messages: list

    def to_dict(self) -> dict:
        widths = np.asarray(self.mean_width, dtype=float)
        finite = widths[np.isfinite(widths)]
        return {
            "trials": self.trials,
            "successes": self.successes,
            "errors": self.errors,
            "empirical_reliability": self.empirical_reliability,
            "guarantee": self.guarantee,
            "config": self.config,
            "width_summary": {
                "finite_trials": int(finite.size),
                "mean": float(finite.mean()) if finite.size else None,
                "median": float(np.median(finite)) if finite.size else None,
                "max": float(finite.max()) if finite.size else None,
            },
            "mean_width": [w if math.isfinite(w) else None for w in self.mean_width],
            "error_messages": self.error_messages,
        }

    def summary(self) -> str:
        return (f"trials={self.trials} successes={self.successes} errors={self.errors} "
                f"reliability={self.empirical_reliability:.4f} guarantee>={self.guarantee:.4f}")


def run_trial(config: CoverageConfig, trial: int, bands_dir: str | None = None) -> dict:
    """One coverage trial; streams (seed, trial, 0..2) drive target, data and signs."""
    params = KernelParams(config.eta)
    f = generate_true_function((config.seed, trial, 0), params, config.centers)
    data = sample_dataset(f, config.n, config.noise, (config.seed, trial, 1))
    delta0 = tail_energy(f)
    grid = uniform_grid(config.grid)
    try:
        if config.algorithm == "noise-free":
            band = band_noise_free(data.xs, data.ys, grid, config.alpha, delta0, params,
                                   method=config.method, meta={"trial": trial})
        else:
            sps_seed = int(rng_stream(config.seed, trial, 2).integers(0, 2**63 - 1))
            cfg = config.band_config(delta0)
            cfg = NoisyBandConfig(**{**asdict(cfg), "seed": sps_seed})
            band = band_noisy(data.xs, data.ys, grid, cfg, params, meta={"trial": trial})
    except PWBandsError as exc:
        return {"success": False, "error": f"{type(exc).__name__}: {exc}", "width": math.nan}
    success = bool(np.all(band.covers(f(grid))))
    if bands_dir is not None:
        write_band(band, Path(bands_dir) / f"trial_{trial:05d}.csv")
    return {"success": success, "error": None, "width": float(np.mean(band.widths()))}


def _run_chunk(args):
    config, trials, bands_dir = args
    return [run_trial(config, t, bands_dir) for t in trials]


def coverage_experiment(config: CoverageConfig, threads: int | None = None,
                        bands_dir=None) -> CoverageReport:
    """Monte Carlo estimate of simultaneous coverage on the uniform grid."""
    if bands_dir is not None:
        Path(bands_dir).mkdir(parents=True, exist_ok=True)
        bands_dir = str(bands_dir)
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(1, int(threads))
    trial_ids = list(range(config.trials))
    if threads == 1 or config.trials == 1:
        results = _run_chunk((config, trial_ids, bands_dir))
    else:
        chunks = [trial_ids[i::threads] for i in range(threads)]
        chunks = [c for c in chunks if c]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_run_chunk, [(config, c, bands_dir) for c in chunks]))
        by_id = {}
        for c, part in zip(chunks, parts):
            by_id.update(zip(c, part))
        results = [by_id[t] for t in trial_ids]
    successes = sum(r["success"] for r in results)
    errors = [f"trial {t}: {r['error']}" for t, r in enumerate(results) if r["error"]]
    return CoverageReport(
        trials=config.trials,
        successes=successes,
        errors=len(errors),
        empirical_reliability=successes / config.trials,
        guarantee=1.0 - config.total_risk,
        config=config.to_dict(),
        mean_width=[r["width"] for r in results],
        error_messages=errors,
    )
