"""Distribution-free confidence bands for band-limited functions."""

__version__ = "0.1.0"

from .band import EMPTY, Band, IntervalPair, read_band_csv, uniform_grid, write_band
from .band_free import band as band_noise_free
from .band_free import interval_at
from .band_noisy import NoisyBandConfig, band_noisy, interval_at_noisy
from .convex import BoxedEllipsoid, QuadraticForm, linear_extent, min_quad_over_box, qcqp_max
from .errors import *  # noqa: F401,F403
from .harness import (
    CoverageConfig,
    CoverageReport,
    Dataset,
    NoiseSpec,
    TrueFunction,
    coverage_experiment,
    generate_true_function,
    sample_dataset,
    tail_energy,
    uniformize,
)
from .interpolation import Interpolant, evaluate, min_norm_interpolant, norm_sq
from .kernel import GramMatrix, KernelParams, gram, kernel, psd_sqrt
from .norm_bounds import NormBudget, noise_free_bound, noisy_bound
from .rng import rng_stream
from .sps import (
    ConfidenceEllipsoid,
    ObservedIntervals,
    OlsProblem,
    SpsConfig,
    build_ols,
    observed_intervals,
    sps_ellipsoid,
)
