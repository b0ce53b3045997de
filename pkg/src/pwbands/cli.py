"""Command-line interface: ``pwbands {band-free,band-noisy,coverage,demo}``.

Settings are layered as built-in defaults < ``--config`` JSON file < flags.
Exit codes: 0 success, 2 invalid input or numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .band import uniform_grid, write_band
from .band_free import band as band_noise_free
from .band_noisy import NoisyBandConfig, band_noisy
from .errors import InvalidParams, PWBandsError, ValidationError
from .harness import (
    CoverageConfig,
    NoiseSpec,
    coverage_experiment,
    generate_true_function,
    sample_dataset,
)
from .kernel import KernelParams

DEFAULTS = {
    "band-free": {"eta": 30.0, "alpha": 0.1, "delta0": 0.0, "grid": 512, "method": "direct"},
    "band-noisy": {
        "eta": 30.0, "alpha": None, "beta": None, "risk": 0.1, "d": None, "lambda": 0.1,
        "m": None, "q": None, "seed": 0, "delta0": 0.0, "grid": 512, "perturb": "first-d",
        "clip_unit": False,
    },
    "coverage": {
        "algorithm": "noise-free", "trials": 500, "n": 10, "eta": 30.0, "alpha": 0.1,
        "beta": 0.05, "d": None, "lambda": 0.1, "m": None, "q": None, "grid": 512, "seed": 0,
        "noise": "none", "noise_scale": 0.4, "perturb": "first-d", "threads": None,
        "bands_dir": None,
    },
    "demo": {"n": 100, "eta": 30.0, "seed": 0, "noise": "laplace", "noise_scale": 0.4, "grid": 512},
}

TIMESTAMP_FIELD = "created_at"


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of settings (flags override it)")
    p.add_argument("--eta", type=float, help="band limit of the sinc kernel")
    p.add_argument("--alpha", type=float, help="risk of the norm bound")
    p.add_argument("--beta", type=float, help="risk of the observed intervals")
    p.add_argument("--d", type=int, help="number of observed intervals (default ceil(sqrt(n)))")
    p.add_argument("--lambda", dest="lambda", type=float, help="ridge parameter")
    p.add_argument("--m", type=int, help="number of sign assignments")
    p.add_argument("--q", type=int, help="rank threshold")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--grid", type=int, help="number of uniform grid points on [0, 1]")
    p.add_argument("--delta0", type=float, help="bound on the energy outside [0, 1]")
    p.add_argument("--in", dest="input", help="input CSV with header x,y")
    p.add_argument("--out", help="output path")
    p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    p.add_argument("--clip-unit", dest="clip_unit", action="store_const", const=True,
                   help="clip noisy intervals to [-1, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwbands", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("band-free", help="band from noise-free observations")
    _shared(p)
    p.add_argument("--method", choices=["direct", "schur"])

    p = sub.add_parser("band-noisy", help="band from noisy observations")
    _shared(p)
    p.add_argument("--risk", type=float, help="total risk, split evenly when alpha/beta are unset")
    p.add_argument("--perturb", choices=["first-d", "all"])

    p = sub.add_parser("coverage", help="Monte Carlo coverage experiment")
    _shared(p)
    p.add_argument("--algorithm", choices=["noise-free", "noisy"])
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--noise", choices=list(NoiseSpec.FAMILIES))
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--perturb", choices=["first-d", "all"])
    p.add_argument("--bands-dir", dest="bands_dir", help="also write every trial's band here")

    p = sub.add_parser("demo", help="write a synthetic dataset")
    _shared(p)
    p.add_argument("--n", type=int)
    p.add_argument("--noise", choices=list(NoiseSpec.FAMILIES))
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--truth", help="also write the true function on the grid to this CSV")
    return parser


def effective_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS[args.command])
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        settings.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        settings[key] = value
    return settings


def read_xy(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
            raise ValidationError(f"{path}: expected a header with columns x,y")
        try:
            rows = [(float(r["x"]), float(r["y"])) for r in reader]
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{path}: malformed number ({exc})") from exc
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    data = np.array(rows)
    if np.any(~np.isfinite(data)):
        raise ValidationError(f"{path}: non-finite values")
    if np.any(data[:, 0] < 0) or np.any(data[:, 0] > 1):
        raise ValidationError(f"{path}: inputs must lie in [0, 1]")
    return data[:, 0], data[:, 1]


def write_xy(path, xs, ys, names=("x", "y")) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for a, b in zip(xs, ys):
            w.writerow([format(float(a), ".17g"), format(float(b), ".17g")])


def _stamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _require(settings: dict, *keys: str) -> None:
    for k in keys:
        if settings.get(k) is None:
            raise InvalidParams(f"--{k.replace('_', '-')} is required")


def _check_writable(path) -> None:
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write to {parent}")


def _json_settings(settings: dict) -> dict:
    return {k: v for k, v in sorted(settings.items())}


def cmd_band_free(settings: dict) -> int:
    _require(settings, "input", "out")
    _check_writable(settings["out"])
    xs, ys = read_xy(settings["input"])
    params = KernelParams(float(settings["eta"]))
    grid = uniform_grid(int(settings["grid"]))
    meta = {"config": _json_settings(settings), TIMESTAMP_FIELD: _stamp()}
    band = band_noise_free(xs, ys, grid, settings["alpha"], settings["delta0"], params,
                           method=settings["method"], meta=meta)
    write_band(band, settings["out"])
    return 0


def noisy_config(settings: dict) -> NoisyBandConfig:
    alpha, beta = settings.get("alpha"), settings.get("beta")
    if alpha is None and beta is None:
        alpha = beta = float(settings["risk"]) / 2
    elif alpha is None or beta is None:
        raise InvalidParams("give both --alpha and --beta, or only --risk")
    return NoisyBandConfig(
        alpha=float(alpha), beta=float(beta), d=settings.get("d"), lam=float(settings["lambda"]),
        seed=int(settings["seed"]), m=settings.get("m"), q=settings.get("q"),
        delta0=float(settings["delta0"]), perturb=settings["perturb"],
        clip=bool(settings["clip_unit"]))


def cmd_band_noisy(settings: dict) -> int:
    _require(settings, "input", "out")
    _check_writable(settings["out"])
    xs, ys = read_xy(settings["input"])
    config = noisy_config(settings)
    params = KernelParams(float(settings["eta"]))
    grid = uniform_grid(int(settings["grid"]))
    meta = {"config": _json_settings(settings), TIMESTAMP_FIELD: _stamp()}
    band = band_noisy(xs, ys, grid, config, params, meta=meta)
    write_band(band, settings["out"])
    return 0


def coverage_config(settings: dict) -> CoverageConfig:
    family = settings["noise"]
    noise = NoiseSpec(family, 0.0, float(settings["noise_scale"]))
    return CoverageConfig(
        algorithm=settings["algorithm"], trials=int(settings["trials"]), n=int(settings["n"]),
        eta=float(settings["eta"]), alpha=float(settings["alpha"]), beta=float(settings["beta"]),
        d=settings.get("d"), lam=float(settings["lambda"]), m=settings.get("m"),
        q=settings.get("q"), grid=int(settings["grid"]), seed=int(settings["seed"]),
        noise=noise, perturb=settings["perturb"])


def cmd_coverage(settings: dict) -> int:
    _require(settings, "out")
    _check_writable(settings["out"])
    config = coverage_config(settings)
    report = coverage_experiment(config, threads=settings.get("threads"),
                                 bands_dir=settings.get("bands_dir"))
    doc = report.to_dict()
    doc[TIMESTAMP_FIELD] = _stamp()
    Path(settings["out"]).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{config.algorithm}: {report.summary()}")
    return 0


def cmd_demo(settings: dict) -> int:
    _require(settings, "out")
    _check_writable(settings["out"])
    params = KernelParams(float(settings["eta"]))
    seed = int(settings["seed"])
    f = generate_true_function((seed, 0), params)
    noise = NoiseSpec(settings["noise"], 0.0, float(settings["noise_scale"]))
    data = sample_dataset(f, int(settings["n"]), noise, (seed, 1))
    write_xy(settings["out"], data.xs, data.ys)
    if settings.get("truth"):
        grid = uniform_grid(int(settings["grid"]))
        write_xy(settings["truth"], grid, f(grid), names=("x", "f"))
    return 0


COMMANDS = {
    "band-free": cmd_band_free,
    "band-noisy": cmd_band_noisy,
    "coverage": cmd_coverage,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = effective_settings(args)
        return COMMANDS[args.command](settings)
    except PWBandsError as exc:
        print(f"pwbands: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pwbands: I/O error: {exc}", file=sys.stderr)
        return 3
    except (TypeError, ValueError) as exc:
        print(f"pwbands: error: invalid setting: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
