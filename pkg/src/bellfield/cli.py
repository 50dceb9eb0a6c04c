"""Batch experiment runner: sweeps, limit studies, model comparisons.

Emits one machine-readable table (CSV or JSON) per invocation.  Exit codes:
0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .angles import PolAngle
from .bell import (
    GridTooCoarse,
    Mrf3Params,
    brute_force_oracle,
    coincidence_probability,
)
from .dist import DeltaCollision, SigmaTooCoarse
from .graded import DivergentLimit, MismatchedAlphaOrder
from .mrf import ZeroPartition
from .quantum import (
    ZeroEnsemble,
    bell_coincidence_qm,
    malus_chain,
    triphoton_compare,
)

EXPERIMENTS = ("bell-sweep", "special-cases", "limit-study", "malus-chain", "triphoton-compare")

NUMERICAL_ERRORS = (
    DeltaCollision,
    ZeroPartition,
    SigmaTooCoarse,
    GridTooCoarse,
    ZeroEnsemble,
    MismatchedAlphaOrder,
    DivergentLimit,
    ZeroDivisionError,
)

DEFAULT_SWEEP = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0]
TRIPHOTON_SCAN_DEGREES = [0.0, 36.0, 72.0, 108.0, 144.0]


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


@dataclass
class ExperimentConfig:
    experiment: str
    angles: list[float] = field(default_factory=list)  # degrees
    alpha: float = 1e-2
    beta: float = 1e-3
    sigma: float | None = None  # per-experiment default when omitted
    grid_n: int | None = None
    mode: str = "both"  # exact | regularized | both
    output: str = "-"
    format: str = "csv"
    initial: str = "0"  # malus-chain entry polarization, degrees or "unpolarized"
    sigmas: list[float] = field(default_factory=lambda: [0.04, 0.02, 0.01])
    betas: list[float] = field(default_factory=lambda: [1e-3])

    def resolved_sigma(self) -> float:
        if self.sigma is not None:
            return self.sigma
        return {"special-cases": 0.005, "triphoton-compare": 0.05}.get(self.experiment, 0.01)

    def resolved_grid_n(self) -> int:
        if self.grid_n is not None:
            return self.grid_n
        return 96 if self.experiment == "triphoton-compare" else 8192

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"unknown experiment {self.experiment!r}")
        if self.mode not in ("exact", "regularized", "both"):
            raise ConfigError("mode", f"must be exact, regularized or both, got {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format", f"must be csv or json, got {self.format!r}")
        for key, vals in (("angles", self.angles), ("sigmas", self.sigmas), ("betas", self.betas)):
            if not all(math.isfinite(v) for v in vals):
                raise ConfigError(key, "values must be finite numbers")
        if self.alpha <= 0:
            raise ConfigError("alpha", "must be positive")
        if self.beta <= 0:
            raise ConfigError("beta", "must be positive")
        if self.experiment == "bell-sweep" and self.mode in ("exact", "both"):
            for d in self.angles or DEFAULT_SWEEP:
                if min(abs(d % 180), 180 - abs(d % 180)) < 1e-9 or abs(abs(d % 180) - 90) < 1e-9:
                    raise ConfigError(
                        "angles",
                        f"delta={d} deg is degenerate (equal/orthogonal settings); "
                        "exact mode cannot separate the point masses -- use mode=regularized",
                    )
        if self.experiment == "limit-study" and len(self.sigmas) < 2 and len(self.betas) < 2:
            raise ConfigError("sigmas", "limit study needs at least two sigma or two beta values")
        if self.experiment == "malus-chain":
            if not (self.angles or []):
                raise ConfigError("angles", "malus-chain needs at least one polarizer setting")
            if self.initial != "unpolarized":
                try:
                    float(self.initial)
                except ValueError:
                    raise ConfigError("initial", "must be degrees or 'unpolarized'") from None
        if self.experiment == "triphoton-compare" and self.angles and len(self.angles) != 3:
            raise ConfigError("angles", "triphoton-compare takes exactly three settings (or none to scan)")


@dataclass
class ResultRow:
    experiment: str
    model: str  # MRF3-exact | MRF3-oracle | QM | Mstar
    params: dict
    value: float
    target: float | None
    runtime_ms: float

    @property
    def abs_error(self) -> float | None:
        return None if self.target is None else abs(self.value - self.target)


def _fmt(x: float | None) -> str:
    return "" if x is None else format(x, ".12g")


def _timed(fn):
    t0 = time.perf_counter()
    value = fn()
    return value, (time.perf_counter() - t0) * 1e3


def _mrf_params(config: ExperimentConfig, delta_deg: float) -> Mrf3Params:
    return Mrf3Params(
        theta_a=PolAngle.from_degrees(delta_deg),
        theta_b=PolAngle.from_degrees(0.0),
        alpha=config.alpha,
        beta=config.beta,
        sigma=config.resolved_sigma(),
        grid_n=config.resolved_grid_n(),
    )


def _run_bell_sweep(config: ExperimentConfig) -> list[ResultRow]:
    rows = []
    deltas = config.angles or DEFAULT_SWEEP
    for d in deltas:
        target = 0.5 * math.cos(math.radians(d)) ** 2
        params = _mrf_params(config, d)
        if config.mode in ("exact", "both"):
            value, ms = _timed(lambda: coincidence_probability(params, "exact").probability)
            rows.append(ResultRow(config.experiment, "MRF3-exact", {"delta_deg": d}, value, target, ms))
        if config.mode in ("regularized", "both"):
            value, ms = _timed(lambda: brute_force_oracle(params).probability)
            rows.append(ResultRow(config.experiment, "MRF3-oracle", {"delta_deg": d}, value, target, ms))
        value, ms = _timed(
            lambda: bell_coincidence_qm(PolAngle.from_degrees(d), PolAngle.from_degrees(0.0))
        )
        rows.append(ResultRow(config.experiment, "QM", {"delta_deg": d}, value, target, ms))
    return rows


def _run_special_cases(config: ExperimentConfig) -> list[ResultRow]:
    rows = []
    for d, target in ((0.0, 0.5), (90.0, 0.0)):
        params = _mrf_params(config, d)
        value, ms = _timed(lambda: brute_force_oracle(params).probability)
        rows.append(ResultRow(config.experiment, "MRF3-oracle", {"delta_deg": d}, value, target, ms))
        value, ms = _timed(
            lambda: bell_coincidence_qm(PolAngle.from_degrees(d), PolAngle.from_degrees(0.0))
        )
        rows.append(ResultRow(config.experiment, "QM", {"delta_deg": d}, value, target, ms))
    return rows


def _run_limit_study(config: ExperimentConfig) -> list[ResultRow]:
    delta = config.angles[0] if config.angles else 30.0
    exact = coincidence_probability(_mrf_params(config, delta), "exact").probability
    rows = []
    for beta in sorted(config.betas):
        previous: tuple[float, float] | None = None  # (sigma, value)
        for sigma in sorted(config.sigmas, reverse=True):
            params = Mrf3Params(
                theta_a=PolAngle.from_degrees(delta),
                theta_b=PolAngle.from_degrees(0.0),
                alpha=config.alpha,
                beta=beta,
                sigma=sigma,
                grid_n=config.resolved_grid_n(),
            )
            value, ms = _timed(lambda: brute_force_oracle(params).probability)
            p: dict = {"delta_deg": delta, "sigma": sigma, "beta": beta}
            if previous is not None:
                s1, f1 = previous
                # kernel-width error shrinks quadratically
                p["richardson"] = value + (value - f1) * sigma**2 / (s1**2 - sigma**2)
            previous = (sigma, value)
            rows.append(ResultRow(config.experiment, "MRF3-oracle", p, value, exact, ms))
    return rows


def _run_malus_chain(config: ExperimentConfig) -> list[ResultRow]:
    settings = [PolAngle.from_degrees(d) for d in config.angles]
    initial = "unpolarized" if config.initial == "unpolarized" else PolAngle.from_degrees(float(config.initial))
    value, ms = _timed(lambda: malus_chain(initial, settings))
    params = {
        "initial": config.initial,
        "settings": ",".join(format(d, "g") for d in config.angles),
    }
    return [ResultRow(config.experiment, "QM", params, value, None, ms)]


def _triphoton_rows(config: ExperimentConfig, degs: Sequence[float], include_mrf: bool) -> list[ResultRow]:
    settings = tuple(PolAngle.from_degrees(d) for d in degs)
    params = Mrf3Params(
        theta_a=PolAngle(0.0),
        theta_b=PolAngle(0.0),
        alpha=config.alpha,
        beta=config.beta,
        sigma=config.resolved_sigma(),
        grid_n=config.resolved_grid_n(),
    )
    p = {"phi1_deg": degs[0], "phi2_deg": degs[1], "phi3_deg": degs[2]}
    qm, ms_qm = _timed(lambda: triphoton_compare(settings, (0, 1, 2), "M").probability)
    rows = [ResultRow(config.experiment, "QM", p, qm, None, ms_qm)]
    mstar, ms = _timed(lambda: triphoton_compare(settings, (0, 1, 2), "Mstar", params).probability)
    rows.append(ResultRow(config.experiment, "Mstar", p, mstar, qm, ms))
    if include_mrf:
        mrf, ms = _timed(lambda: triphoton_compare(settings, (0, 1, 2), "MRF", params).probability)
        rows.append(ResultRow(config.experiment, "MRF3-oracle", p, mrf, qm, ms))
    return rows


def _run_triphoton(config: ExperimentConfig) -> list[ResultRow]:
    if config.angles:
        return _triphoton_rows(config, config.angles, include_mrf=True)
    rows = []
    for d1 in TRIPHOTON_SCAN_DEGREES:
        for d2 in TRIPHOTON_SCAN_DEGREES:
            for d3 in TRIPHOTON_SCAN_DEGREES:
                rows.extend(_triphoton_rows(config, (d1, d2, d3), include_mrf=True))
    return rows


RUNNERS = {
    "bell-sweep": _run_bell_sweep,
    "special-cases": _run_special_cases,
    "limit-study": _run_limit_study,
    "malus-chain": _run_malus_chain,
    "triphoton-compare": _run_triphoton,
}


def render_rows(rows: list[ResultRow], fmt: str) -> str:
    param_keys = sorted({k for r in rows for k in r.params})
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["experiment", "model", *param_keys, "value", "target", "abs_error", "runtime_ms"])
        for r in rows:
            writer.writerow(
                [
                    r.experiment,
                    r.model,
                    *[
                        _fmt(r.params[k]) if isinstance(r.params.get(k), float) else str(r.params.get(k, ""))
                        for k in param_keys
                    ],
                    _fmt(r.value),
                    _fmt(r.target),
                    _fmt(r.abs_error),
                    format(r.runtime_ms, ".3f"),
                ]
            )
        return buf.getvalue()
    objs = []
    for r in rows:
        obj = {"experiment": r.experiment, "model": r.model}
        for k in param_keys:
            v = r.params.get(k)
            obj[k] = float(_fmt(v)) if isinstance(v, float) else v
        obj["value"] = float(_fmt(r.value))
        obj["target"] = None if r.target is None else float(_fmt(r.target))
        obj["abs_error"] = None if r.abs_error is None else float(_fmt(r.abs_error))
        obj["runtime_ms"] = round(r.runtime_ms, 3)
        objs.append(obj)
    return json.dumps(objs, indent=2) + "\n"


def run(config: ExperimentConfig) -> list[ResultRow]:
    """Validate, execute and write the experiment's table; returns the rows."""
    config.validate()
    rows = RUNNERS[config.experiment](config)
    text = render_rows(rows, config.format)
    if config.output == "-":
        sys.stdout.write(text)
    else:
        Path(config.output).write_text(text)
    return rows


# -- command line -----------------------------------------------------------------


def _parse_float_list(raw: str, key: str) -> list[float]:
    try:
        return [float(x) for x in raw.split(",") if x.strip() != ""]
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as a comma-separated number list") from None


def read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path!r}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


_LIST_KEYS = {"angles", "sigmas", "betas"}
_FLOAT_KEYS = {"alpha", "beta", "sigma"}
_INT_KEYS = {"grid_n"}
_STR_KEYS = {"experiment", "mode", "output", "format", "initial"}


def build_config(file_values: dict[str, str], flag_values: dict) -> ExperimentConfig:
    merged: dict = {}
    for key, raw in file_values.items():
        if key in _LIST_KEYS:
            merged[key] = _parse_float_list(raw, key)
        elif key in _FLOAT_KEYS:
            try:
                merged[key] = float(raw)
            except ValueError:
                raise ConfigError(key, f"cannot parse {raw!r} as a number") from None
        elif key in _INT_KEYS:
            try:
                merged[key] = int(raw)
            except ValueError:
                raise ConfigError(key, f"cannot parse {raw!r} as an integer") from None
        elif key in _STR_KEYS:
            merged[key] = raw
        else:
            raise ConfigError(key, "unknown configuration key")
    for key, value in flag_values.items():
        if value is not None:
            merged[key] = value
    if "experiment" not in merged:
        raise ConfigError("experiment", "no experiment selected (positional argument or config file)")
    return ExperimentConfig(**merged)


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bellfield",
        description="Coincidence-experiment sweeps for the random-field and quantum models.",
    )
    parser.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    parser.add_argument("--config", help="key=value config file; flags override file keys")
    parser.add_argument("--angles", help="comma-separated degrees")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--grid-n", dest="grid_n", type=int)
    parser.add_argument("--mode", choices=("exact", "regularized", "both"))
    parser.add_argument("--output", help="output path, '-' for stdout")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--initial", help="malus-chain entry polarization (degrees or 'unpolarized')")
    parser.add_argument("--sigmas", help="comma-separated kernel widths (limit-study)")
    parser.add_argument("--betas", help="comma-separated beta values (limit-study)")
    args = parser.parse_args(argv)

    try:
        file_values = read_config_file(args.config) if args.config else {}
        flags = {
            "experiment": args.experiment,
            "alpha": args.alpha,
            "beta": args.beta,
            "sigma": args.sigma,
            "grid_n": args.grid_n,
            "mode": args.mode,
            "output": args.output,
            "format": args.format,
            "initial": args.initial,
            "angles": _parse_float_list(args.angles, "angles") if args.angles is not None else None,
            "sigmas": _parse_float_list(args.sigmas, "sigmas") if args.sigmas is not None else None,
            "betas": _parse_float_list(args.betas, "betas") if args.betas is not None else None,
        }
        config = build_config(file_values, flags)
        run(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
