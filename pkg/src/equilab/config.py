"""Declarative experiment configuration.

Configs are TOML (preferred) or JSON files describing the statistics,
relationship suite, grids, levels, and seed of a run.  Two named presets
match the paper's two suites: ``fig2`` (uniform-random X, y-only Gaussian
noise) and ``fig6`` (arc-length-equispaced design, i.i.d. Gaussian noise on
both coordinates).
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field

from .measures import StatisticDescriptor, registered_statistics
from .relationships import default_catalog, get_function

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


PRESETS = {
    "fig2": {"marginal_kind": "uniform-random", "noise_kind": "y-only"},
    "fig6": {"marginal_kind": "arc-length-equispaced",
             "noise_kind": "xy-iid"},
}

_DEFAULTS = dict(n=500, R=500, r2_levels=41, alpha=0.1, beta=0.05,
                 y_grid_size=201, r2_mode="denoised-design",
                 calibration_tol=0.002, master_seed=0, out_dir="out")


@dataclass(frozen=True)
class ExperimentConfig:
    statistics: tuple[StatisticDescriptor, ...]
    functions: tuple[str, ...]
    marginal_kind: str
    noise_kind: str
    n: int = 500
    R: int = 500
    r2_levels: int = 41
    alpha: float = 0.1  # total two-sided interval level (0.05 per tail)
    beta: float = 0.05
    y_grid_size: int = 201
    r2_mode: str = "denoised-design"
    calibration_tol: float = 0.002
    master_seed: int = 0
    out_dir: str = "out"
    threads: int | None = None

    def _numeric_fields(self) -> dict:
        """Everything that can affect a computed number (not paths/threads)."""
        return {
            "statistics": [{"id": s.id, "params": s.params,
                            "output_unit": s.output_unit,
                            "normalizer": s.normalizer}
                           for s in self.statistics],
            "functions": list(self.functions),
            "marginal_kind": self.marginal_kind,
            "noise_kind": self.noise_kind,
            "n": self.n, "R": self.R, "r2_levels": self.r2_levels,
            "alpha": self.alpha, "beta": self.beta,
            "y_grid_size": self.y_grid_size, "r2_mode": self.r2_mode,
            "calibration_tol": self.calibration_tol,
            "master_seed": self.master_seed,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self._numeric_fields(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def calibration_hash(self) -> str:
        f = self._numeric_fields()
        blob = json.dumps({k: f[k] for k in
                           ("functions", "marginal_kind", "noise_kind", "n",
                            "r2_levels", "r2_mode", "calibration_tol",
                            "master_seed")},
                          sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def grid_hash(self, statistic: StatisticDescriptor) -> str:
        f = self._numeric_fields()
        blob = json.dumps({
            "statistic": {"id": statistic.id, "params": statistic.params,
                          "output_unit": statistic.output_unit,
                          "normalizer": statistic.normalizer},
            **{k: f[k] for k in
               ("functions", "marginal_kind", "noise_kind", "n", "R",
                "r2_levels", "r2_mode", "calibration_tol", "master_seed")},
        }, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def statistic_stream_key(statistic: StatisticDescriptor) -> int:
    """Stable 64-bit stream id for a statistic's random seeds.

    Derived from the descriptor contents (not its position in the config),
    so adding, removing, or reordering statistics never perturbs the Monte
    Carlo cells of any other statistic.
    """
    blob = json.dumps({"id": statistic.id, "params": statistic.params,
                       "normalizer": statistic.normalizer},
                      sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "big")


def _load_raw(path: str) -> dict:
    with open(path, "rb") as f:
        data = f.read()
    if path.endswith(".json"):
        try:
            return json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON parse error in {path}: line "
                              f"{exc.lineno}: {exc.msg}") from None
    try:
        return tomllib.loads(data.decode())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}") from None


def parse_config(path: str, out_dir: str | None = None,
                 threads: int | None = None) -> ExperimentConfig:
    """Parse and validate a config file, applying documented defaults."""
    raw = _load_raw(path)
    known = {"preset", "marginal_kind", "noise_kind", "statistics",
             "functions", *_DEFAULTS}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config field: {key!r}")

    preset = raw.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {preset!r}")
        marginal_kind = PRESETS[preset]["marginal_kind"]
        noise_kind = PRESETS[preset]["noise_kind"]
    else:
        try:
            marginal_kind = raw["marginal_kind"]
            noise_kind = raw["noise_kind"]
        except KeyError as exc:
            raise ConfigError(f"{exc.args[0]}: required when no preset is "
                              "given") from None

    stats_raw = raw.get("statistics")
    if not stats_raw:
        raise ConfigError("statistics: at least one statistic is required")
    stats = []
    for s in stats_raw:
        if isinstance(s, str):
            s = {"id": s}
        sid = s.get("id")
        if sid not in registered_statistics():
            raise ConfigError(f"statistics: unknown statistic id {sid!r}")
        params = dict(s.get("params", {}))
        if sid == "kraskov_mi":
            params.setdefault("k", 6)
        unit = s.get("output_unit",
                     "nats" if sid == "kraskov_mi" else "unit-interval")
        try:
            stats.append(StatisticDescriptor(sid, params, unit,
                                             s.get("normalizer")))
        except ValueError as exc:
            raise ConfigError(f"statistics: {exc}") from None
    labels = [s.label for s in stats]
    if len(set(labels)) != len(labels):
        raise ConfigError("statistics: duplicate statistic labels; vary the "
                          "normalizer or id")

    functions = raw.get("functions")
    if functions is None:
        functions = [fs.id for fs in default_catalog()]
    for fid in functions:
        try:
            get_function(fid)
        except KeyError:
            raise ConfigError(f"functions: unknown function id "
                              f"{fid!r}") from None

    vals = {k: raw.get(k, v) for k, v in _DEFAULTS.items()}
    if out_dir is not None:
        vals["out_dir"] = out_dir
    if not 0 < vals["alpha"] < 0.5:
        raise ConfigError("alpha: must satisfy 0 < alpha < 0.5")
    if not 0 < vals["beta"] < 1:
        raise ConfigError("beta: must satisfy 0 < beta < 1")
    if vals["n"] < 2:
        raise ConfigError("n: must be >= 2")
    if vals["R"] < 20:
        raise ConfigError("R: must be >= 20")
    if vals["r2_levels"] < 2:
        raise ConfigError("r2_levels: must be >= 2")
    if vals["y_grid_size"] < 2:
        raise ConfigError("y_grid_size: must be >= 2")
    if vals["r2_mode"] not in ("denoised-design", "observed-x"):
        raise ConfigError(f"r2_mode: unknown mode {vals['r2_mode']!r}")

    return ExperimentConfig(statistics=tuple(stats),
                            functions=tuple(functions),
                            marginal_kind=marginal_kind,
                            noise_kind=noise_kind,
                            threads=threads, **vals)
