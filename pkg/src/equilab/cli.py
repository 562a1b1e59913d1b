"""Experiment driver: calibrate -> grid -> analyze -> render.

Stages share versioned JSON archives under ``<out>/cache`` so expensive Monte
Carlo runs are computed once and re-analyzed offline.  ``run`` executes all
stages; each stage is also available as its own subcommand and the split
pipeline produces byte-identical outputs.

Exit codes: 0 success, 1 config error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

from . import __version__
from .analysis import (ScoreGrid, build_score_grid, detection_threshold,
                       equitability_summary, power_surface,
                       theorem1_consistency)
from .config import (ConfigError, ExperimentConfig, parse_config,
                     statistic_stream_key)
from .relationships import (CalibratedLevel, MarginalDesign, calibrate_grid,
                            default_catalog, get_function)
from .report import render_interval_plot, render_power_heatmap, write_tables
from .seeds import derive_seed

log = logging.getLogger("equilab")


class MissingArchiveError(RuntimeError):
    pass


def _cache_dir(cfg: ExperimentConfig) -> str:
    return os.path.join(cfg.out_dir, "cache")


def _calibration_path(cfg: ExperimentConfig) -> str:
    return os.path.join(_cache_dir(cfg),
                        f"calibration_{cfg.calibration_hash()}.json")


def _grid_path(cfg: ExperimentConfig, stat) -> str:
    return os.path.join(_cache_dir(cfg),
                        f"scoregrid_{stat.label}_{cfg.grid_hash(stat)}.json")


def _level_to_dict(lv: CalibratedLevel) -> dict:
    return {"target_r2": lv.target_r2,
            "sigma": "inf" if math.isinf(lv.sigma) else lv.sigma,
            "achieved_r2": lv.achieved_r2, "tolerance": lv.tolerance}


def _level_from_dict(d: dict) -> CalibratedLevel:
    sigma = math.inf if d["sigma"] == "inf" else d["sigma"]
    return CalibratedLevel(d["target_r2"], sigma, d["achieved_r2"],
                           d["tolerance"])


def stage_calibrate(cfg: ExperimentConfig) -> str:
    """Calibrate noise levels for every function; write the archive."""
    path = _calibration_path(cfg)
    if os.path.exists(path):
        log.info("calibration cache hit: %s", path)
        return path
    os.makedirs(_cache_dir(cfg), exist_ok=True)
    marginal = MarginalDesign(cfg.marginal_kind, cfg.n)
    per_fn = {}
    for f_idx, fid in enumerate(cfg.functions):
        log.info("calibrating %s (%d levels)", fid, cfg.r2_levels)
        levels = calibrate_grid(get_function(fid), marginal, cfg.noise_kind,
                                levels=cfg.r2_levels, mode=cfg.r2_mode,
                                tol=cfg.calibration_tol,
                                seed=derive_seed(cfg.master_seed, 101, f_idx))
        per_fn[fid] = [_level_to_dict(lv) for lv in levels]
    doc = {"format": "equilab-calibration", "version": 1, "levels": per_fn}
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(doc, f, separators=(",", ":"))
    os.replace(tmp, path)
    return path


def _load_calibration(cfg: ExperimentConfig) -> list[list[CalibratedLevel]]:
    path = _calibration_path(cfg)
    if not os.path.exists(path):
        raise MissingArchiveError(f"missing calibration archive {path}; "
                                  "run 'equilab calibrate' first")
    with open(path) as f:
        doc = json.load(f)
    return [[_level_from_dict(d) for d in doc["levels"][fid]]
            for fid in cfg.functions]


def stage_grid(cfg: ExperimentConfig) -> list[str]:
    """Build (or reuse) the score-grid archive for every statistic."""
    levels = _load_calibration(cfg)
    paths = []
    for stat in cfg.statistics:
        path = _grid_path(cfg, stat)
        if os.path.exists(path):
            log.info("score-grid cache hit: %s", path)
            paths.append(path)
            continue
        log.info("building score grid for %s (R=%d, n=%d)",
                 stat.label, cfg.R, cfg.n)
        grid = build_score_grid(stat, list(cfg.functions), levels,
                                cfg.marginal_kind, cfg.noise_kind,
                                cfg.R, cfg.n, cfg.master_seed,
                                statistic_index=statistic_stream_key(stat),
                                workers=cfg.threads, r2_mode=cfg.r2_mode)
        tmp = path + ".tmp"
        with open(tmp, "w") as f:
            f.write(grid.to_json())
        os.replace(tmp, path)
        paths.append(path)
    return paths


def _load_grids(cfg: ExperimentConfig) -> list[ScoreGrid]:
    grids = []
    for stat in cfg.statistics:
        path = _grid_path(cfg, stat)
        if not os.path.exists(path):
            raise MissingArchiveError(f"missing score-grid archive {path}; "
                                      "run 'equilab grid' first")
        with open(path) as f:
            grids.append(ScoreGrid.from_json(f.read()))
    return grids


def _manifest(cfg: ExperimentConfig, stat) -> dict:
    return {
        "config_hash": cfg.config_hash(),
        "statistic": {"id": stat.id, "params": stat.params,
                      "output_unit": stat.output_unit,
                      "normalizer": stat.normalizer},
        "functions": list(cfg.functions),
        "marginal_kind": cfg.marginal_kind,
        "noise_kind": cfg.noise_kind,
        "n": cfg.n, "R": cfg.R, "r2_levels": cfg.r2_levels,
        "alpha": cfg.alpha, "beta": cfg.beta,
        "y_grid_size": cfg.y_grid_size, "r2_mode": cfg.r2_mode,
        "master_seed": cfg.master_seed,
        "version": __version__,
    }


def stage_analyze(cfg: ExperimentConfig) -> list[str]:
    """Interval, power, and detection analyses; write tables per statistic.

    Intervals use the total two-sided level alpha; power surfaces and the
    detection test run at level alpha/2, matching the interval/power duality.
    """
    out_paths = []
    for stat, grid in zip(cfg.statistics, _load_grids(cfg)):
        log.info("analyzing %s", stat.label)
        table = equitability_summary(grid, cfg.alpha, cfg.y_grid_size)
        surface = power_surface(grid, cfg.alpha / 2.0)
        detection = detection_threshold(grid, cfg.alpha / 2.0, cfg.beta)
        consistency = theorem1_consistency(grid, cfg.alpha)
        out_dir = os.path.join(cfg.out_dir, stat.label)
        out_paths += write_tables(grid, table, surface, detection, out_dir,
                                  consistency=consistency,
                                  manifest=_manifest(cfg, stat))
    return out_paths


def stage_render(cfg: ExperimentConfig) -> list[str]:
    """Render the interval plot and power heatmap per statistic."""
    out_paths = []
    for stat, grid in zip(cfg.statistics, _load_grids(cfg)):
        log.info("rendering %s", stat.label)
        out_dir = os.path.join(cfg.out_dir, stat.label)
        os.makedirs(out_dir, exist_ok=True)
        table = equitability_summary(grid, cfg.alpha, cfg.y_grid_size)
        surface = power_surface(grid, cfg.alpha / 2.0)
        p1 = os.path.join(out_dir, "intervals.svg")
        render_interval_plot(grid, cfg.alpha, p1, interval_table=table)
        p2 = os.path.join(out_dir, "power.svg")
        render_power_heatmap(surface, p2, label=f"({stat.label})")
        out_paths += [p1, p2]
    return out_paths


def run(cfg: ExperimentConfig) -> int:
    """Full pipeline with caching; returns process exit status."""
    started = time.time()
    stage_calibrate(cfg)
    stage_grid(cfg)
    stage_analyze(cfg)
    stage_render(cfg)
    # timestamps live outside summary.json so reruns stay byte-identical
    info = {"completed_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ",
                                           time.gmtime()),
            "elapsed_seconds": round(time.time() - started, 3),
            "config_hash": cfg.config_hash()}
    with open(os.path.join(cfg.out_dir, "run_info.json"), "w") as f:
        json.dump(info, f, indent=2)
        f.write("\n")
    log.info("run complete in %.1fs", info["elapsed_seconds"])
    return 0


def cmd_catalog(args) -> int:
    doc = [{"id": fs.id, "formula": fs.formula,
            "display_range": list(fs.display_range)}
           for fs in default_catalog()]
    text = json.dumps(doc, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equilab",
        description="Equitability analysis of dependence statistics via "
                    "interpretable intervals and power surfaces.")
    parser.add_argument("--version", action="version",
                        version=f"equilab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_stage(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", required=True,
                       help="TOML or JSON experiment config")
        p.add_argument("--out", default=None,
                       help="output directory (overrides config)")
        p.add_argument("--threads", type=int,
                       default=os.cpu_count(),
                       help="worker processes (results are independent "
                            "of this)")
        return p

    add_stage("run", "full pipeline: calibrate, grid, analyze, render")
    add_stage("calibrate", "calibrate noise levels only")
    add_stage("grid", "build Monte Carlo score grids (needs calibration)")
    add_stage("analyze", "compute tables from cached score grids")
    add_stage("render", "render SVG figures from cached score grids")

    p = sub.add_parser("catalog",
                       help="export the function catalog as JSON")
    p.add_argument("-o", "--output", default=None)
    return parser


_STAGES = {
    "run": run,
    "calibrate": lambda cfg: (stage_calibrate(cfg), 0)[1],
    "grid": lambda cfg: (stage_grid(cfg), 0)[1],
    "analyze": lambda cfg: (stage_analyze(cfg), 0)[1],
    "render": lambda cfg: (stage_render(cfg), 0)[1],
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "catalog":
        return cmd_catalog(args)
    try:
        cfg = parse_config(args.config, out_dir=args.out,
                           threads=args.threads)
    except (ConfigError, FileNotFoundError) as exc:
        log.error("config error: %s", exc)
        return 1
    try:
        return _STAGES[args.command](cfg)
    except MissingArchiveError as exc:
        log.error("%s", exc)
        return 2
    except Exception as exc:
        log.error("runtime error: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
