"""Score grids, intervals, power surfaces, and their summaries.

This module turns Monte Carlo sampling distributions of a statistic into
reliable intervals (envelope of central quantile bands over the relationship
suite), interpretable intervals (their inversion, an interval estimate of
R^2), power functions of the most permissive right-tailed tests, and the
derived summaries: equitability, detection threshold, and a numerical check
of the interval/power duality.

All interval endpoints and thresholds are reported at grid resolution: no
interpolation between calibrated levels, so every quantity is an exact
function of the Monte Carlo data.
"""
from __future__ import annotations

import bisect
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .measures import Sample, StatisticDescriptor, evaluate
from .relationships import (CalibratedLevel, MarginalDesign, NoiseModel,
                            RelationshipModel, get_function)
from .seeds import derive_seed

ARCHIVE_FORMAT = "equilab-scoregrid"
ARCHIVE_VERSION = 1


class GridBuildError(RuntimeError):
    """Too many replicate failures in a score-grid cell."""


class MonotonicityError(ValueError):
    """The score grid violates a monotone-grid precondition."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval endpoints out of order: "
                             f"[{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi


@dataclass(frozen=True)
class ScoreGrid:
    """Sorted replicate scores of one statistic over (function, level) cells.

    ``scores[f, l]`` holds the R sorted statistic values for function f at
    calibrated level l.  ``levels[f][l]`` share one target_r2 grid across
    functions; sigmas differ per function.
    """

    statistic: StatisticDescriptor
    function_ids: tuple[str, ...]
    levels: tuple[tuple[CalibratedLevel, ...], ...]
    scores: np.ndarray  # shape (n_functions, n_levels, R), sorted on axis 2
    n: int
    R: int
    master_seed: int
    marginal_kind: str
    noise_kind: str
    r2_mode: str = "denoised-design"

    def __post_init__(self):
        nf, nl, R = self.scores.shape
        if nf != len(self.function_ids) or nl != len(self.levels[0]):
            raise ValueError("scores shape inconsistent with grid metadata")
        if R != self.R:
            raise ValueError("replicate count inconsistent with scores")
        targets = [lv.target_r2 for lv in self.levels[0]]
        for per_fn in self.levels:
            if [lv.target_r2 for lv in per_fn] != targets:
                raise ValueError("target_r2 grid differs across functions")
        if np.any(np.diff(self.scores, axis=2) < 0):
            raise ValueError("score vectors must be sorted ascending")

    @property
    def target_grid(self) -> np.ndarray:
        return np.array([lv.target_r2 for lv in self.levels[0]])

    @property
    def n_levels(self) -> int:
        return self.scores.shape[1]

    @property
    def n_functions(self) -> int:
        return self.scores.shape[0]

    @property
    def grid_step(self) -> float:
        t = self.target_grid
        return float(t[1] - t[0]) if len(t) > 1 else 1.0

    # -- archive -----------------------------------------------------------
    def to_json(self) -> str:
        doc = {
            "format": ARCHIVE_FORMAT,
            "version": ARCHIVE_VERSION,
            "statistic": {
                "id": self.statistic.id,
                "params": self.statistic.params,
                "output_unit": self.statistic.output_unit,
                "normalizer": self.statistic.normalizer,
            },
            "function_ids": list(self.function_ids),
            "levels": [[{"target_r2": lv.target_r2,
                         "sigma": "inf" if math.isinf(lv.sigma) else lv.sigma,
                         "achieved_r2": lv.achieved_r2,
                         "tolerance": lv.tolerance}
                        for lv in per_fn] for per_fn in self.levels],
            "n": self.n,
            "R": self.R,
            "master_seed": self.master_seed,
            "marginal_kind": self.marginal_kind,
            "noise_kind": self.noise_kind,
            "r2_mode": self.r2_mode,
            "scores": self.scores.tolist(),
        }
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ScoreGrid":
        doc = json.loads(text)
        if doc.get("format") != ARCHIVE_FORMAT:
            raise ValueError("not a score-grid archive")
        if doc.get("version") != ARCHIVE_VERSION:
            raise ValueError(f"unsupported archive version: "
                             f"{doc.get('version')}")
        stat = StatisticDescriptor(doc["statistic"]["id"],
                                   doc["statistic"]["params"],
                                   doc["statistic"]["output_unit"],
                                   doc["statistic"]["normalizer"])
        levels = tuple(
            tuple(CalibratedLevel(lv["target_r2"],
                                  math.inf if lv["sigma"] == "inf"
                                  else lv["sigma"],
                                  lv["achieved_r2"], lv["tolerance"])
                  for lv in per_fn)
            for per_fn in doc["levels"])
        return cls(stat, tuple(doc["function_ids"]), levels,
                   np.asarray(doc["scores"], dtype=np.float64),
                   doc["n"], doc["R"], doc["master_seed"],
                   doc["marginal_kind"], doc["noise_kind"], doc["r2_mode"])


@dataclass(frozen=True)
class IntervalTable:
    """Reliable and interpretable intervals plus equitability summaries.

    Widths are in R^2 units, so their reciprocals match the equitability
    convention of the literature.  A width of 0 encodes as infinite
    equitability ("perfect").
    """

    alpha: float
    reliable: dict  # target_r2 -> Interval
    interpretable: dict  # y value -> (Interval, extrapolated: bool)
    worst_case_width: float
    average_case_width: float
    score_range: tuple[float, float]

    @property
    def worst_case_equitability(self) -> float:
        return math.inf if self.worst_case_width == 0.0 \
            else 1.0 / self.worst_case_width

    @property
    def average_case_equitability(self) -> float:
        return math.inf if self.average_case_width == 0.0 \
            else 1.0 / self.average_case_width


@dataclass(frozen=True)
class PowerSurface:
    """Power of most-permissive right-tailed tests over all grid pairs."""

    alpha: float
    x_grid: np.ndarray
    critical_values: np.ndarray  # per x0 index
    power: np.ndarray  # shape (n_levels, n_levels); NaN where x1 < x0
    uncertain_sets: tuple[Interval, ...]  # per x0 index


@dataclass(frozen=True)
class DetectionReport:
    alpha: float
    beta: float
    threshold: Optional[float]  # None encodes "none-achieved"
    min_power: tuple[float, ...] = field(default=())


@dataclass(frozen=True)
class ConsistencyReport:
    """Numerical check of the interval/power duality (see theorem1_consistency)."""

    max_discrepancy_steps: float
    checked_rows: int
    skipped_rows: int


# ---------------------------------------------------------------------------
# Grid construction
# ---------------------------------------------------------------------------

def _build_cell(args):
    (stat_dict, fid, marginal_kind, noise_kind, n, R,
     master_seed, stat_index, f_idx, level_idx, sigma) = args
    stat = StatisticDescriptor(**stat_dict)
    model = RelationshipModel(get_function(fid),
                              MarginalDesign(marginal_kind, n),
                              NoiseModel(noise_kind, sigma))
    from .relationships import generate_sample
    out = np.empty(R)
    failures = 0
    for r in range(R):
        seed = derive_seed(master_seed, stat_index, f_idx, level_idx, r)
        sample, _ = generate_sample(model, seed)
        try:
            out[r] = evaluate(stat, sample)
        except Exception:
            failures += 1
            out[r] = np.nan
    if failures > max(1, R // 100):
        raise GridBuildError(
            f"{failures}/{R} replicate failures for function {fid!r} "
            f"at level index {level_idx}")
    if failures:
        good = out[~np.isnan(out)]
        out[:] = np.concatenate([good, np.full(failures, good[-1])])
    out.sort()
    return f_idx, level_idx, out


def build_score_grid(statistic: StatisticDescriptor,
                     function_ids: list[str],
                     levels: list[list[CalibratedLevel]],
                     marginal_kind: str, noise_kind: str,
                     R: int, n: int, master_seed: int,
                     statistic_index: int = 0,
                     workers: Optional[int] = 1,
                     r2_mode: str = "denoised-design") -> ScoreGrid:
    """Evaluate the statistic on R replicates of every (function, level) cell.

    Each replicate's seed is derived from (master_seed, statistic_index,
    function index, level index, replicate index), so the result is
    bit-identical regardless of ``workers``.
    """
    if R < 20:
        raise ValueError("R must be >= 20")
    stat_dict = {"id": statistic.id, "params": statistic.params,
                 "output_unit": statistic.output_unit,
                 "normalizer": statistic.normalizer}
    tasks = [(stat_dict, fid, marginal_kind, noise_kind, n, R, master_seed,
              statistic_index, f_idx, l_idx, lv.sigma)
             for f_idx, fid in enumerate(function_ids)
             for l_idx, lv in enumerate(levels[f_idx])]
    n_levels = len(levels[0])
    scores = np.empty((len(function_ids), n_levels, R))
    if workers is not None and workers <= 1:
        results = map(_build_cell, tasks)
        for f_idx, l_idx, vec in results:
            scores[f_idx, l_idx] = vec
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for f_idx, l_idx, vec in pool.map(_build_cell, tasks,
                                              chunksize=4):
                scores[f_idx, l_idx] = vec
    return ScoreGrid(statistic, tuple(function_ids),
                     tuple(tuple(per_fn) for per_fn in levels),
                     scores, n, R, master_seed, marginal_kind, noise_kind,
                     r2_mode)


# ---------------------------------------------------------------------------
# Quantiles and intervals
# ---------------------------------------------------------------------------

def quantile(sorted_scores, p: float) -> float:
    """Order-statistic quantile with linear interpolation ("type 7").

    p=0 gives the minimum, p=1 the maximum.  The input must be sorted.
    """
    v = np.asarray(sorted_scores, dtype=float)
    if v.size == 0:
        raise ValueError("empty score vector")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    h = (v.size - 1) * p
    i = int(math.floor(h))
    if i >= v.size - 1:
        return float(v[-1])
    frac = h - i
    return float(v[i] + frac * (v[i + 1] - v[i]))


def reliable_interval(grid: ScoreGrid, level_index: int,
                      alpha: float) -> Interval:
    """Empirical envelope of the central (1-alpha) bands over all functions.

    Lower endpoint: minimal alpha/2 quantile across functions; upper:
    maximal 1-alpha/2 quantile.  This is the acceptance region of the
    composite test of R^2 = x at the given level.
    """
    cells = grid.scores[:, level_index, :]
    lo = min(quantile(c, alpha / 2.0) for c in cells)
    hi = max(quantile(c, 1.0 - alpha / 2.0) for c in cells)
    return Interval(lo, hi)


def reliable_table(grid: ScoreGrid, alpha: float) -> list[Interval]:
    return [reliable_interval(grid, l, alpha) for l in range(grid.n_levels)]


def interpretable_interval(reliable: list[Interval], target_grid, y: float
                           ) -> tuple[Interval, bool]:
    """Invert the reliable bands: smallest interval of grid x with y inside.

    Returns ``(interval, extrapolated)``.  If y is outside every band (it can
    fall outside all envelopes), the result is the singleton at the nearest
    band's x, flagged extrapolated.
    """
    hits = [i for i, iv in enumerate(reliable) if iv.contains(y)]
    if hits:
        return Interval(float(target_grid[hits[0]]),
                        float(target_grid[hits[-1]])), False
    dist = [max(iv.lo - y, y - iv.hi) for iv in reliable]
    i = int(np.argmin(dist))
    x = float(target_grid[i])
    return Interval(x, x), True


def equitability_summary(grid: ScoreGrid, alpha: float,
                         y_grid_size: int = 201) -> IntervalTable:
    """Interpretable intervals on a uniform y grid, plus width summaries.

    The y grid spans the observed score range (rather than [0,1]) so
    unnormalized statistics such as raw MI are handled; the range is recorded
    in the output.
    """
    if y_grid_size < 2:
        raise ValueError("y_grid_size must be >= 2")
    rel = reliable_table(grid, alpha)
    targets = grid.target_grid
    smin = float(grid.scores.min())
    smax = float(grid.scores.max())
    ys = np.linspace(smin, smax, y_grid_size)
    interp = {}
    widths = []
    for y in ys:
        iv, extrapolated = interpretable_interval(rel, targets, float(y))
        interp[float(y)] = (iv, extrapolated)
        widths.append(iv.width)
    return IntervalTable(
        alpha=alpha,
        reliable={float(t): iv for t, iv in zip(targets, rel)},
        interpretable=interp,
        worst_case_width=float(max(widths)),
        average_case_width=float(np.mean(widths)),
        score_range=(smin, smax),
    )


# ---------------------------------------------------------------------------
# Power
# ---------------------------------------------------------------------------

def critical_value(grid: ScoreGrid, x0_level: int, alpha: float) -> float:
    """Critical value of the most permissive level-alpha right-tailed test.

    Equals the upper endpoint of the 2*alpha reliable interval exactly.
    """
    cells = grid.scores[:, x0_level, :]
    return max(quantile(c, 1.0 - alpha) for c in cells)


def _rejection_fraction(sorted_scores: np.ndarray, t: float) -> float:
    # strict rejection: score > t; ties at t count as non-rejection
    idx = bisect.bisect_right(sorted_scores.tolist(), t)
    return (sorted_scores.size - idx) / sorted_scores.size


def power_function(grid: ScoreGrid, x0_level: int,
                   alpha: float) -> dict[int, float]:
    """Worst-case rejection probability over functions, per x1 >= x0 level."""
    t = critical_value(grid, x0_level, alpha)
    out = {}
    for x1 in range(x0_level, grid.n_levels):
        out[x1] = min(_rejection_fraction(grid.scores[f, x1], t)
                      for f in range(grid.n_functions))
    return out


def uncertain_set(power_row: dict[int, float], x0_level: int,
                  target_grid, alpha: float) -> Interval:
    """Smallest closed interval of grid x1 >= x0 with power below 1-alpha."""
    low = [x1 for x1, p in power_row.items()
           if x1 >= x0_level and p < 1.0 - alpha]
    if not low:
        x = float(target_grid[x0_level])
        return Interval(x, x)
    return Interval(float(target_grid[min(low)]), float(target_grid[max(low)]))


def power_surface(grid: ScoreGrid, alpha: float) -> PowerSurface:
    """Power of every test x0 against every alternative x1 >= x0."""
    nl = grid.n_levels
    targets = grid.target_grid
    crit = np.empty(nl)
    power = np.full((nl, nl), np.nan)
    unc = []
    for x0 in range(nl):
        crit[x0] = critical_value(grid, x0, alpha)
        row = power_function(grid, x0, alpha)
        for x1, p in row.items():
            power[x0, x1] = p
        unc.append(uncertain_set(row, x0, targets, alpha))
    return PowerSurface(alpha, targets, crit, power, tuple(unc))


# ---------------------------------------------------------------------------
# Consistency and detection
# ---------------------------------------------------------------------------

def theorem1_consistency(grid: ScoreGrid, alpha: float) -> ConsistencyReport:
    """Check that interpretable intervals match uncertain sets of power rows.

    For each grid x0, sets y to the upper endpoint of the alpha-reliable
    interval at x0 and compares the alpha-interpretable interval at y with
    the uncertain set of the level-(alpha/2) power function at x0.  The
    duality holds exactly in the continuum when the upper envelope is
    strictly increasing; rows where the envelope is not monotone are skipped
    and counted.  Raises MonotonicityError if the target grid itself is not
    ascending.
    """
    targets = grid.target_grid
    if np.any(np.diff(targets) <= 0):
        raise MonotonicityError("target_r2 grid is not strictly increasing")
    rel = reliable_table(grid, alpha)
    his = [iv.hi for iv in rel]
    step = grid.grid_step
    max_disc = 0.0
    checked = skipped = 0
    for x0 in range(grid.n_levels):
        before_ok = all(his[j] < his[x0] for j in range(x0))
        after_ok = all(his[j] > his[x0] for j in range(x0 + 1, grid.n_levels))
        if not (before_ok and after_ok):
            skipped += 1
            continue
        y = his[x0]
        interp, _ = interpretable_interval(rel, targets, y)
        row = power_function(grid, x0, alpha / 2.0)
        unc = uncertain_set(row, x0, targets, alpha / 2.0)
        disc = max(abs(interp.lo - unc.lo), abs(interp.hi - unc.hi)) / step
        max_disc = max(max_disc, disc)
        checked += 1
    return ConsistencyReport(max_disc if checked else math.nan,
                             checked, skipped)


def detection_threshold(grid: ScoreGrid, alpha: float,
                        beta: float) -> DetectionReport:
    """Smallest grid strength beyond which the independence test has power.

    Uses the most permissive level-alpha test of R^2 = 0 and scans for the
    smallest grid value d such that the worst-case rejection fraction is at
    least 1-beta at every grid point above d.  A vacuous suffix (no grid
    point above d) does not count, so an uninformative statistic reports
    "none-achieved" (threshold None).
    """
    targets = grid.target_grid
    if targets[0] != 0.0:
        raise ValueError("grid must include the independence level "
                         "(target_r2 = 0)")
    t = critical_value(grid, 0, alpha)
    minp = np.array([
        min(_rejection_fraction(grid.scores[f, x1], t)
            for f in range(grid.n_functions))
        for x1 in range(grid.n_levels)])
    need = 1.0 - beta
    threshold = None
    for d in range(grid.n_levels - 1):  # last index has a vacuous suffix
        if np.all(minp[d + 1:] >= need):
            threshold = float(targets[d])
            break
    return DetectionReport(alpha, beta, threshold, tuple(float(p)
                                                         for p in minp))
