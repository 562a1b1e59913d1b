"""Noisy functional relationship generators and noise calibration.

A relationship is a triple (function, marginal design, noise model).  The
harness evaluates statistics on samples drawn from these relationships at
noise levels calibrated so the population R^2 against the generating function
hits a uniform grid of targets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .measures import Sample
from .seeds import derive_seed

_FINE_GRID_POINTS = 10_001


class DegenerateRelationshipError(ValueError):
    """The generating function is constant: R^2 is undefined."""


class CalibrationError(RuntimeError):
    """Noise calibration failed to bracket or converge."""


@dataclass(frozen=True)
class FunctionSpec:
    """A generating function f : [0,1] -> R from the catalog."""

    id: str
    formula: str
    fn: Callable[[np.ndarray], np.ndarray]

    @property
    def display_range(self) -> tuple[float, float]:
        y = self.fn(_fine_grid())
        return float(y.min()), float(y.max())


@dataclass(frozen=True)
class MarginalDesign:
    kind: str  # 'uniform-random' | 'arc-length-equispaced'
    n: int

    def __post_init__(self):
        if self.kind not in ("uniform-random", "arc-length-equispaced"):
            raise ValueError(f"unknown marginal kind: {self.kind!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")


@dataclass(frozen=True)
class NoiseModel:
    kind: str  # 'y-only' | 'xy-iid'
    sigma: float

    def __post_init__(self):
        if self.kind not in ("y-only", "xy-iid"):
            raise ValueError(f"unknown noise kind: {self.kind!r}")
        if not (self.sigma >= 0.0):  # also rejects NaN
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class RelationshipModel:
    function: FunctionSpec
    marginal: MarginalDesign
    noise: NoiseModel


@dataclass(frozen=True)
class CalibratedLevel:
    """A noise level solved so the population R^2 matches a grid target."""

    target_r2: float
    sigma: float
    achieved_r2: float
    tolerance: float

    def __post_init__(self):
        if abs(self.achieved_r2 - self.target_r2) > self.tolerance:
            raise ValueError("achieved_r2 outside tolerance of target_r2")


# ---------------------------------------------------------------------------
# Function catalog
# ---------------------------------------------------------------------------

def _f_linear(x):
    return np.asarray(x, dtype=float).copy()


def _f_parabolic(x):
    return 4.0 * (x - 0.5) ** 2


def _f_cubic(x):
    return (2.0 * x - 1.0) ** 3


def _f_fourth_root(x):
    return np.asarray(x, dtype=float) ** 0.25


def _f_sigmoid(x):
    return 1.0 / (1.0 + np.exp(-20.0 * (x - 0.5)))


def _f_step(x):
    return (np.asarray(x) > 0.5).astype(float)


def _f_spike(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0.1, 10.0 * x, (10.0 / 9.0) * (1.0 - x))


def _f_sine_low(x):
    return np.sin(4.0 * np.pi * x)


def _f_sine_high(x):
    return np.sin(16.0 * np.pi * x)


def _f_sine_varying(x):
    return np.sin(5.0 * np.pi * x * (1.0 + x))


def _f_cosine_high(x):
    return np.cos(14.0 * np.pi * x)


def _f_linear_periodic_low(x):
    return x + np.sin(4.0 * np.pi * x) / 4.0


def _f_linear_periodic_high(x):
    return x + np.sin(16.0 * np.pi * x) / 8.0


def _f_exponential(x):
    return 2.0 ** (10.0 * x) / 2.0 ** 10


def _f_decaying_oscillation(x):
    return np.exp(-2.0 * x) * np.sin(8.0 * np.pi * x)


def _f_lopsided_l(x):
    x = np.asarray(x, dtype=float)
    return np.minimum(1.0, 50.0 * x) * (1.0 - x)


_CATALOG_DEFS = (
    ("linear", "x", _f_linear),
    ("parabolic", "4*(x-1/2)^2", _f_parabolic),
    ("cubic", "(2*x-1)^3", _f_cubic),
    ("fourth-root", "x^(1/4)", _f_fourth_root),
    ("sigmoid", "1/(1+exp(-20*(x-1/2)))", _f_sigmoid),
    ("step", "1[x>1/2]", _f_step),
    ("spike", "10*x if x<=0.1 else (10/9)*(1-x)", _f_spike),
    ("sine-low", "sin(4*pi*x)", _f_sine_low),
    ("sine-high", "sin(16*pi*x)", _f_sine_high),
    ("sine-varying", "sin(5*pi*x*(1+x))", _f_sine_varying),
    ("cosine-high", "cos(14*pi*x)", _f_cosine_high),
    ("linear-periodic-low", "x+sin(4*pi*x)/4", _f_linear_periodic_low),
    ("linear-periodic-high", "x+sin(16*pi*x)/8", _f_linear_periodic_high),
    ("exponential", "2^(10*x)/2^10", _f_exponential),
    ("decaying-oscillation", "exp(-2*x)*sin(8*pi*x)", _f_decaying_oscillation),
    ("lopsided-l", "min(1,50*x)*(1-x)", _f_lopsided_l),
)

_FUNCTIONS: dict[str, FunctionSpec] = {
    fid: FunctionSpec(fid, formula, fn) for fid, formula, fn in _CATALOG_DEFS
}


def default_catalog() -> list[FunctionSpec]:
    """The 16 default generating functions, in deterministic order.

    Chosen to span monotone, non-monotone, oscillatory, and abrupt shapes.
    """
    return [_FUNCTIONS[fid] for fid, _, _ in _CATALOG_DEFS]


def get_function(fid: str) -> FunctionSpec:
    try:
        return _FUNCTIONS[fid]
    except KeyError:
        raise KeyError(f"unknown function id: {fid!r}") from None


def register_function(spec: FunctionSpec) -> None:
    """Register an additional generating function (id must be new)."""
    if spec.id in _FUNCTIONS:
        raise ValueError(f"function id already registered: {spec.id!r}")
    _FUNCTIONS[spec.id] = spec


@lru_cache(maxsize=1)
def _fine_grid() -> np.ndarray:
    return np.linspace(0.0, 1.0, _FINE_GRID_POINTS)


# ---------------------------------------------------------------------------
# Marginal designs
# ---------------------------------------------------------------------------

@lru_cache(maxsize=128)
def _arc_length_table(fid: str) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative polyline arc length of (x, f(x)) on the fine grid.

    Arc length is taken along the polyline of the fine grid, which stays
    well defined for step-like functions with no pointwise derivative.
    """
    grid = _fine_grid()
    y = get_function(fid).fn(grid)
    seg = np.hypot(np.diff(grid), np.diff(y))
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    return grid, cum


def arc_length_design(function: FunctionSpec, n: int) -> np.ndarray:
    """n x-values in [0,1] equally spaced along the graph of f."""
    if n < 2:
        raise ValueError("n must be >= 2")
    grid, cum = _arc_length_table(function.id)
    targets = np.linspace(0.0, cum[-1], n)
    xs = np.interp(targets, cum, grid)
    xs[0] = 0.0
    xs[-1] = 1.0
    return xs


def _design_points(function: FunctionSpec, marginal: MarginalDesign,
                   rng: Optional[np.random.Generator]) -> np.ndarray:
    if marginal.kind == "uniform-random":
        if rng is None:
            raise ValueError("uniform-random design needs an RNG")
        return rng.random(marginal.n)
    return arc_length_design(function, marginal.n)


# ---------------------------------------------------------------------------
# Sample generation
# ---------------------------------------------------------------------------

def generate_sample(model: RelationshipModel,
                    seed: int) -> tuple[Sample, Sample]:
    """Draw one sample from the relationship; also return its noiseless twin.

    Returns ``(observed, noiseless)`` where ``noiseless`` is (x0, f(x0)) at
    the underlying design points.  Output is bit-identical for identical
    (model, seed).  ``sigma = inf`` encodes the independence level: y is
    standard normal noise unrelated to x (and for 'xy-iid' the x coordinate
    gets unit-variance noise as well).
    """
    rng = np.random.default_rng(seed)
    x0 = _design_points(model.function, model.marginal, rng)
    f0 = model.function.fn(x0)
    sigma = model.noise.sigma
    n = model.marginal.n
    if math.isinf(sigma):
        if model.noise.kind == "xy-iid":
            x_obs = x0 + rng.standard_normal(n)
        else:
            x_obs = x0
        y_obs = rng.standard_normal(n)
    else:
        if model.noise.kind == "xy-iid":
            x_obs = x0 + sigma * rng.standard_normal(n)
        else:
            x_obs = x0
        y_obs = f0 + sigma * rng.standard_normal(n)
    return Sample(x_obs, y_obs), Sample(x0, f0)


# ---------------------------------------------------------------------------
# Population R^2 and calibration
# ---------------------------------------------------------------------------

def _design_variance(function: FunctionSpec,
                     marginal: MarginalDesign) -> float:
    """Population variance of f(X) under the marginal design.

    For arc-length designs this is the variance over the n fixed design
    points (exactly the population the samples are drawn from); for
    uniform-random X it is computed on the fine grid.
    """
    if marginal.kind == "arc-length-equispaced":
        vals = function.fn(arc_length_design(function, marginal.n))
    else:
        vals = function.fn(_fine_grid())
    v = float(np.var(vals))
    if v < 1e-14:
        raise DegenerateRelationshipError(
            f"function {function.id!r} is constant under this design")
    return v


def population_r2(model: RelationshipModel, mode: str = "denoised-design",
                  mc_points: int = 200_000, seed: int = 0) -> float:
    """Population R^2 of the relationship against its generating function.

    ``denoised-design`` correlates Y with f at the noiseless design points;
    since the additive y-noise is independent of f(X) this is the exact ratio
    Var(f(X)) / (Var(f(X)) + sigma^2) for both noise kinds.  ``observed-x``
    correlates Y with f at the observed (noisy) x-coordinate, which requires
    Monte Carlo when the noise model perturbs x.
    """
    if mode not in ("denoised-design", "observed-x"):
        raise ValueError(f"unknown mode: {mode!r}")
    sigma = model.noise.sigma
    if math.isinf(sigma):
        return 0.0
    if sigma == 0.0:
        _design_variance(model.function, model.marginal)  # degeneracy check
        return 1.0
    if mode == "denoised-design" or model.noise.kind == "y-only":
        vf = _design_variance(model.function, model.marginal)
        return vf / (vf + sigma * sigma)
    if mc_points < 10_000:
        raise ValueError("mc_points must be >= 10^4")
    x0, e1, e2 = _mc_draws(model.function, model.marginal, mc_points, seed)
    return _mc_r2_observed_x(model.function, x0, e1, e2, sigma)


def _mc_draws(function: FunctionSpec, marginal: MarginalDesign,
              mc_points: int, seed: int):
    """Design points and standard-normal noise draws for Monte Carlo R^2."""
    rng = np.random.default_rng(seed)
    if marginal.kind == "uniform-random":
        x0 = rng.random(mc_points)
    else:
        design = arc_length_design(function, marginal.n)
        reps = -(-mc_points // marginal.n)  # ceil
        x0 = np.tile(design, reps)[:mc_points]
    e1 = rng.standard_normal(mc_points)
    e2 = rng.standard_normal(mc_points)
    return x0, e1, e2


def _mc_r2_observed_x(function: FunctionSpec, x0, e1, e2,
                      sigma: float) -> float:
    y = function.fn(x0) + sigma * e2
    g = function.fn(x0 + sigma * e1)
    gc = g - g.mean()
    yc = y - y.mean()
    denom = float(gc @ gc) * float(yc @ yc)
    if denom <= 0.0:
        raise DegenerateRelationshipError(
            f"degenerate predictor for function {function.id!r}")
    r = float(gc @ yc) / math.sqrt(denom)
    return r * r


def calibrate_sigma(function: FunctionSpec, marginal: MarginalDesign,
                    noise_kind: str, target_r2: float,
                    mode: str = "denoised-design", tol: float = 0.002,
                    seed: int = 0, max_iter: int = 200,
                    mc_points: int = 200_000) -> CalibratedLevel:
    """Bisect on sigma until the population R^2 matches ``target_r2``.

    ``target_r2 = 1`` returns sigma = 0 exactly.  The Monte Carlo path uses
    common random numbers across bisection iterations (one set of draws per
    calibration, derived deterministically from ``seed``), so the achieved
    value is a continuous monotone function of sigma and bisection converges.
    """
    if not 0.0 < target_r2 <= 1.0:
        raise ValueError("target_r2 must be in (0, 1]")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    NoiseModel(noise_kind, 0.0)  # validates the kind

    if target_r2 == 1.0:
        _design_variance(function, marginal)
        return CalibratedLevel(1.0, 0.0, 1.0, tol)

    analytic = mode == "denoised-design" or noise_kind == "y-only"
    if analytic:
        vf = _design_variance(function, marginal)

        def achieved(s: float) -> float:
            return vf / (vf + s * s)
    else:
        x0, e1, e2 = _mc_draws(function, marginal, mc_points,
                               derive_seed(seed, 0xCA11))

        def achieved(s: float) -> float:
            return _mc_r2_observed_x(function, x0, e1, e2, s)

    if achieved(0.0) < target_r2:
        raise CalibrationError("R^2 at sigma=0 is below target")
    hi = 1.0
    for _ in range(200):
        if achieved(hi) < target_r2:
            break
        hi *= 2.0
    else:
        raise CalibrationError("failed to bracket target R^2")
    lo = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r2 = achieved(mid)
        if abs(r2 - target_r2) <= tol:
            return CalibratedLevel(target_r2, mid, r2, tol)
        if r2 > target_r2:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"bisection did not converge for {function.id!r} at "
        f"target {target_r2}")


def independence_level(tol: float = 0.002) -> CalibratedLevel:
    """The R^2 = 0 grid level, represented by independent noise (sigma=inf)."""
    return CalibratedLevel(0.0, math.inf, 0.0, tol)


def calibrate_grid(function: FunctionSpec, marginal: MarginalDesign,
                   noise_kind: str, levels: int = 41,
                   mode: str = "denoised-design", tol: float = 0.002,
                   seed: int = 0) -> list[CalibratedLevel]:
    """Calibrate a uniform R^2 grid of ``levels`` targets in [0, 1]."""
    if levels < 2:
        raise ValueError("need at least 2 levels")
    targets = np.linspace(0.0, 1.0, levels)
    out = [independence_level(tol)]
    for i, t in enumerate(targets[1:], start=1):
        out.append(calibrate_sigma(function, marginal, noise_kind,
                                   float(t), mode=mode, tol=tol,
                                   seed=derive_seed(seed, i)))
    return out
