"""Dependence statistics and the registry that dispatches to them.

Every statistic takes a bivariate :class:`Sample` and returns a scalar score.
The registry lets the Monte Carlo harness treat all statistics uniformly and
is also the extension point for plugging in external statistics (e.g. a MIC_e
implementation) without touching the rest of the pipeline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._core import kernels


class DegenerateSampleError(ValueError):
    """A coordinate is constant where the statistic requires variance."""


class UnknownStatisticError(KeyError):
    """Statistic id not present in the registry."""


@dataclass(frozen=True)
class Sample:
    """A bivariate sample of n >= 2 finite points."""

    xs: np.ndarray
    ys: np.ndarray

    def __init__(self, xs, ys):
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        ys = np.ascontiguousarray(ys, dtype=np.float64)
        if xs.ndim != 1 or ys.ndim != 1:
            raise ValueError("coordinates must be one-dimensional")
        if xs.shape[0] != ys.shape[0]:
            raise ValueError("xs and ys must have equal length")
        if xs.shape[0] < 2:
            raise ValueError("need at least 2 points")
        if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
            raise ValueError("all coordinates must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]


def pearson_r(sample: Sample) -> float:
    """Sample Pearson correlation; raises on a constant coordinate."""
    x, y = sample.xs, sample.ys
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise DegenerateSampleError("Pearson correlation undefined for a "
                                    "constant coordinate")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson_r2(sample: Sample) -> float:
    """Squared sample Pearson correlation, in [0, 1]."""
    r = pearson_r(sample)
    return r * r


def distance_correlation(sample: Sample) -> float:
    """Sample distance correlation (Szekely et al.), in [0, 1].

    Direct O(n^2) double centering of the pairwise distance matrices.  A
    constant coordinate has zero distance variance, for which the natural
    limiting convention is a score of 0.
    """
    return float(kernels.dcor(sample.xs, sample.ys))


def kraskov_mi(sample: Sample, k: int = 6, jitter: bool = False,
               jitter_seed: int = 0) -> float:
    """Kraskov k-NN mutual information estimate, in nats.

    Variant "(1)" of the estimator: max-norm distance to the k-th nearest
    joint neighbor, marginal neighbor counts with strict inequality.  The
    estimate may be negative for weakly dependent data; no clamping is done
    here.

    Exact duplicate points can bias the neighbor counts.  ``jitter=True``
    adds a deterministic perturbation of magnitude 1e-10 times the coordinate
    range before estimating; it is off by default.
    """
    if not 1 <= k < sample.n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={sample.n}")
    x, y = sample.xs, sample.ys
    if jitter:
        rng = np.random.default_rng(jitter_seed)
        xr = float(np.ptp(x)) or 1.0
        yr = float(np.ptp(y)) or 1.0
        x = x + 1e-10 * xr * rng.standard_normal(x.shape[0])
        y = y + 1e-10 * yr * rng.standard_normal(y.shape[0])
    return float(kernels.ksg_mi(x, y, int(k)))


def linfoot_normalize(mi_nats: float) -> float:
    """Map mutual information (nats) to [0, 1) via 1 - exp(-2 I).

    For bivariate normals this equals rho^2, so it puts MI on the same scale
    as the squared correlation.  Negative estimates clamp to 0.
    """
    if mi_nats <= 0.0:
        return 0.0
    return float(-math.expm1(-2.0 * mi_nats))


NORMALIZERS: dict[str, Callable[[float], float]] = {
    "linfoot": linfoot_normalize,
}

_REGISTRY: dict[str, Callable[..., float]] = {}


def register_statistic(stat_id: str, fn: Callable[..., float]) -> None:
    """Register a statistic callable ``fn(sample, **params) -> float``."""
    if stat_id in _REGISTRY:
        raise ValueError(f"statistic id already registered: {stat_id!r}")
    _REGISTRY[stat_id] = fn


def registered_statistics() -> tuple[str, ...]:
    return tuple(_REGISTRY)


register_statistic("pearson_r", pearson_r)
register_statistic("pearson_r2", pearson_r2)
register_statistic("distance_correlation", distance_correlation)
register_statistic("kraskov_mi", kraskov_mi)


@dataclass(frozen=True)
class StatisticDescriptor:
    """A statistic id plus its parameters and optional score normalizer."""

    id: str
    params: dict = field(default_factory=dict)
    output_unit: str = "unit-interval"
    normalizer: Optional[str] = None

    def __post_init__(self):
        if self.output_unit not in ("unit-interval", "nats"):
            raise ValueError(f"unknown output_unit: {self.output_unit!r}")
        if self.normalizer is not None and self.normalizer not in NORMALIZERS:
            raise ValueError(f"unknown normalizer: {self.normalizer!r}")

    @property
    def label(self) -> str:
        """Stable name used for output directories and archives."""
        return self.id if self.normalizer is None \
            else f"{self.id}_{self.normalizer}"


def evaluate(descriptor: StatisticDescriptor, sample: Sample) -> float:
    """Dispatch to the named statistic and apply its declared normalizer."""
    try:
        fn = _REGISTRY[descriptor.id]
    except KeyError:
        raise UnknownStatisticError(descriptor.id) from None
    score = fn(sample, **descriptor.params)
    if descriptor.normalizer is not None:
        score = NORMALIZERS[descriptor.normalizer](score)
    return float(score)
