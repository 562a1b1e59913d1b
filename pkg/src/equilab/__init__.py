"""equilab: how well does a dependence statistic pin down relationship strength?

Monte Carlo harness that quantifies the equitability of measures of
dependence on noisy functional relationships, via interpretable intervals
and statistical power surfaces.
"""

__version__ = "0.1.0"

from ._core import BACKEND
from .measures import (Sample, StatisticDescriptor, distance_correlation,
                       evaluate, kraskov_mi, linfoot_normalize, pearson_r,
                       pearson_r2, register_statistic)
from .relationships import (CalibratedLevel, FunctionSpec, MarginalDesign,
                            NoiseModel, RelationshipModel, arc_length_design,
                            calibrate_grid, calibrate_sigma, default_catalog,
                            generate_sample, population_r2)
from .analysis import (DetectionReport, Interval, IntervalTable, PowerSurface,
                       ScoreGrid, build_score_grid, critical_value,
                       detection_threshold, equitability_summary,
                       interpretable_interval, power_function, power_surface,
                       quantile, reliable_interval, theorem1_consistency,
                       uncertain_set)

__all__ = [
    "__version__", "BACKEND",
    "Sample", "StatisticDescriptor", "pearson_r", "pearson_r2",
    "distance_correlation", "kraskov_mi", "linfoot_normalize", "evaluate",
    "register_statistic",
    "FunctionSpec", "MarginalDesign", "NoiseModel", "RelationshipModel",
    "CalibratedLevel", "default_catalog", "arc_length_design",
    "generate_sample", "population_r2", "calibrate_sigma", "calibrate_grid",
    "ScoreGrid", "Interval", "IntervalTable", "PowerSurface",
    "DetectionReport", "build_score_grid", "quantile", "reliable_interval",
    "interpretable_interval", "equitability_summary", "critical_value",
    "power_function", "power_surface", "uncertain_set",
    "theorem1_consistency", "detection_threshold",
]
