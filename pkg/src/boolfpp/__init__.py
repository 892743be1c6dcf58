"""First-passage percolation in the Poisson Boolean model."""

from .geometry import PolyPath, build_skeleton, local_time, path_time, segment_vacant_time
from .measures import AdmissibleMap, MeasureSpec, greedy_integral, inverse_map, pushforward
from .sampler import Configuration, Window, sample_base, sample_config
from .stats import EstimateReport
from .travel import TerminalSet, radial_time, t_square, travel_time

__all__ = [
    "AdmissibleMap",
    "Configuration",
    "EstimateReport",
    "MeasureSpec",
    "PolyPath",
    "TerminalSet",
    "Window",
    "build_skeleton",
    "greedy_integral",
    "inverse_map",
    "local_time",
    "path_time",
    "pushforward",
    "radial_time",
    "sample_base",
    "sample_config",
    "segment_vacant_time",
    "t_square",
    "travel_time",
]
