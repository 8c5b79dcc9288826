"""MSE / Age-of-Information trade-off for remote estimation over short packets."""

from .coding import ChannelSpec, SourceVariance, blocklength, make_coding_point
from .errors import (AoiMseError, InfeasibleError, NumericalError, ValidationError)
from .metrics import SystemConfig, TradeoffPoint, avg_aoi, cycle_metrics, evaluate_point
from .montecarlo import SimConfig, simulate
from .pareto import SweepGrid, boundary_curves, pareto_front, sweep
from .process import ProcessModel, ScalarProcess
from .timing import LinkTiming

__all__ = [
    "AoiMseError", "ChannelSpec", "InfeasibleError", "LinkTiming", "NumericalError",
    "ProcessModel", "ScalarProcess", "SimConfig", "SourceVariance", "SweepGrid",
    "SystemConfig", "TradeoffPoint", "ValidationError", "avg_aoi", "blocklength",
    "boundary_curves", "cycle_metrics", "evaluate_point", "make_coding_point",
    "pareto_front", "simulate", "sweep",
]
__version__ = "0.1.0"
