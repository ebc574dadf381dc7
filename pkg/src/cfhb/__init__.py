"""Switching-interval simulator for a current-fed half-bridge AC-DC converter."""

from .params import (
    ConverterParams,
    DerivedParams,
    DeviceParams,
    InfeasibleOperatingPoint,
    ModulationScheme,
    Scheme,
    TimingOverflow,
    ZcsInfeasible,
    derive,
    plan_at_angle,
    plan_interval,
    validate_soft_switching,
)
from .waveforms import PiecewiseLinearWaveform, build_timeline, synth_interval
from .metrics import IntervalMetrics, analytic_metrics, numeric_metrics
from .sweep import CycleMetrics, CycleProfile, aggregate, compare, loss_report, sweep_half_cycle

__version__ = "0.1.0"

__all__ = [
    "ConverterParams",
    "CycleMetrics",
    "CycleProfile",
    "DerivedParams",
    "DeviceParams",
    "InfeasibleOperatingPoint",
    "IntervalMetrics",
    "ModulationScheme",
    "PiecewiseLinearWaveform",
    "Scheme",
    "TimingOverflow",
    "ZcsInfeasible",
    "aggregate",
    "analytic_metrics",
    "build_timeline",
    "compare",
    "derive",
    "loss_report",
    "numeric_metrics",
    "plan_at_angle",
    "plan_interval",
    "sweep_half_cycle",
    "synth_interval",
    "validate_soft_switching",
]
