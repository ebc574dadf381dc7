"""Half grid cycle sweeps, cycle aggregates, the loss model and scheme comparison."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .metrics import ANALYTIC, NUMERIC, TABLE_FIELDS, IntervalMetrics, analytic_metrics, numeric_metrics
from .params import (
    DerivedParams,
    DeviceParams,
    InfeasibleOperatingPoint,
    IntervalPlan,
    ModulationScheme,
    Scheme,
    TimingOverflow,
    plan_at_angle,
    plan_interval,
    validate_soft_switching,
)
from .waveforms import fmt, synth_interval

SWEEP_COLUMNS = (
    "k", "omega_tau_deg", "vg_V", "ig_A", "d1", "d2", "alpha", "beta", "ilk_pk_A", "icir_A",
    "ilk_rms_A", "s_ac_rms_A", "d_ac_avg_A", "s_dc_rms_A", "d_dc_avg_A", "origin", "scheme",
)

# Angles used for the peak-current ratio.
ZERO_CROSSING_DEG = 10.0
GRID_PEAK_DEG = 90.0

EFFICIENCY_DISCLAIMER = (
    "efficiency is a model estimate from placeholder device coefficients; "
    "absolute watts are not a prediction of hardware losses"
)


@dataclass(frozen=True)
class CycleProfile:
    derived: DerivedParams
    scheme: ModulationScheme
    plans: tuple[IntervalPlan, ...]
    analytic: tuple[IntervalMetrics, ...]
    numeric: tuple[Optional[IntervalMetrics], ...]   # None where not synthesized
    power: np.ndarray          # delivered power per interval (W), nan where not synthesized
    hard_edges: np.ndarray     # hard-switched transitions per interval
    mask: np.ndarray           # True = excluded from aggregates
    reasons: tuple[Optional[str], ...]

    def __len__(self) -> int:
        return len(self.plans)

    @property
    def has_numeric(self) -> bool:
        return any(m is not None for m in self.numeric)

    def metrics(self, origin: str) -> tuple[Optional[IntervalMetrics], ...]:
        if origin == NUMERIC:
            return self.numeric
        if origin == ANALYTIC:
            return self.analytic
        raise ValueError(f"unknown origin {origin!r}")

    def default_origin(self) -> str:
        return NUMERIC if self.has_numeric else ANALYTIC

    def field(self, name: str, origin: Optional[str] = None) -> np.ndarray:
        """Per-interval values of a metric, nan where missing."""
        rows = self.metrics(origin or self.default_origin())
        return np.array([np.nan if m is None else m.get(name) for m in rows])

    def plan_field(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.plans], dtype=float)

    def reason_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.reasons:
            if r is not None:
                counts[r] = counts.get(r, 0) + 1
        return dict(sorted(counts.items()))


def _hard_edges(plan: IntervalPlan, scheme: ModulationScheme, derived: DerivedParams) -> int:
    # Each leg loses its ZCS turn-off when the peak cannot reverse the switch current.
    if plan.ig == 0.0:
        return 0
    report = validate_soft_switching(plan, scheme, derived)
    return 0 if report.zcs else 2


def sweep_half_cycle(derived: DerivedParams, scheme: ModulationScheme, *,
                     analytic_only: bool = False) -> CycleProfile:
    """Plan, synthesize and measure every interval of one half grid cycle.

    SPSM is evaluated from its closed-form column only. Intervals that fail
    synthesis keep their analytic row and are masked with the failure reason.
    """
    count = derived.intervals_per_half_cycle
    synthesize = not analytic_only and scheme.tag is not Scheme.SPSM
    plans, analytic, numeric, reasons = [], [], [], []
    power = np.full(count, np.nan)
    hard = np.zeros(count, dtype=int)
    for k in range(count):
        plan = plan_interval(derived, scheme, k)
        reason = plan.degenerate_reason
        num = None
        if synthesize:
            try:
                nw = synth_interval(plan, derived)
            except TimingOverflow:
                reason = reason or "timing-overflow"
            except InfeasibleOperatingPoint:
                reason = reason or "zcs-infeasible"
            else:
                num = numeric_metrics(nw, plan)
                power[k] = nw.delivered_power()
        plans.append(plan)
        analytic.append(analytic_metrics(plan, derived))
        numeric.append(num)
        reasons.append(reason)
        hard[k] = _hard_edges(plan, scheme, derived)
    mask = np.array([r is not None for r in reasons], dtype=bool)
    return CycleProfile(derived, scheme, tuple(plans), tuple(analytic), tuple(numeric),
                        power, hard, mask, tuple(reasons))


@dataclass(frozen=True)
class CycleMetrics:
    scheme: Scheme
    origin: str
    ilk_rms: float
    s_ac_rms: float
    d_ac_avg: float
    s_dc_rms: float
    d_dc_avg: float
    il_rms: float
    i_cir_rms: float
    ilk_peak: float
    peak_ratio: float        # peak winding current at the zero-crossing angle over the grid peak
    hard_edges_per_interval: float
    delivered_power: Optional[float]   # sum over unmasked intervals divided by all intervals (W)
    intervals: int
    masked: int


def _root_mean_square(values: np.ndarray) -> float:
    return math.sqrt(float(np.mean(values * values)))


def aggregate(profile: CycleProfile, origin: Optional[str] = None) -> CycleMetrics:
    """Grid-cycle figures over the unmasked intervals."""
    origin = origin or profile.default_origin()
    rows = profile.metrics(origin)
    keep = [i for i, m in enumerate(rows) if not profile.mask[i] and m is not None]
    if not keep:
        raise ValueError(f"{profile.scheme.tag.value}: every interval is masked; nothing to aggregate")
    sel = [rows[i] for i in keep]

    def cyc_rms(name):
        return _root_mean_square(np.array([m.get(name) for m in sel]))

    def cyc_avg(name):
        return float(np.mean([m.get(name) for m in sel]))

    d = profile.derived
    pk_zero = plan_at_angle(d, profile.scheme, ZERO_CROSSING_DEG).i_lk_pk
    pk_peak = plan_at_angle(d, profile.scheme, GRID_PEAK_DEG).i_lk_pk
    delivered = None
    if origin == NUMERIC:
        p = np.where(profile.mask | np.isnan(profile.power), 0.0, profile.power)
        delivered = float(np.sum(p)) / len(profile)
    return CycleMetrics(
        scheme=profile.scheme.tag,
        origin=origin,
        ilk_rms=cyc_rms("ilk_rms"),
        s_ac_rms=cyc_rms("s_ac_rms"),
        d_ac_avg=cyc_avg("d_ac_avg"),
        s_dc_rms=cyc_rms("s_dc_rms"),
        d_dc_avg=cyc_avg("d_dc_avg"),
        il_rms=cyc_rms("il_rms"),
        i_cir_rms=cyc_rms("i_cir"),
        ilk_peak=float(max(p.i_lk_pk for p in profile.plans)),
        peak_ratio=pk_zero / pk_peak if pk_peak > 0 else math.nan,
        hard_edges_per_interval=float(np.mean(profile.hard_edges[keep])),
        delivered_power=delivered,
        intervals=len(profile),
        masked=int(np.count_nonzero(profile.mask)),
    )


@dataclass(frozen=True)
class LossBreakdown:
    ac_switch_loss: float
    dc_switch_loss: float
    hft_loss: float              # copper + series inductor + core placeholder
    boost_inductor_loss: float
    residual_switching_loss: float
    hft_copper_loss: float       # transformer windings only
    efficiency: float
    po: float

    @property
    def total(self) -> float:
        return (self.ac_switch_loss + self.dc_switch_loss + self.hft_loss
                + self.boost_inductor_loss + self.residual_switching_loss)


def loss_report(metrics: CycleMetrics, dev: DeviceParams, derived: DerivedParams) -> LossBreakdown:
    """Conduction, diode, copper and residual switching losses at cycle level.

    Each ac leg has one high-frequency switch and one series switch held on
    for the half cycle; the latter carries the whole boost inductor current.
    """
    n = derived.n
    ac = (2 * dev.rds_on_ac * (metrics.s_ac_rms ** 2 + metrics.il_rms ** 2)
          + 2 * dev.vf_ac * metrics.d_ac_avg)
    dc = 4 * dev.rds_on_dc * metrics.s_dc_rms ** 2 + 4 * dev.vf_dc * metrics.d_dc_avg
    i_sec = metrics.ilk_rms / n
    copper = dev.r_winding_ac * metrics.ilk_rms ** 2 + dev.r_winding_dc * i_sec ** 2
    hft = copper + dev.r_series * i_sec ** 2 + dev.p_core_fixed
    boost = 2 * dev.r_boost * metrics.il_rms ** 2
    residual = dev.e_hard_switch * derived.params.fsw * metrics.hard_edges_per_interval
    po = derived.params.po
    total = ac + dc + hft + boost + residual
    return LossBreakdown(ac, dc, hft, boost, residual, copper, po / (po + total), po)


@dataclass(frozen=True)
class SchemeResult:
    profile: CycleProfile
    cycle: CycleMetrics
    losses: LossBreakdown

    @property
    def power_error(self) -> Optional[float]:
        """Relative deviation of delivered power from the rated output."""
        if self.cycle.delivered_power is None:
            return None
        po = self.losses.po
        return (self.cycle.delivered_power - po) / po


@dataclass(frozen=True)
class ComparisonReport:
    results: tuple[SchemeResult, ...]
    analytic_only: bool = False
    notes: tuple[str, ...] = field(default=())

    def result(self, tag: Scheme | str) -> SchemeResult:
        tag = Scheme.parse(tag) if isinstance(tag, str) else tag
        for r in self.results:
            if r.cycle.scheme is tag:
                return r
        raise KeyError(tag.value)

    def rows(self) -> list[tuple[str, list[str]]]:
        def num(x):
            return "-" if x is None else fmt(x)

        table = [
            ("origin", [r.cycle.origin for r in self.results]),
            ("intervals masked", [f"{r.cycle.masked}/{r.cycle.intervals}" for r in self.results]),
            ("ilk_rms_A", [num(r.cycle.ilk_rms) for r in self.results]),
            ("s_ac_rms_A", [num(r.cycle.s_ac_rms) for r in self.results]),
            ("d_ac_avg_A", [num(r.cycle.d_ac_avg) for r in self.results]),
            ("s_dc_rms_A", [num(r.cycle.s_dc_rms) for r in self.results]),
            ("d_dc_avg_A", [num(r.cycle.d_dc_avg) for r in self.results]),
            ("il_rms_A", [num(r.cycle.il_rms) for r in self.results]),
            ("icir_rms_A", [num(r.cycle.i_cir_rms) for r in self.results]),
            ("ilk_peak_A", [num(r.cycle.ilk_peak) for r in self.results]),
            ("peak_ratio_10_90", [num(r.cycle.peak_ratio) for r in self.results]),
            ("ac_switch_loss_W", [num(r.losses.ac_switch_loss) for r in self.results]),
            ("dc_switch_loss_W", [num(r.losses.dc_switch_loss) for r in self.results]),
            ("hft_loss_W", [num(r.losses.hft_loss) for r in self.results]),
            ("hft_copper_loss_W", [num(r.losses.hft_copper_loss) for r in self.results]),
            ("boost_inductor_loss_W", [num(r.losses.boost_inductor_loss) for r in self.results]),
            ("residual_switching_loss_W", [num(r.losses.residual_switching_loss) for r in self.results]),
            ("total_loss_W", [num(r.losses.total) for r in self.results]),
            ("efficiency", [num(r.losses.efficiency) for r in self.results]),
            ("delivered_power_W", [num(r.cycle.delivered_power) for r in self.results]),
            ("power_error", [num(r.power_error) for r in self.results]),
        ]
        return table

    def to_text(self) -> str:
        header = ["quantity"] + [r.cycle.scheme.value for r in self.results]
        body = [[name] + values for name, values in self.rows()]
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in [header] + body]
        lines.append("")
        lines.append("note: " + EFFICIENCY_DISCLAIMER)
        lines.extend("note: " + n for n in self.notes)
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(["quantity"] + [r.cycle.scheme.value for r in self.results]) + "\n")
        for name, values in self.rows():
            out.write(",".join([name] + values) + "\n")
        return out.getvalue()


def compare(derived: DerivedParams, schemes: Sequence[ModulationScheme], dev: Optional[DeviceParams] = None, *,
            analytic_only: bool = False) -> ComparisonReport:
    if len(schemes) < 2:
        raise ValueError("compare needs at least two schemes")
    tags = [s.tag for s in schemes]
    if len(set(tags)) != len(tags):
        raise ValueError("compare: each scheme may appear only once")
    dev = dev or DeviceParams()
    results = []
    notes = []
    for scheme in schemes:
        profile = sweep_half_cycle(derived, scheme, analytic_only=analytic_only)
        cycle = aggregate(profile)
        results.append(SchemeResult(profile, cycle, loss_report(cycle, dev, derived)))
        if scheme.tag is Scheme.SPSM:
            clamped = sum(1 for m in profile.analytic if m.clamped)
            if clamped:
                notes.append(f"spsm: {clamped} intervals had a negative closed-form radicand, floored at zero")
        reasons = profile.reason_counts()
        if reasons:
            counts = ", ".join(f"{k}={v}" for k, v in reasons.items())
            notes.append(f"{scheme.tag.value}: masked intervals ({counts}) excluded from cycle figures")
    return ComparisonReport(tuple(results), analytic_only, tuple(notes))


def sweep_rows(profile: CycleProfile) -> list[list[str]]:
    """CSV rows: one numeric row (when synthesized) and one analytic row per interval."""
    rows = []
    for k, plan in enumerate(profile.plans):
        for m in (profile.numeric[k], profile.analytic[k]):
            if m is None:
                continue
            rows.append([
                str(plan.k), fmt(math.degrees(plan.omega_tau)), fmt(plan.vg), fmt(plan.ig),
                fmt(plan.d1), fmt(plan.d2), fmt(plan.alpha), fmt(plan.beta),
                fmt(plan.i_lk_pk), fmt(m.i_cir),
                *(fmt(m.get(f)) for f in TABLE_FIELDS),
                m.origin, plan.scheme.value,
            ])
    return rows


def sweep_csv(profile: CycleProfile) -> str:
    out = io.StringIO()
    out.write(",".join(SWEEP_COLUMNS) + "\n")
    for row in sweep_rows(profile):
        out.write(",".join(row) + "\n")
    return out.getvalue()


@dataclass(frozen=True)
class Deviation:
    name: str
    max_abs: float     # largest |analytic - numeric| / numeric
    mean_signed: float  # mean (analytic - numeric) / numeric; sign shows a systematic excess or deficit
    worst_k: int


def deviation_summary(profile: CycleProfile) -> list[Deviation]:
    """Closed-form versus waveform deviation per metric over unmasked synthesized intervals."""
    out = []
    keep = [k for k in range(len(profile)) if not profile.mask[k] and profile.numeric[k] is not None]
    if not keep:
        return out
    for name in TABLE_FIELDS:
        rel = []
        for k in keep:
            a, x = profile.analytic[k].get(name), profile.numeric[k].get(name)
            if x == 0.0:
                if a == 0.0:
                    continue
                rel.append(math.inf)
            else:
                rel.append((a - x) / abs(x))
        if not rel:
            out.append(Deviation(name, 0.0, 0.0, keep[0]))
            continue
        rel_arr = np.array(rel)
        worst = int(np.argmax(np.abs(rel_arr)))
        out.append(Deviation(name, float(np.abs(rel_arr[worst])), float(np.mean(rel_arr)), keep[worst]))
    return out
