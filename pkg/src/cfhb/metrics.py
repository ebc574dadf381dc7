"""Per-interval RMS and average currents.

Two independent routes: exact integration of the synthesized waveforms
(``numeric_metrics``) and the closed-form current table for each scheme
(``analytic_metrics``). All averages and RMS values are taken over the whole
switching period, not over a device's conduction window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .params import DerivedParams, IntervalPlan, Scheme
from .waveforms import NodeWaveforms, PiecewiseLinearWaveform

NUMERIC = "numeric"
ANALYTIC = "analytic"

TABLE_FIELDS = ("ilk_rms", "s_ac_rms", "d_ac_avg", "s_dc_rms", "d_dc_avg")


@dataclass(frozen=True)
class IntervalMetrics:
    ilk_rms: float      # HFT ac winding
    s_ac_rms: float     # one ac-side high-frequency switch, channel only
    d_ac_avg: float     # its body diode
    s_dc_rms: float     # one dc-side switch, channel
    d_dc_avg: float     # its body diode
    i_cir: float
    il_rms: float       # one boost inductor
    origin: str
    scheme: Scheme
    k: int
    clamped: bool = False   # a closed-form radicand went negative and was floored at zero

    def get(self, name: str) -> float:
        return float(getattr(self, name))


def _check_span(w: PiecewiseLinearWaveform, duration: Optional[float]) -> float:
    if w.times.size < 2 or w.duration <= 0:
        raise ValueError("waveform is empty")
    duration = w.duration if duration is None else duration
    if duration <= 0:
        raise ValueError("duration must be > 0")
    if w.duration > duration * (1 + 1e-12):
        raise ValueError("waveform extends past the averaging duration")
    return duration


def rms_of(w: PiecewiseLinearWaveform, duration: Optional[float] = None) -> float:
    """RMS over ``duration`` using the exact integral of each linear segment."""
    duration = _check_span(w, duration)
    d, a, b = w.segments()
    return math.sqrt(max(float(np.sum(d * (a * a + a * b + b * b))) / 3.0 / duration, 0.0))


def avg_of(w: PiecewiseLinearWaveform, duration: Optional[float] = None) -> float:
    duration = _check_span(w, duration)
    d, a, b = w.segments()
    return float(np.sum(d * (a + b))) / 2.0 / duration


def _quad_mean(*values: float) -> float:
    return math.sqrt(sum(v * v for v in values) / len(values))


def numeric_metrics(nw: NodeWaveforms, plan: Optional[IntervalPlan] = None) -> IntervalMetrics:
    plan = plan or nw.plan
    ts = nw.ts
    s_ac = _quad_mean(rms_of(nw.channel("S1ag"), ts), rms_of(nw.channel("S2ag"), ts))
    d_ac = 0.5 * (abs(avg_of(nw.i_D1ag, ts)) + abs(avg_of(nw.i_D2ag, ts)))
    s_dc = _quad_mean(rms_of(nw.channel("SA"), ts), rms_of(nw.channel("SC"), ts))
    d_dc = 0.5 * (abs(avg_of(nw.i_DA, ts)) + abs(avg_of(nw.i_DC, ts)))
    return IntervalMetrics(
        ilk_rms=rms_of(nw.i_lk, ts),
        s_ac_rms=s_ac,
        d_ac_avg=d_ac,
        s_dc_rms=s_dc,
        d_dc_avg=d_dc,
        i_cir=circulating_current(plan),
        il_rms=_quad_mean(rms_of(nw.i_L1, ts), rms_of(nw.i_L2, ts)),
        origin=NUMERIC,
        scheme=plan.scheme,
        k=plan.k,
    )


def circulating_current(plan: IntervalPlan) -> float:
    """Peak winding current in excess of what the grid current needs."""
    return plan.i_lk_pk - 0.5 * plan.ig


class _Radical:
    """sqrt with negative radicands floored at zero and remembered."""

    def __init__(self):
        self.clamped = False

    def __call__(self, x: float) -> float:
        if x < 0:
            if x < -1e-12:
                self.clamped = True
            return 0.0
        return math.sqrt(x)


def _split_rms(sq: _Radical, ig2_term: float, pk: float, ig: float, pk2_coef: float, cross_coef: float) -> float:
    # Two-line table entries combine in quadrature: ig-part^2 + pk^2*(...) + pk*ig*(...).
    return sq(ig2_term + pk * pk * pk2_coef + pk * ig * cross_coef)


def analytic_metrics(plan: IntervalPlan, derived: DerivedParams, *, peak_consistent: bool = False) -> IntervalMetrics:
    """Closed-form current table for the plan's scheme.

    ``peak_consistent`` evaluates the IDCPSM column through the fixed-peak
    column's structure with the actual peak current; the printed IDCPSM
    column is that expression with peak current equal to ``ig``.
    """
    n = derived.n
    ig, pk = plan.ig, plan.i_lk_pk
    d1, d2, a, b = plan.d1, plan.d2, plan.alpha, plan.beta
    sq = _Radical()
    scheme = plan.scheme

    if scheme is Scheme.IDCPSM and not peak_consistent:
        core = 1 - d1 + 4 * d2 / 3 + a / 3 + 7 * b / 3
        ilk = ig / math.sqrt(2) * sq(core)
        s_ac = ig / 2 * sq(11 / 3 - 10 * d1 / 3 + 4 * d2 + 7 * a / 3 + 17 * b / 3)
        d_ac = ig / 2 * b / 2
        s_dc = ig / (2 * n) * sq(core)
        d_dc = 0.0
    elif scheme in (Scheme.DCPSM, Scheme.IDCPSM):
        ilk = _split_rms(sq, ig * ig / 2 * (1 - d1 + a / 3 + b / 3), pk, ig, 2 * d2 / 3 + 2 * b / 3, b / 3)
        s_ac = _split_rms(sq, ig * ig / 4 * (11 / 3 - 10 * d1 / 3 + 4 * d2 / 3 + 7 * a / 3 + 5 * b / 3),
                          pk, ig, 2 * d2 / 3 + b / 3, 2 * b / 3)
        d_ac = (pk - ig / 2) * b / 2
        if scheme is Scheme.DCPSM:
            s_dc = pk / n * sq(d2 / 3)
            d_dc = ig / (2 * n) * (1 - d1 + a / 2 + b / 2) + pk / n * b / 2
        else:
            s_dc = ilk / (math.sqrt(2) * n)
            d_dc = 0.0
    else:
        ilk = _split_rms(sq, ig * ig / 4 * (5 / 3 - 4 * d1 / 3), pk, ig,
                         2 * d1 / 3 - 1 / 3, 1 / 6 - d1 / 3 + 2 * b / 3)
        s_ac = _split_rms(sq, ig * ig / 4 * (5 / 3 - 4 * d1 / 3), pk, ig,
                          2 * d1 / 3 - 1 / 3 - b / 3, b / 3 - d1 / 3 - 1 / 6)
        d_ac = (pk - ig / 2) * b / 2
        s_dc = _split_rms(sq, ig * ig / (4 * n * n) * (5 / 6 - 2 * d1 / 3), pk / n, ig / n,
                          d1 / 3 - 1 / 6, 1 / 12 - d1 / 6 + b / 3)
        d_dc = 0.0

    r1, r2 = plan.ripple1, plan.ripple2
    il = _quad_mean(math.sqrt((ig / 2) ** 2 + r1 * r1 / 12), math.sqrt((ig / 2) ** 2 + r2 * r2 / 12))
    return IntervalMetrics(
        ilk_rms=ilk, s_ac_rms=s_ac, d_ac_avg=d_ac, s_dc_rms=s_dc, d_dc_avg=d_dc,
        i_cir=circulating_current(plan), il_rms=il, origin=ANALYTIC, scheme=scheme, k=plan.k,
        clamped=sq.clamped,
    )


def relative_deviation(analytic: IntervalMetrics, numeric: IntervalMetrics, name: str) -> float:
    """|analytic - numeric| / numeric; zero when both vanish."""
    a, x = analytic.get(name), numeric.get(name)
    if x == 0.0:
        return 0.0 if a == 0.0 else math.inf
    return abs(a - x) / abs(x)
