"""Piecewise-linear waveforms for one switching interval.

Local time runs over ``[0, Ts]`` with ``t = 0`` at the turn-on of S1ag, the
same origin the boost-inductor current expression uses. The first half
(stages 1-5) runs from ``t0 = (d1 - 1/2) Ts`` to ``t5 = d1 Ts``; the mirrored
half wraps around the interval boundary, so its stages 2'-5' occupy
``[0, t0]`` and stage 6 (the mirror of stage 1) occupies ``[t5, Ts]``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .params import (
    DerivedParams,
    IntervalPlan,
    Scheme,
    TimingOverflow,
    ZcsInfeasible,
)

_TIME_EPS = 1e-15


@dataclass(frozen=True, eq=False)
class PiecewiseLinearWaveform:
    """Linear between breakpoints.

    Times are non-decreasing; a time repeated twice encodes a jump, the first
    entry holding the left limit and the second the right limit. Evaluation at
    a jump returns the right limit, so switched voltages are right-continuous.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("need matching 1-D time/value arrays with at least two breakpoints")
        if np.any(np.diff(t) < 0):
            raise ValueError("breakpoint times must be non-decreasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("breakpoints must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float, start: float, end: float) -> "PiecewiseLinearWaveform":
        return cls(np.array([start, end]), np.array([value, value]))

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    @property
    def duration(self) -> float:
        return self.end - self.start

    def _check(self, t: float) -> float:
        span = max(self.duration, 1.0) * 1e-12
        if t < self.start - span or t > self.end + span:
            raise ValueError(f"t = {t!r} outside waveform domain [{self.start!r}, {self.end!r}]")
        return min(max(t, self.start), self.end)

    def right(self, t: float) -> float:
        t = self._check(t)
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        if i >= self.times.size - 1 or self.times[i] == t:
            return float(self.values[i])
        t0, t1 = self.times[i], self.times[i + 1]
        return float(self.values[i] + (self.values[i + 1] - self.values[i]) * (t - t0) / (t1 - t0))

    def left(self, t: float) -> float:
        t = self._check(t)
        i = int(np.searchsorted(self.times, t, side="left"))
        if i == 0 or self.times[i] == t:
            return float(self.values[i])
        t0, t1 = self.times[i - 1], self.times[i]
        return float(self.values[i - 1] + (self.values[i] - self.values[i - 1]) * (t - t0) / (t1 - t0))

    def __call__(self, t):
        if np.ndim(t) == 0:
            return self.right(float(t))
        return _limits(self, np.ravel(np.asarray(t, dtype=float)))[1].reshape(np.shape(t))

    def segments(self):
        """(duration, start value, end value) for every segment, zero-length ones included."""
        return np.diff(self.times), self.values[:-1], self.values[1:]

    def scale(self, factor: float) -> "PiecewiseLinearWaveform":
        return PiecewiseLinearWaveform(self.times, self.values * factor)

    def __neg__(self):
        return self.scale(-1.0)

    def __add__(self, other):
        return combine(self, other, np.add)

    def __sub__(self, other):
        return combine(self, other, np.subtract)

    def window(self, a: float, b: float) -> "PiecewiseLinearWaveform":
        """Copy that equals ``self`` on ``[a, b]`` and zero elsewhere in the domain."""
        if b < a:
            raise ValueError("window end precedes its start")
        inner = self.times[(self.times > a) & (self.times < b)]
        inner_vals = self.values[(self.times > a) & (self.times < b)]
        times = [self.start, a, a, *inner, b, b, self.end]
        values = [0.0, 0.0, self.right(a), *inner_vals, self.left(b), 0.0, 0.0]
        return _squash(times, values)

    def sample(self, times: Iterable[float]) -> np.ndarray:
        return self(np.fromiter(times, dtype=float))


def _squash(times: Sequence[float], values: Sequence[float]) -> PiecewiseLinearWaveform:
    """Collapse each run of equal times to its outer limits.

    Inputs list the left limit first at every repeated time. Jumps at the
    domain edges are trimmed to the inward-facing limit.
    """
    out_t: list[float] = []
    out_v: list[float] = []
    i, size = 0, len(times)
    while i < size:
        j = i
        while j + 1 < size and times[j + 1] == times[i]:
            j += 1
        first, last = float(values[i]), float(values[j])
        out_t.append(float(times[i]))
        out_v.append(first)
        if last != first:
            out_t.append(float(times[i]))
            out_v.append(last)
        i = j + 1
    if len(out_t) > 2 and out_t[0] == out_t[1]:
        del out_t[0], out_v[0]
    if len(out_t) > 2 and out_t[-1] == out_t[-2]:
        del out_t[-1], out_v[-1]
    if len(out_t) == 1:
        out_t.append(out_t[0])
        out_v.append(out_v[0])
    return PiecewiseLinearWaveform(np.array(out_t), np.array(out_v))


def _grid(*waves: PiecewiseLinearWaveform) -> np.ndarray:
    return np.unique(np.concatenate([w.times for w in waves]))


def combine(a: PiecewiseLinearWaveform, b: PiecewiseLinearWaveform,
            op: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> PiecewiseLinearWaveform:
    """Pointwise ``op(a, b)`` on the merged breakpoint grid (exact for + and -)."""
    times, va, vb = aligned(a, b)
    return _squash(times, op(va, vb))


def _limits(w: PiecewiseLinearWaveform, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left and right limits of ``w`` at every grid time (vectorized ``left``/``right``)."""
    t, v = w.times, w.values
    last = t.size - 1
    span = max(w.duration, 1.0) * 1e-12
    if grid.size and (grid.min() < t[0] - span or grid.max() > t[-1] + span):
        raise ValueError(f"grid outside waveform domain [{w.start!r}, {w.end!r}]")
    g = np.clip(grid, t[0], t[-1])

    i = np.searchsorted(t, g, side="right") - 1
    nxt = np.minimum(i + 1, last)
    on_bp = (i >= last) | (t[i] == g)
    width = np.where(on_bp, 1.0, t[nxt] - t[i])
    right = np.where(on_bp, v[i], v[i] + (v[nxt] - v[i]) * (g - t[i]) / width)

    j = np.searchsorted(t, g, side="left")
    jc = np.minimum(j, last)
    prev = np.maximum(jc - 1, 0)
    on_bp = (j == 0) | (t[jc] == g)
    width = np.where(on_bp, 1.0, t[jc] - t[prev])
    left = np.where(on_bp, v[jc], v[prev] + (v[jc] - v[prev]) * (g - t[prev]) / width)
    return left, right


def aligned(*waves: PiecewiseLinearWaveform):
    """Common breakpoints for several waveforms, with both limits at any jump."""
    grid = _grid(*waves)
    lims = [_limits(w, grid) for w in waves]
    jump = np.zeros(grid.size, dtype=bool)
    for lo, hi in lims:
        jump |= lo != hi
    reps = np.where(jump, 2, 1)
    times = np.repeat(grid, reps)
    # Position of the first copy of each grid time in the output.
    first = np.cumsum(reps) - reps
    cols = []
    for lo, hi in lims:
        col = np.repeat(hi, reps)
        col[first[jump]] = lo[jump]
        cols.append(col)
    return (times, *cols)


def integral_of_product(a: PiecewiseLinearWaveform, b: PiecewiseLinearWaveform) -> float:
    """Exact integral of ``a(t) * b(t)`` over the shared domain."""
    times, va, vb = aligned(a, b)
    d = np.diff(times)
    a0, a1, b0, b1 = va[:-1], va[1:], vb[:-1], vb[1:]
    return float(np.sum(d * (2 * a0 * b0 + a0 * b1 + a1 * b0 + 2 * a1 * b1) / 6.0))


def integral(w: PiecewiseLinearWaveform) -> float:
    d, a, b = w.segments()
    return float(np.sum(d * (a + b) / 2.0))


def eval(waveform: PiecewiseLinearWaveform, t: float) -> float:  # noqa: A001 - operation name
    """Value at ``t``; the right limit at a jump."""
    return waveform.right(t)


@dataclass(frozen=True)
class StageTimeline:
    """Stage boundaries inside one interval, all in seconds.

    ``m1``..``m5`` belong to the mirrored half (``m1 = 0`` is the S1ag turn-on
    that closes the previous interval's stage 6, ``m5 == t0``).
    """

    ts: float
    m1: float
    m2: float
    m3: float
    m4: float
    t0: float
    t1: float
    t2: float
    t3: float
    t4: float
    t5: float
    t6: float

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.m1, self.m2, self.m3, self.m4, self.t0, self.t1,
                self.t2, self.t3, self.t4, self.t5, self.t6)

    @property
    def stages(self) -> list[tuple[str, float, float]]:
        labels = ["2'", "3'", "4'", "5'", "1", "2", "3", "4", "5", "6"]
        bp = self.breakpoints
        return [(label, bp[i], bp[i + 1]) for i, label in enumerate(labels)]

    def duration(self, label: str) -> float:
        for name, a, b in self.stages:
            if name == label:
                return b - a
        raise KeyError(label)


def build_timeline(plan: IntervalPlan, derived: DerivedParams) -> StageTimeline:
    """Place stage boundaries; the two zero-current plateaus absorb the slack.

    Stage 1 and stage 6 last ``(1 - d1) Ts`` each, fixed by the gating of the
    off-going leg. ``t5 = d1 Ts`` and ``t0 = (d1 - 1/2) Ts`` are anchored to the
    boost-inductor peaks so the winding and inductor currents meet exactly.
    """
    ts = derived.ts
    release1 = 0.5 * (plan.ig + plan.ripple1)
    release2 = 0.5 * (plan.ig + plan.ripple2)
    if plan.ig > 0 and (plan.i_lk_pk <= release1 or plan.i_lk_pk <= release2):
        raise ZcsInfeasible(
            f"interval {plan.k}: peak {plan.i_lk_pk:.6g} A does not exceed body-diode release current"
        )
    t1 = 0.5 * ts
    t5 = plan.d1 * ts
    t0 = t5 - 0.5 * ts
    t2 = t1 + plan.alpha * ts
    t4 = t5 - plan.beta * ts
    t3 = t4 - plan.d2 * ts
    m2 = plan.alpha_mirror * ts
    m4 = t0 - plan.beta_mirror * ts
    m3 = m4 - plan.d2 * ts
    if t3 < t2 - _TIME_EPS * ts or m3 < m2 - _TIME_EPS * ts:
        raise TimingOverflow(
            f"interval {plan.k}: commutation needs {plan.timing_budget:.6g} Ts of a 0.5 Ts half period"
        )
    return StageTimeline(ts=ts, m1=0.0, m2=m2, m3=max(m3, m2), m4=m4, t0=t0, t1=t1,
                         t2=t2, t3=max(t3, t2), t4=t4, t5=t5, t6=ts)


@dataclass(frozen=True, eq=False)
class NodeWaveforms:
    """Currents (A) and bridge voltages (V) over one interval.

    Device currents are positive drain-to-source. ``i_S*`` is the full device
    current; ``i_D*`` is the part carried by the body diode, so the channel
    current is their difference.
    """

    plan: IntervalPlan
    timeline: StageTimeline
    i_lk: PiecewiseLinearWaveform
    i_L1: PiecewiseLinearWaveform
    i_L2: PiecewiseLinearWaveform
    i_S1ag: PiecewiseLinearWaveform
    i_S2ag: PiecewiseLinearWaveform
    i_D1ag: PiecewiseLinearWaveform
    i_D2ag: PiecewiseLinearWaveform
    i_SA: PiecewiseLinearWaveform
    i_SB: PiecewiseLinearWaveform
    i_SC: PiecewiseLinearWaveform
    i_SD: PiecewiseLinearWaveform
    i_DA: PiecewiseLinearWaveform
    i_DB: PiecewiseLinearWaveform
    i_DC: PiecewiseLinearWaveform
    i_DD: PiecewiseLinearWaveform
    v_pq: PiecewiseLinearWaveform
    v_rs: PiecewiseLinearWaveform
    n: float

    @property
    def ts(self) -> float:
        return self.timeline.ts

    def channel(self, device: str) -> PiecewiseLinearWaveform:
        """Channel current of ``S1ag``, ``S2ag``, ``SA`` ... ``SD``."""
        diode = "D" + device[1:] if device.startswith("S") else None
        return getattr(self, "i_" + device) - getattr(self, "i_" + diode)

    def delivered_power(self) -> float:
        """Mean of v_rs * i_lk / n over the interval (W)."""
        return integral_of_product(self.v_rs, self.i_lk) / (self.n * self.ts)


# DC-side reverse current: body diode (fixed-peak scheme) or synchronous channel.
_DIODE_RECTIFIED = {Scheme.DCPSM}


def _pwl(times, values) -> PiecewiseLinearWaveform:
    return _squash(list(times), list(values))


def _switched(ts: float, level_by_span: Sequence[tuple[float, float, float]]) -> PiecewiseLinearWaveform:
    """Piecewise-constant waveform from (start, end, level) spans covering [0, ts]."""
    times: list[float] = []
    values: list[float] = []
    for a, b, level in level_by_span:
        times.extend([a, b])
        values.extend([level, level])
    return _pwl(times, values)


def synth_interval(plan: IntervalPlan, derived: DerivedParams,
                   timeline: Optional[StageTimeline] = None) -> NodeWaveforms:
    """Stage-by-stage waveforms for one planned interval."""
    p = derived.params
    tl = timeline or build_timeline(plan, derived)
    ts, vg, ig, pk = derived.ts, plan.vg, plan.ig, plan.i_lk_pk
    r1, r2 = plan.ripple1, plan.ripple2
    vo, n = p.vo, p.n

    i_lk = _pwl(tl.breakpoints, [
        0.5 * (ig - r1), 0.0, 0.0, -pk, -0.5 * (ig + r2),
        -0.5 * (ig - r2), 0.0, 0.0, pk, 0.5 * (ig + r1), 0.5 * (ig - r1),
    ])
    # L1 charges while S1ag conducts [0, d1 Ts], discharges into the winding after.
    i_L1 = _pwl([0.0, tl.t5, ts], [0.5 * (ig - r1), 0.5 * (ig + r1), 0.5 * (ig - r1)])
    l2_start = 0.5 * (ig - r2) + vg / p.l2 * (ts - tl.t1)
    i_L2 = _pwl([0.0, tl.t0, tl.t1, ts], [l2_start, 0.5 * (ig + r2), 0.5 * (ig - r2), l2_start])

    leg1 = i_L1 - i_lk
    leg2 = i_L2 + i_lk
    i_S1ag = leg1.window(0.0, tl.t5)
    i_S2ag = leg2.window(0.0, tl.t0) + leg2.window(tl.t1, ts)
    i_D1ag = leg1.window(tl.t4, tl.t5)
    i_D2ag = leg2.window(tl.m4, tl.t0)

    sec = i_lk.scale(1.0 / n)
    i_CD = sec.window(tl.m4, tl.t2) + sec.window(tl.t3, tl.t4)
    i_AB = (-sec).window(0.0, tl.m2) + (-sec).window(tl.m3, tl.m4) + (-sec).window(tl.t4, ts)
    if plan.scheme in _DIODE_RECTIFIED:
        d_CD = sec.window(tl.m4, tl.t2)
        d_AB = (-sec).window(0.0, tl.m2) + (-sec).window(tl.t4, ts)
    else:
        d_CD = d_AB = PiecewiseLinearWaveform.constant(0.0, 0.0, ts)

    v_pq = _switched(ts, [
        (0.0, tl.t0, 0.0), (tl.t0, tl.t1, -vo / n), (tl.t1, tl.t5, 0.0), (tl.t5, ts, vo / n),
    ])
    v_rs = _switched(ts, [
        (0.0, tl.m2, vo), (tl.m2, tl.m3, 0.0), (tl.m3, tl.m4, vo), (tl.m4, tl.t2, -vo),
        (tl.t2, tl.t3, 0.0), (tl.t3, tl.t4, -vo), (tl.t4, ts, vo),
    ])
    return NodeWaveforms(
        plan=plan, timeline=tl, i_lk=i_lk, i_L1=i_L1, i_L2=i_L2,
        i_S1ag=i_S1ag, i_S2ag=i_S2ag, i_D1ag=i_D1ag, i_D2ag=i_D2ag,
        i_SA=i_AB, i_SB=i_AB, i_SC=i_CD, i_SD=i_CD,
        i_DA=d_AB, i_DB=d_AB, i_DC=d_CD, i_DD=d_CD,
        v_pq=v_pq, v_rs=v_rs, n=n,
    )


@dataclass(frozen=True)
class ContinuityResiduals:
    i_L1: float
    i_L2: float
    i_lk: float


def check_continuity(prev: NodeWaveforms, nxt: NodeWaveforms) -> ContinuityResiduals:
    """Jumps in the state currents across the boundary between two intervals."""
    def jump(name: str) -> float:
        a, b = getattr(prev, name), getattr(nxt, name)
        return abs(a.left(a.end) - b.right(b.start))

    return ContinuityResiduals(i_L1=jump("i_L1"), i_L2=jump("i_L2"), i_lk=jump("i_lk"))


@dataclass(frozen=True)
class VoltSeconds:
    v_pq: float   # net volt-seconds on the ac winding over Ts (V s)
    v_rs: float   # net dc-bridge volt-seconds over Ts, referred to the ac side (V s)


def volt_seconds(nw: NodeWaveforms) -> VoltSeconds:
    """Net winding volt-seconds; a periodic, unsaturated transformer needs both near zero."""
    return VoltSeconds(v_pq=integral(nw.v_pq), v_rs=integral(nw.v_rs) / nw.n)


WAVEFORM_COLUMNS = ("t_s", "i_lk_A", "i_L1_A", "i_L2_A", "i_S1ag_A", "i_S2ag_A",
                    "i_SA_A", "i_SC_A", "v_pq_V", "v_rs_V")


def sample_times(nw: NodeWaveforms, samples: int = 200) -> np.ndarray:
    """Uniform grid plus every breakpoint of the exported waveforms."""
    grid = np.linspace(0.0, nw.ts, samples + 1) if samples > 0 else np.array([0.0, nw.ts])
    waves = [nw.i_lk, nw.i_L1, nw.i_L2, nw.i_S1ag, nw.i_S2ag, nw.i_SA, nw.i_SC, nw.v_pq, nw.v_rs]
    return np.unique(np.concatenate([grid, *[w.times for w in waves]]))


def waveform_rows(nw: NodeWaveforms, samples: int = 200) -> list[tuple[float, ...]]:
    waves = [nw.i_lk, nw.i_L1, nw.i_L2, nw.i_S1ag, nw.i_S2ag, nw.i_SA, nw.i_SC, nw.v_pq, nw.v_rs]
    rows = []
    for t in sample_times(nw, samples):
        lefts = [w.left(t) for w in waves]
        rights = [w.right(t) for w in waves]
        if t > 0.0 and lefts != rights:
            rows.append((t, *lefts))
        rows.append((t, *(lefts if t >= nw.ts else rights)))
    return rows


def fmt(x: float) -> str:
    """Fixed 9-significant-digit float text used in every CSV."""
    out = f"{x:.9g}"
    return "0" if out == "-0" else out


def waveform_csv(nw: NodeWaveforms, samples: int = 200) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(WAVEFORM_COLUMNS)
    for row in waveform_rows(nw, samples):
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()
