import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfhb.params import ConverterParams, ModulationScheme, TimingOverflow, ZcsInfeasible, derive, plan_at_angle, plan_interval
from cfhb.waveforms import (
    WAVEFORM_COLUMNS,
    PiecewiseLinearWaveform,
    build_timeline,
    check_continuity,
    eval,
    integral,
    integral_of_product,
    synth_interval,
    volt_seconds,
    waveform_csv,
)

PWL = PiecewiseLinearWaveform


def _midpoints(tl):
    return [(label, 0.5 * (a + b)) for label, a, b in tl.stages if b > a]


class TestPiecewiseLinear:
    def test_interpolation(self):
        assert eval(PWL([0.0, 1.0], [0.0, 2.0]), 0.5) == 1.0

    def test_constant(self):
        w = PWL.constant(3.5, 0.0, 2.0)
        assert eval(w, 0.0) == eval(w, 1.3) == eval(w, 2.0) == 3.5

    def test_jump_is_right_continuous(self):
        w = PWL([0.0, 1.0, 1.0, 2.0], [0.0, 0.0, 5.0, 5.0])
        assert eval(w, 1.0) == 5.0
        assert w.left(1.0) == 0.0

    def test_domain_error(self):
        with pytest.raises(ValueError, match="outside"):
            eval(PWL([0.0, 1.0], [0.0, 1.0]), 1.5)

    def test_rejects_decreasing_times(self):
        with pytest.raises(ValueError):
            PWL([0.0, 2.0, 1.0], [0.0, 0.0, 0.0])

    def test_window_and_sum(self):
        ramp = PWL([0.0, 1.0], [0.0, 1.0])
        w = ramp.window(0.25, 0.5)
        assert eval(w, 0.1) == 0.0
        assert eval(w, 0.3) == pytest.approx(0.3)
        assert w.left(0.5) == pytest.approx(0.5) and eval(w, 0.5) == 0.0
        assert integral(w + ramp.window(0.5, 1.0)) == pytest.approx(integral(ramp.window(0.25, 1.0)))

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
    def test_product_integral_matches_quadrature(self, va, vb):
        a = PWL([0.0, 0.3, 0.3, 1.0], va)
        b = PWL([0.0, 0.6, 1.0], vb)
        t = np.linspace(0.0, 1.0, 20_001)
        dense = np.trapezoid(np.interp(t, a.times, a.values) * np.interp(t, b.times, b.values), t)
        assert integral_of_product(a, b) == pytest.approx(dense, abs=5e-3)


class TestTimeline:
    def test_peak_durations(self, derived, idcpsm):
        tl = build_timeline(plan_at_angle(derived, idcpsm, 90), derived)
        assert tl.duration("4") == pytest.approx(0.590e-6, abs=1e-9)
        assert tl.duration("5") == pytest.approx(0.242e-6, abs=1e-9)
        assert tl.duration("2") == pytest.approx(0.0185e-5, abs=1e-9)
        assert list(tl.breakpoints) == sorted(tl.breakpoints)
        assert tl.m1 == 0.0 and tl.t6 == derived.ts

    def test_dcpsm_constant_d2(self, derived, dcpsm):
        tl = build_timeline(plan_at_angle(derived, dcpsm, 10), derived)
        assert tl.duration("4") == pytest.approx(0.590e-6, abs=1e-9)

    def test_zero_input(self, derived, idcpsm):
        plan = plan_interval(derived, idcpsm, 0)
        tl = build_timeline(plan, derived)
        for label in ("2", "4", "5", "2'", "4'", "5'"):
            assert tl.duration(label) == 0.0
        nw = synth_interval(plan, derived)
        for name in ("i_lk", "i_L1", "i_L2", "i_S1ag", "i_S2ag", "i_SA", "i_SC", "v_pq", "v_rs"):
            w = getattr(nw, name)
            if name.startswith("i_"):
                assert np.all(w.values == 0.0), name

    def test_zcs_infeasible(self, derived):
        plan = plan_at_angle(derived, ModulationScheme.dcpsm(3.0), 90)
        with pytest.raises(ZcsInfeasible):
            build_timeline(plan, derived)

    def test_timing_overflow(self):
        d = derive(ConverterParams())
        plan = plan_at_angle(d, ModulationScheme.dcpsm(60.0), 60)
        with pytest.raises(TimingOverflow):
            build_timeline(plan, d)


@pytest.fixture(scope="module")
def peak(derived, idcpsm):
    return synth_interval(plan_at_angle(derived, idcpsm, 90), derived)


class TestSynthesis:
    def test_boundary_values(self, peak):
        tl = peak.timeline
        assert eval(peak.i_lk, tl.t4) == pytest.approx(10.2, abs=1e-9)
        assert eval(peak.i_lk, tl.t3) == pytest.approx(0.0, abs=1e-12)
        assert eval(peak.i_lk, tl.t5) == pytest.approx(6.023, abs=2e-3)
        assert eval(peak.i_lk, tl.t3 + peak.plan.d2 * tl.ts / 2) == pytest.approx(5.10, abs=1e-9)

    def test_plateau_is_zero(self, peak):
        tl = peak.timeline
        for t in np.linspace(tl.t2, tl.t3, 7):
            assert eval(peak.i_lk, t) == pytest.approx(0.0, abs=1e-12)

    def test_diode_takes_over_at_t4(self, peak):
        tl = peak.timeline
        s = eval(peak.i_S1ag, tl.t4)
        assert s == pytest.approx(eval(peak.i_L1, tl.t4) - 10.2, abs=1e-9)
        assert s < 0
        assert eval(peak.i_D1ag, tl.t4) == pytest.approx(s)

    def test_stage_slopes(self, peak, derived):
        tl = peak.timeline
        vo, n, lt = derived.vo, derived.n, derived.lt
        for label, slope in (("2", vo / (n * lt)), ("4", vo / (n * lt)), ("5", -vo / (n * lt))):
            a, b = [(s, e) for name, s, e in tl.stages if name == label][0]
            measured = (peak.i_lk.left(b) - eval(peak.i_lk, a)) / (b - a)
            assert measured == pytest.approx(slope, rel=1e-9), label

    def test_voltage_levels(self, peak, derived):
        vo, n = derived.vo, derived.n
        assert set(np.round(peak.v_pq.values, 9)) <= {round(-vo / n, 9), 0.0, round(vo / n, 9)}
        assert set(np.round(peak.v_rs.values, 9)) <= {-vo, 0.0, vo}

    def test_transformer_coupling(self, peak):
        for label, t in _midpoints(peak.timeline):
            ilk = eval(peak.i_lk, t)
            dc = max(abs(eval(peak.i_SA, t)), abs(eval(peak.i_SC, t)))
            assert dc == pytest.approx(abs(ilk) / peak.n, abs=1e-12), label

    def test_node_kcl(self, peak):
        tl = peak.timeline
        for label, t in _midpoints(peak.timeline):
            if t < tl.t5:
                assert eval(peak.i_S1ag, t) == pytest.approx(eval(peak.i_L1, t) - eval(peak.i_lk, t)), label
            if t > tl.t1 or t < tl.t0:
                assert eval(peak.i_S2ag, t) == pytest.approx(eval(peak.i_L2, t) + eval(peak.i_lk, t)), label

    def test_synchronous_dc_side(self, peak):
        assert np.all(peak.i_DA.values == 0.0) and np.all(peak.i_DC.values == 0.0)

    def test_dcpsm_rectifies_in_diodes(self, derived, dcpsm):
        nw = synth_interval(plan_at_angle(derived, dcpsm, 60), derived)
        assert np.min(nw.i_DA.values) < 0 and np.min(nw.i_DC.values) < 0

    @pytest.mark.parametrize("deg", [20, 50, 90])
    def test_half_interval_symmetry_zero_ripple(self, zero_ripple, idcpsm, deg):
        nw = synth_interval(plan_at_angle(zero_ripple, idcpsm, deg), zero_ripple)
        ts = nw.ts
        peak = nw.plan.i_lk_pk
        for t in np.linspace(0.0, ts / 2, 101):
            assert eval(nw.i_lk, t + ts / 2) == pytest.approx(-eval(nw.i_lk, t), abs=0.01 * peak)

    def test_volt_seconds(self, peak, derived):
        vs = volt_seconds(peak)
        assert abs(vs.v_pq) <= 0.01 * derived.vo * derived.ts / derived.n


class TestContinuity:
    def test_adjacent_near_peak(self, derived, idcpsm):
        a = synth_interval(plan_interval(derived, idcpsm, 499), derived)
        b = synth_interval(plan_interval(derived, idcpsm, 500), derived)
        res = check_continuity(a, b)
        assert res.i_L1 < 0.01 and res.i_L2 < 0.01
        # The winding meets L1 at the interval edge, so it inherits the same sampling step.
        assert res.i_lk == pytest.approx(res.i_L1, abs=1e-12)

    def test_winding_current_periodic_within_interval(self, derived, idcpsm):
        for k in (37, 250, 500, 811):
            nw = synth_interval(plan_interval(derived, idcpsm, k), derived)
            assert nw.i_lk.left(nw.ts) == pytest.approx(eval(nw.i_lk, 0.0), abs=1e-12)

    def test_identical_plans(self, derived, idcpsm):
        nw = synth_interval(plan_interval(derived, idcpsm, 321), derived)
        res = check_continuity(nw, nw)
        assert res.i_L1 == 0.0 and res.i_L2 == 0.0 and res.i_lk == 0.0


class TestWaveformCsv:
    def test_peak_csv(self, derived, idcpsm):
        nw = synth_interval(plan_at_angle(derived, idcpsm, 90), derived)
        text = waveform_csv(nw, 200)
        lines = text.splitlines()
        assert lines[0] == ",".join(WAVEFORM_COLUMNS)
        ilk = [float(line.split(",")[1]) for line in lines[1:]]
        assert max(ilk) == pytest.approx(10.20, abs=0.01)
        times = [float(line.split(",")[0]) for line in lines[1:]]
        assert times == sorted(times) and times[0] == 0.0 and math.isclose(times[-1], derived.ts)
        assert waveform_csv(nw, 200) == text
