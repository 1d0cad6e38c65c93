import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import g as g0

from sagnacsim.disturbance import (DisturbanceEvent, DisturbanceKind,
                                   ImpactParams, PressureParams, PztParams,
                                   impact_phase, pressure_delay, pzt_phase,
                                   single_pass_phase)


class TestPzt:
    def test_zero_at_origin(self):
        p = PztParams(drive_amplitude_v=1.0,
                      angular_frequency_rad_s=2 * math.pi * 100.0)
        assert pzt_phase(0.0, p) == 0.0

    def test_linearity_in_drive(self):
        base = PztParams(drive_amplitude_v=1.0,
                         angular_frequency_rad_s=2 * math.pi * 100.0,
                         phase_gain_rad_per_v=0.7)
        double = PztParams(drive_amplitude_v=2.0,
                           angular_frequency_rad_s=2 * math.pi * 100.0,
                           phase_gain_rad_per_v=0.7)
        t = np.linspace(0, 0.05, 400)
        assert np.allclose(pzt_phase(t, double), 2.0 * pzt_phase(t, base),
                           rtol=1e-14)

    def test_quarter_period_hits_peak(self):
        p = PztParams(drive_amplitude_v=3.0,
                      angular_frequency_rad_s=2 * math.pi * 100.0,
                      phase_gain_rad_per_v=0.5)
        assert pzt_phase(2.5e-3, p) == pytest.approx(p.peak_phase_rad,
                                                     rel=1e-12)

    @given(f=st.floats(min_value=1.0, max_value=1e4),
           t=st.floats(min_value=0.0, max_value=0.05))
    @settings(max_examples=100, deadline=None)
    def test_periodicity(self, f, t):
        p = PztParams(drive_amplitude_v=1.0,
                      angular_frequency_rad_s=2 * math.pi * f)
        period = 2 * math.pi / p.angular_frequency_rad_s
        assert pzt_phase(t + period, p) == pytest.approx(pzt_phase(t, p),
                                                         abs=1e-12)

    def test_pure_function(self):
        p = PztParams(drive_amplitude_v=1.0,
                      angular_frequency_rad_s=2 * math.pi * 250.0)
        t = np.linspace(0, 1, 1000)
        assert np.array_equal(pzt_phase(t, p), pzt_phase(t, p))


class TestImpact:
    def test_compact_support(self):
        p = ImpactParams(mass_kg=0.2, drop_height_m=0.1, width_s=1e-5)
        assert impact_phase(10 * p.width_s, p) == 0.0
        assert impact_phase(-6.5 * p.width_s, p) == 0.0
        near_edge = impact_phase(5.99 * p.width_s, p)
        assert 0 < near_edge < 1e-7 * p.peak_phase_rad

    def test_peak_scales_with_momentum(self):
        one = ImpactParams(mass_kg=0.1, drop_height_m=0.2)
        two = ImpactParams(mass_kg=0.2, drop_height_m=0.2)
        assert two.peak_phase_rad == pytest.approx(2 * one.peak_phase_rad,
                                                   rel=1e-12)

    def test_quadrupled_height_doubles_peak(self):
        lo = ImpactParams(mass_kg=0.1, drop_height_m=0.1, impact_gain=5.0)
        hi = ImpactParams(mass_kg=0.1, drop_height_m=0.4, impact_gain=5.0)
        assert impact_phase(0.0, hi) == pytest.approx(
            2.0 * impact_phase(0.0, lo), rel=1e-12)
        # direct evaluation of the amplitude law
        assert impact_phase(0.0, lo) == pytest.approx(
            5.0 * 0.1 * math.sqrt(2 * g0 * 0.1), rel=1e-12)

    @given(w=st.floats(min_value=1e-6, max_value=1e-3))
    @settings(max_examples=50, deadline=None)
    def test_integral_fixed_by_area_product(self, w):
        # At fixed peak*width the profile integral is width-independent,
        # which is the delta-approximation contract.
        ref_w = 1e-5
        area_target = 1.0  # rad * s per unit (peak * width)
        gain_ref = area_target / (0.1 * math.sqrt(2 * g0 * 0.1) * ref_w)
        gain = area_target / (0.1 * math.sqrt(2 * g0 * 0.1) * w)
        ref = ImpactParams(mass_kg=0.1, drop_height_m=0.1, width_s=ref_w,
                           impact_gain=gain_ref)
        var = ImpactParams(mass_kg=0.1, drop_height_m=0.1, width_s=w,
                           impact_gain=gain)
        t_ref = np.linspace(-7 * ref_w, 7 * ref_w, 200001)
        t_var = np.linspace(-7 * w, 7 * w, 200001)
        int_ref = np.trapezoid(impact_phase(t_ref, ref), t_ref)
        int_var = np.trapezoid(impact_phase(t_var, var), t_var)
        assert int_var == pytest.approx(int_ref, rel=1e-6)


class TestPressure:
    def test_reference_hundred_grams(self):
        # C (m g / S) l / c with the default geometry; frozen against a
        # direct high-precision evaluation.
        delay = pressure_delay(PressureParams(mass_kg=0.1))
        expected = 3e-12 * (0.1 * g0 / 1e-4) * 0.1 / 299792458.0
        assert delay == pytest.approx(expected, rel=1e-15)
        assert delay == pytest.approx(9.813439002524874e-18, rel=1e-12)
        assert delay == pytest.approx(9.81e-18, abs=1e-20)

    def test_zero_mass(self):
        assert pressure_delay(PressureParams(mass_kg=0.0)) == 0.0

    def test_half_kilogram(self):
        delay = pressure_delay(PressureParams(mass_kg=0.5))
        assert delay == pytest.approx(
            5.0 * pressure_delay(PressureParams(mass_kg=0.1)), rel=1e-14)
        assert delay == pytest.approx(4.906719501262437e-17, rel=1e-12)

    @given(m=st.floats(min_value=1e-3, max_value=10.0),
           scale=st.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=100, deadline=None)
    def test_scaling_laws(self, m, scale):
        base = PressureParams(mass_kg=m)
        assert pressure_delay(PressureParams(mass_kg=m * scale)) == \
            pytest.approx(scale * pressure_delay(base), rel=1e-12)
        stiffer = PressureParams(mass_kg=m,
                                 stress_optic_per_pa=3e-12 * scale)
        assert pressure_delay(stiffer) == pytest.approx(
            scale * pressure_delay(base), rel=1e-12)
        wider = PressureParams(mass_kg=m, contact_area_m2=1e-4 * scale)
        assert pressure_delay(wider) == pytest.approx(
            pressure_delay(base) / scale, rel=1e-12)


class TestEvent:
    def test_kinds(self):
        pzt = DisturbanceEvent(
            PztParams(1.0, 2 * math.pi * 100.0), position_m=100.0)
        imp = DisturbanceEvent(
            ImpactParams(0.1, 0.1), position_m=100.0)
        prs = DisturbanceEvent(PressureParams(0.1), position_m=100.0)
        assert pzt.kind is DisturbanceKind.PZT_SINUSOID and pzt.is_dynamic
        assert imp.kind is DisturbanceKind.TRANSIENT_IMPACT and imp.is_dynamic
        assert prs.kind is DisturbanceKind.QUASI_STATIC_PRESSURE
        assert not prs.is_dynamic

    def test_pressure_contributes_no_phase(self):
        prs = DisturbanceEvent(PressureParams(0.3), position_m=100.0)
        t = np.linspace(0, 1, 100)
        assert np.all(single_pass_phase(t, prs) == 0.0)

    def test_pzt_starts_at_start_time(self):
        ev = DisturbanceEvent(PztParams(1.0, 2 * math.pi * 100.0),
                              position_m=100.0, start_s=2.0)
        assert single_pass_phase(1.999, ev) == 0.0
        assert single_pass_phase(2.0025, ev) != 0.0

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            PztParams(drive_amplitude_v=-1.0,
                      angular_frequency_rad_s=10.0)
        with pytest.raises(ValueError):
            ImpactParams(mass_kg=0.1, drop_height_m=0.0)
        with pytest.raises(ValueError):
            DisturbanceEvent(PressureParams(0.1), position_m=-5.0)
