import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from qmfidelity.core import (
    BroadeningParams,
    ChannelMoments,
    TwoQubitState,
    analytic_cross_moment,
    analytic_fidelity,
    analytic_population_moment,
    entanglement_fidelity,
    fidelity_at_x,
    optimal_pulse_time,
    optimal_x,
    theta_factor,
    x_of_state,
)
from qmfidelity.exceptions import DomainError, OutOfRegimeError


@st.composite
def moments(draw):
    m00 = draw(st.floats(0.0, 1.0))
    m11 = draw(st.floats(0.0, 1.0))
    bound = math.sqrt(m00 * m11)
    mc = draw(st.floats(-1.0, 1.0)) * bound
    return ChannelMoments(m00, m11, mc)


class TestThetaFactor:
    def test_zero_width(self):
        assert theta_factor(0.0) == 1.0

    def test_unit_width(self):
        assert theta_factor(1.0) == pytest.approx((1 + 6 + 3) / 4, abs=1e-15)

    def test_large_width_stays_below_three(self):
        # (1 + 600 + 30000) / 101^2
        assert theta_factor(10.0) == pytest.approx(30601 / 10201, rel=1e-15)
        assert theta_factor(10.0) < 3.0

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            theta_factor(-0.1)

    def test_monotone_into_one_three(self):
        grid = np.linspace(0.0, 50.0, 1000)
        values = np.array([theta_factor(w) for w in grid])
        assert np.all(values >= 1.0) and np.all(values < 3.0)
        assert np.all(np.diff(values) > 0)


class TestPulseTime:
    def test_single_absorber(self):
        assert optimal_pulse_time(1.0, 1) == pytest.approx(math.pi / 2, rel=1e-15)

    def test_ensemble(self):
        assert optimal_pulse_time(4.0, 100) == pytest.approx(math.pi / 40, rel=1e-15)
        assert optimal_pulse_time(4.0, 100) == pytest.approx(0.0785398, abs=1e-7)

    @pytest.mark.parametrize("args", [(0.0, 10), (-1.0, 10), (1.0, 0)])
    def test_non_positive(self, args):
        with pytest.raises(DomainError):
            optimal_pulse_time(*args)

    def test_params_default_uses_second_moment(self):
        p = BroadeningParams(2.0, kappa_width=1.0, n_absorbers=10)
        assert p.pulse_time == optimal_pulse_time(5.0, 10)


class TestAnalyticMoments:
    def test_zero_widths(self):
        for n in (1, 10, 1000):
            p = BroadeningParams(3.0, n_absorbers=n)
            assert analytic_population_moment(p) == 1.0
            assert analytic_cross_moment(p, p) == 1.0
            r = analytic_fidelity(p, p)
            assert r.fidelity == 1.0

    def test_storage_dephasing_only(self):
        p = BroadeningParams(1.0, w_f=1.0, n_absorbers=100)
        # 1/N + (N-1)/N e^-1
        assert analytic_population_moment(p) == pytest.approx(0.01 + 0.99 * math.exp(-1), abs=1e-15)
        assert analytic_population_moment(p) == pytest.approx(0.3742006, abs=1e-7)

    def test_cross_moment_dephasing(self):
        p = BroadeningParams(1.0, w_f=1.0, n_absorbers=100)
        assert analytic_cross_moment(p, p) == pytest.approx(math.exp(-1), rel=1e-14)

    def test_cross_moment_swap_symmetric(self):
        p0 = BroadeningParams(1.0, kappa_width=0.1, w_a=0.2, w_K=0.3, n_absorbers=20)
        p1 = BroadeningParams(2.0, w_b=0.4, w_M=0.1, w_f=0.3, n_absorbers=20)
        assert analytic_cross_moment(p0, p1) == analytic_cross_moment(p1, p0)

    def test_detuning_and_coupling_widths(self):
        # Hand evaluation: w~ = 0.5, Theta = (1 + 1.5 + 0.1875) / 1.5625 = 1.72
        p = BroadeningParams(2.0, kappa_width=1.0, w_K=1.0, w_M=1.0, n_absorbers=4)
        correction = 1.72 * 2.0 / (8 * 4 * 5.0)
        expected = (1 - correction) * (0.25 + 0.75 / 1.25**2)
        assert analytic_population_moment(p) == pytest.approx(expected, rel=1e-14)
        cross = (1 / 1.25) ** 2 * (1 - 2 * (4 + math.pi**2) * 1.72 * 2.0 / (64 * 16 * 5.0))
        assert analytic_cross_moment(p, p) == pytest.approx(cross, rel=1e-14)

    def test_out_of_regime(self):
        p = BroadeningParams(1.0, w_K=10.0, w_M=10.0, n_absorbers=1)
        with pytest.raises(OutOfRegimeError) as info:
            analytic_population_moment(p)
        assert info.value.magnitude == pytest.approx(200 / 8)

    def test_nonzero_mean_detuning_refused(self):
        p = BroadeningParams(1.0, K_mean=0.1, n_absorbers=10)
        with pytest.raises(DomainError):
            analytic_population_moment(p)

    @pytest.mark.parametrize("knob", ["w_a", "w_b", "w_f", "w_K", "w_M"])
    def test_monotone_in_each_width(self, knob):
        values = [
            analytic_population_moment(BroadeningParams(1.0, kappa_width=0.2, n_absorbers=30,
                                                        **{knob: w}))
            for w in np.linspace(0.0, 2.0, 41)
        ]
        assert np.all(np.diff(values) <= 0)


class TestQuadratic:
    def test_pure_logical_zero(self):
        assert fidelity_at_x(ChannelMoments(0.9, 0.4, 0.1), 1.0) == 0.9

    def test_midpoint(self):
        b, r = 0.8, 0.3
        assert fidelity_at_x(ChannelMoments(b, b, r), 0.5) == pytest.approx((b + r) / 2, abs=1e-15)

    def test_case_ii(self):
        m = ChannelMoments(0.0, 1.0, 0.0)
        assert fidelity_at_x(m, 1.0) == 0.0
        assert optimal_x(m) == (1.0, False)
        assert entanglement_fidelity(m).fidelity == 0.0

    def test_x_outside_unit_interval(self):
        with pytest.raises(DomainError):
            fidelity_at_x(ChannelMoments(1, 1, 1), 1.5)

    def test_symmetric_channel_minimised_at_half(self):
        x0, degenerate = optimal_x(ChannelMoments(0.9, 0.9, 0.3))
        assert x0 == 0.5 and not degenerate

    def test_case_i_degenerate(self):
        r = entanglement_fidelity(ChannelMoments(0.7, 0.7, 0.7))
        assert r.degenerate and r.x0 == 0.5
        assert r.fidelity == pytest.approx(0.7, abs=1e-15)

    def test_decorrelated(self):
        assert entanglement_fidelity(ChannelMoments(1.0, 1.0, 0.0)).fidelity == 0.5

    def test_concave_case_takes_smaller_endpoint(self):
        # curvature m00 - 2mc + m11 < 0 only for mc > mean; pick such moments.
        m = ChannelMoments(0.5, 0.6, 0.56)
        assert m.m00 - 2 * m.mc + m.m11 < 0
        assert optimal_x(m) == (1.0, False)

    def test_endpoint_tie_goes_to_zero(self):
        # Concave with equal endpoints (only reachable off the Cauchy-Schwarz set).
        m = ChannelMoments(0.5, 0.5, 0.6)
        assert optimal_x(m) == (0.0, False)

    def test_nearly_degenerate_is_interior(self):
        assert optimal_x(ChannelMoments(1.0, 1.0, 1.0 - 1e-3)) == (0.5, False)

    @given(moments())
    @settings(max_examples=300, deadline=None)
    def test_minimum_over_grid(self, m):
        r = entanglement_fidelity(m)
        assert r.fidelity == pytest.approx(fidelity_at_x(m, r.x0), abs=0)
        for x in np.linspace(0.0, 1.0, 101):
            assert r.fidelity <= fidelity_at_x(m, float(x)) + 1e-12

    @given(moments())
    @settings(max_examples=300, deadline=None)
    def test_fidelity_in_unit_interval(self, m):
        r = entanglement_fidelity(m)
        assert -1e-15 <= r.fidelity <= max(m.m00, m.m11) + 1e-15

    @given(moments())
    @settings(max_examples=300, deadline=None)
    def test_swap_symmetry(self, m):
        r = entanglement_fidelity(m)
        s = entanglement_fidelity(m.swapped())
        assert s.fidelity == pytest.approx(r.fidelity, abs=1e-12)
        interior = 0.0 < r.x0 < 1.0
        assume(not r.degenerate and (interior or abs(m.m00 - m.m11) > 1e-9))
        assert s.x0 == pytest.approx(1.0 - r.x0, abs=1e-9)


class TestMomentsType:
    def test_population_bounds(self):
        with pytest.raises(DomainError):
            ChannelMoments(1.2, 0.5, 0.0)

    def test_cauchy_schwarz_gap(self):
        assert ChannelMoments(0.25, 1.0, 0.5).cauchy_schwarz_gap() == 0.0
        assert ChannelMoments(0.25, 1.0, 0.6).cauchy_schwarz_gap() < 0

    def test_closed_forms_can_break_cauchy_schwarz(self):
        # Cross correction is O(1/N^2), population correction O(1/N).
        p = BroadeningParams(1.0, w_K=0.1, n_absorbers=100)
        m = ChannelMoments(analytic_population_moment(p), analytic_population_moment(p),
                           analytic_cross_moment(p, p))
        assert m.cauchy_schwarz_gap() < 0


class TestBroadeningParams:
    @pytest.mark.parametrize("kwargs", [
        dict(kappa_mean=0.0),
        dict(kappa_mean=1.0, w_a=-0.1),
        dict(kappa_mean=1.0, n_absorbers=0),
        dict(kappa_mean=1.0, n_absorbers=2.5),
        dict(kappa_mean=1.0, t_p=-1.0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            BroadeningParams(**kwargs)


class TestStates:
    def test_x_of_basis_states(self):
        assert x_of_state(TwoQubitState(1, 0, 0, 0)) == 1.0
        assert x_of_state(TwoQubitState(0, 0, 0, 1)) == 0.0

    def test_x_of_uniform(self):
        assert x_of_state(TwoQubitState(0.5, 0.5, 0.5, 0.5)) == 0.5

    def test_unnormalized(self):
        with pytest.raises(DomainError):
            x_of_state(TwoQubitState(1, 1, 0, 0))
