import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wideband_afdm.channel import ChannelSpread
from wideband_afdm.chirp_opt import (
    InfeasibleDesignError,
    admissible_N,
    narrowband_c1,
    optimize_c1,
    quad_coeffs,
    total_span,
)
from wideband_afdm.daf_core import SystemConfig


def _uw(N=1024, B=4000.0, tau=20e-3):
    cfg = SystemConfig.from_bandwidth(N, B, 6000.0)
    return ChannelSpread.for_system(cfg, tau, 1e-4)


def test_narrowband_limit_exact():
    spread = ChannelSpread(0.0, 0.0, 0, 2.0)
    assert optimize_c1(spread, 64, 1) == pytest.approx(7 / 128)
    assert narrowband_c1(spread, 64, 1) == pytest.approx(7 / 128)
    assert narrowband_c1(ChannelSpread(0, 0, 0, 0.0), 64, 0) == pytest.approx(1 / 128)


def test_hand_evaluated_rule():
    spread = ChannelSpread(20e-3, 1e-4, 81, 0.15)
    # (0.3 + 0.2046 + 5) / (2048 (1 - 0.4092))
    assert optimize_c1(spread, 1024, 2) == pytest.approx(5.5046 / (2048 * 0.5908), rel=1e-9)


def test_alpha_to_zero_limit():
    s = ChannelSpread(0.0, 1e-9, 3, 0.5)
    assert abs(optimize_c1(s, 256) / narrowband_c1(s, 256) - 1) < 1e-3


def test_scaling_cap():
    spread = ChannelSpread(0.0, 1e-4, 0, 0.1)
    optimize_c1(spread, 2500)
    with pytest.raises(InfeasibleDesignError):
        optimize_c1(spread, 2501)
    assert admissible_N(spread).N_window[1] <= 2501


def test_worked_example_frozen():
    rep = admissible_N(_uw(), 2, 1024)
    a, b, c = rep.quad_coeffs
    assert (a, b) == (pytest.approx(4e-4), pytest.approx(-0.984))
    assert c == pytest.approx(428.8666, rel=1e-9)
    assert rep.discriminant == pytest.approx(0.28206944, rel=1e-6)
    assert rep.N_window == (pytest.approx(566.1223757, rel=1e-8), pytest.approx(1893.8776243, rel=1e-8))
    assert (rep.N_min, rep.N_max, rep.feasible) == (567, 1893, True)
    assert rep.c1_opt == pytest.approx(0.0045553632257109, rel=1e-12)


def test_infeasible_reported_not_raised():
    cfg = SystemConfig(2048, 4.0, 6000.0)
    rep = admissible_N(ChannelSpread.for_system(cfg, 20e-3, 1e-4))
    assert rep.discriminant < 0 and not rep.feasible


def test_alpha_zero_window_is_narrowband_condition():
    s = ChannelSpread(0.0, 0.0, 10, 1.0)
    rep = admissible_N(s, 2)
    assert rep.N_window[0] == pytest.approx((2 * 1 + 4) * 11 + 10)


@given(k=st.floats(0, 2), a=st.floats(0, 2e-4), nv=st.integers(0, 4), dk=st.floats(0.01, 1),
       da=st.floats(1e-6, 1e-4))
def test_monotone_in_spread(k, a, nv, dk, da):
    N = 512
    base = optimize_c1(ChannelSpread(0, a, 5, k), N, nv)
    assert optimize_c1(ChannelSpread(0, a, 5, k + dk), N, nv) > base
    assert optimize_c1(ChannelSpread(0, a + da, 5, k), N, nv) > base
    assert optimize_c1(ChannelSpread(0, a, 5, k), N, nv + 1) > base


@given(N=st.integers(567, 1893))
def test_wrap_around_span_on_window(N):
    spread = _uw()  # the window is derived for a fixed (ell_max, k_max)
    c1 = optimize_c1(spread, N, 2)
    assert total_span(spread, N, c1, 2) < N


def test_exact_rule_close_to_simplified():
    s = _uw()
    assert optimize_c1(s, 1024, exact=True) == pytest.approx(optimize_c1(s, 1024), rel=1e-3)
    assert optimize_c1(s, 1024, dense_delays=False, min_delay_gap=2) < optimize_c1(s, 1024)


def test_quad_coeffs_signs():
    a, b, c = quad_coeffs(_uw())
    assert a > 0 and b < 0 and c > 0
