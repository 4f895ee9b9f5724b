import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wideband_afdm.channel import (
    ChannelConfigError,
    ChannelPath,
    ChannelSpread,
    WidebandChannel,
    add_cpp_cps,
    afdm_waveform,
    apply_channel,
    guard_lengths,
    phase_wrap_schedule,
    psi_index,
    remove_cpp_cps,
    sample_channel,
    time_domain_channel_matrix,
    time_domain_path_matrix,
    transmit,
)
from wideband_afdm.daf_core import ChirpParams, DAFTransform, SystemConfig

XD = np.array([1, -1, 1j, -1j, 1, 1, -1j, 1j], complex)


def _two_paths():
    paths = tuple(ChannelPath(complex(h), l, a, a * 6000 / 500) for h, l, a in [(1.0, 1, 5e-3), (0.6 - 0.3j, 2, -4e-3)])
    return WidebandChannel(paths, 3, 1)


def test_received_samples_frozen(small):
    # independent oracle: per-sample sum of the continuous waveform with breakpoint counting
    cfg, ch = small
    U = DAFTransform(8, ch.c1, ch.c2)
    y = time_domain_channel_matrix(_two_paths(), cfg, ch) @ U.inverse(XD)
    ref = {0: -0.24476468451136335 + 0.10743561050359354j, 3: 0.5732374668810676 + 1.2618797325202804j,
           7: -1.5488201830235546 + 0.6512330062137949j}
    for n, v in ref.items():
        assert y[n] == pytest.approx(v, abs=1e-12)
    yd = U.forward(y)
    assert yd[0] == pytest.approx(0.40498646129810534 - 1.3649965307638012j, abs=1e-12)
    assert yd[4] == pytest.approx(-0.923833002080671 - 0.3602483303908628j, abs=1e-12)


def test_matrix_waveform_and_framed_agree(small):
    cfg, ch = small
    chan = _two_paths()
    U = DAFTransform(8, ch.c1, ch.c2)
    x = U.inverse(XD)
    a = apply_channel(x, chan, cfg, ch)
    b = apply_channel(x, chan, cfg, ch, method="waveform")
    c = apply_channel(transmit(XD, U, chan, ch), chan, cfg, ch)
    assert np.max(np.abs(a - b)) < 1e-10
    assert np.max(np.abs(a - c)) < 1e-12


def test_waveform_hits_idaf_samples(small):
    cfg, ch = small
    x = afdm_waveform(XD, np.arange(8) * cfg.delta_t, cfg, ch)
    assert np.allclose(x, DAFTransform(8, ch.c1, ch.c2).inverse(XD), atol=1e-12)


def test_guards_are_chirp_periodic(small):
    cfg, ch = small
    x = DAFTransform(8, ch.c1, ch.c2).inverse(XD)
    framed = add_cpp_cps(x, ch, 3, 2)
    assert len(framed) == 13
    assert np.array_equal(remove_cpp_cps(framed, 3, 2), x)
    # prefix sample n = -1 continues the waveform backwards
    w = afdm_waveform(XD, np.array([-1.0, 8.0]) * cfg.delta_t, cfg, ch)
    assert framed[2] == pytest.approx(w[0], abs=1e-12)
    assert framed[11] == pytest.approx(w[1], abs=1e-12)


def test_wrap_schedule_counts():
    cfg = SystemConfig(16, 1.0, 0.0)
    ch = ChirpParams(0.25)  # 2 N c1 = 8 breakpoints
    sched = phase_wrap_schedule(5, cfg, ch)
    assert sched.psi(0.0) == 0
    assert sched.psi(cfg.T * (1 - 1e-9)) == len(sched.breakpoints)
    s = np.arange(16)
    assert np.array_equal(psi_index(np.full(16, 5), s, 16, 0.25), sched.psi_many(s * cfg.delta_t))


def test_guard_lengths_underwater():
    cfg = SystemConfig(1024, 4.0, 6000.0)
    spread = ChannelSpread.for_system(cfg, 20e-3, 1e-4)
    assert (spread.ell_max, spread.k_max) == (81, pytest.approx(0.15))
    assert guard_lengths(cfg, spread) == (82, 1)


def test_zero_alpha_path_is_chirp_circulant():
    cfg = SystemConfig(16, 100.0, 0.0)
    ch = ChirpParams(0.1)
    H = time_domain_path_matrix(ChannelPath(1.0, 3, 0.0, 0.0), cfg, ch)
    assert np.count_nonzero(np.abs(H) > 1e-12) == 16
    assert np.allclose(np.abs(H), np.roll(np.eye(16), 3, axis=0), atol=1e-12)


@given(seed=st.integers(0, 2**31), P=st.integers(1, 4))
def test_sampled_paths_respect_spread(seed, P):
    cfg = SystemConfig(32, 125.0, 6000.0)
    spread = ChannelSpread.for_system(cfg, 1e-3, 1e-4)
    chan = sample_channel(spread, P, seed, cfg)
    assert chan.P == P
    assert all(p.within(spread) for p in chan.paths)
    assert len({p.ell for p in chan.paths}) == P


def test_sample_channel_errors():
    cfg = SystemConfig(32, 125.0, 6000.0)
    spread = ChannelSpread.for_system(cfg, 1e-3, 1e-4)
    with pytest.raises(ChannelConfigError):
        sample_channel(spread, 10, 0, cfg)
    with pytest.raises(ChannelConfigError):
        sample_channel(spread, 2, 0, cfg, gain_profile="bogus")
    with pytest.raises(ChannelConfigError):
        ChannelSpread(1e-3, 1.5, 1, 0.1)
    with pytest.raises(ChannelConfigError):
        ChannelPath.from_physical(1.0, 1.3e-3, 0.0, cfg)


def test_noise_variance(small):
    cfg, ch = small
    chan = WidebandChannel((ChannelPath(0j, 0, 0.0, 0.0),), 1, 1)
    y = np.concatenate([apply_channel(np.zeros(8), chan, cfg, ch, N0=0.5, rng_seed=s) for s in range(4000)])
    assert np.mean(np.abs(y) ** 2) == pytest.approx(0.5, rel=0.05)
