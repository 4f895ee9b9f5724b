import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wideband_afdm.channel import ChannelSpread, sample_channel, time_domain_channel_matrix
from wideband_afdm.chirp_opt import optimize_c1
from wideband_afdm.daf_core import ChirpParams, DAFTransform, SystemConfig, make_constellation
from wideband_afdm.detectors import (
    EPS_VAR,
    V_MAX,
    all_candidates,
    cd_d_oamp_detect,
    cd_oamp_reference,
    combine,
    d_oamp_detect,
    daf_denoise,
    extrinsic,
    lmmse_detect,
    lmmse_group,
    ml_detect,
    partition_groups,
)

QPSK = make_constellation("qpsk")
BPSK = make_constellation("bpsk")


def _scenario(N=64, seed=0):
    cfg = SystemConfig.from_bandwidth(N, 4000.0, 6000.0, "qpsk")
    spread = ChannelSpread.for_system(cfg, 2.5e-3, 1e-4)
    ch = ChirpParams(optimize_c1(spread, N, 2))
    chan = sample_channel(spread, 4, seed, cfg)
    return cfg, DAFTransform(N, ch.c1, ch.c2), time_domain_channel_matrix(chan, cfg, ch)


def _cn(rng, n):
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)


def test_lmmse_group_matches_dense(rng):
    H = rng.standard_normal((12, 20)) + 1j * rng.standard_normal((12, 20))
    eta = rng.uniform(0.2, 2.0, 20)
    mu = _cn(rng, 20)
    y = _cn(rng, 12)
    N0 = 0.3
    S = np.diag(eta)
    W = S @ H.conj().T @ np.linalg.inv(H @ S @ H.conj().T + N0 * np.eye(12))
    m, v = lmmse_group(H, y, mu, eta, N0)
    assert np.allclose(m, mu + W @ (y - H @ mu), atol=1e-12)
    assert np.allclose(v, np.real(np.diag(S - W @ H @ S)), atol=1e-12)


def test_noiseless_identity_one_iteration():
    x = QPSK.points[np.arange(16) % 4]
    U = DAFTransform(16, 0.1, 0.2)
    res = cd_d_oamp_detect(U.inverse(x), np.eye(16), U, 1e-10, QPSK)
    assert res.iterations == 1
    assert res.trace[0].theta == 1.0
    assert np.array_equal(res.decisions, np.arange(16) % 4)


def test_c1_matches_dense_reference(rng):
    cfg, U, H = _scenario()
    x = QPSK.points[rng.integers(0, 4, 64)]
    N0 = 0.1
    y = H @ U.inverse(x) + np.sqrt(N0) * _cn(rng, 64)
    assert np.array_equal(cd_d_oamp_detect(y, H, U, N0, QPSK).decisions, cd_oamp_reference(y, H, U, N0, QPSK))


@pytest.mark.parametrize("C", [1, 4, 16])
def test_variances_clamped_and_posteriors_normalised(rng, C):
    cfg, U, H = _scenario(seed=C)
    x = QPSK.points[rng.integers(0, 4, 64)]
    N0 = 0.05
    y = H @ U.inverse(x) + np.sqrt(N0) * _cn(rng, 64)
    res = cd_d_oamp_detect(y, H, U, N0, QPSK, C=C, x_true=x, early_stop=False)
    assert np.allclose(res.posterior.sum(axis=1), 1.0, atol=1e-12)
    for r in res.trace:
        assert EPS_VAR <= r.eta_D_a <= V_MAX
        assert 0 <= r.eta_D_p <= 1
    assert res.trace[-1].mse < 0.05


def test_d_oamp_runs_in_daf_domain(rng):
    cfg, U, H = _scenario(seed=2)
    x = QPSK.points[rng.integers(0, 4, 64)]
    N0 = 0.02
    y = H @ U.inverse(x) + np.sqrt(N0) * _cn(rng, 64)
    dec = d_oamp_detect(U.forward(y), U.conjugate(H), N0, QPSK, C=4).decisions
    assert np.mean(dec == QPSK.nearest(x)) > 0.95


def test_partition_covers_all_rows():
    _, _, H = _scenario()
    part = partition_groups(H, 16)
    assert part.N_c == 4 and part.C == 16
    assert sum(h.shape[0] for h in part.H_tilde) == 64
    assert max(part.discarded_energy) < 1e-5
    assert set(part.flat_cols.tolist()) == set(range(64))
    with pytest.raises(ValueError):
        partition_groups(H, 3)


def test_extrinsic_fallback():
    mu_e, eta_e, bad = extrinsic(np.array([1 + 0j, 2 + 0j]), np.array([0.5, 1.0]), np.zeros(2, complex), np.array([1.0, 0.5]))
    assert bad == 1
    assert eta_e[0] == pytest.approx(1.0) and mu_e[0] == pytest.approx(2.0)
    assert eta_e[1] == V_MAX and mu_e[1] == 2.0


def test_combine_uncovered_symbols_get_flat_prior():
    from wideband_afdm.detectors import GroupPartition

    part = GroupPartition(3, 1, 3, (np.array([0, 1]),), (np.ones((3, 2)),), (0.0,))
    mu, eta = combine(part, np.array([1 + 0j, 2 + 0j]), np.array([0.5, 0.25]))
    assert mu[2] == 0 and eta[2] == 1.0
    assert eta[0] == pytest.approx(0.5)


@given(eta=st.floats(1e-3, 10), seed=st.integers(0, 2**31))
def test_denoiser_posterior(eta, seed):
    r = np.random.default_rng(seed)
    mu = _cn(r, 8)
    mean, var, post = daf_denoise(mu, eta, QPSK)
    assert np.allclose(post.sum(axis=1), 1, atol=1e-12)
    assert np.all(var <= 1 + 1e-12)
    assert np.allclose(mean, post @ QPSK.points)


def test_ml_and_lmmse_noiseless(rng):
    H = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    idx = rng.integers(0, 2, 6)
    y = H @ BPSK.points[idx]
    assert np.array_equal(ml_detect(y, H, BPSK), idx)
    assert np.array_equal(lmmse_detect(y, H, 1e-9, BPSK)[1], idx)
    assert all_candidates(BPSK, 3).shape == (8, 3)
    with pytest.raises(ValueError):
        all_candidates(QPSK, 16)


def test_noiseless_agrees_with_ml_small():
    # N=16 BPSK at negligible noise: distributed detector matches ML
    from wideband_afdm.experiments import fixed_geometry, small_system
    from wideband_afdm.sparsity import daf_path_matrices

    system, spread = small_system()
    ch = ChirpParams(optimize_c1(spread, 16, 1))
    U = DAFTransform(16, ch.c1, ch.c2)
    geom = fixed_geometry(4, system, spread, 3)
    HT = [time_domain_channel_matrix(geom.with_gains(np.eye(4)[i]), system, ch) for i in range(4)]
    Hs = daf_path_matrices(geom, system, ch)
    r = np.random.default_rng(0)
    agree = 0
    for _ in range(100):
        h = _cn(r, 4) / 2
        idx = r.integers(0, 2, 16)
        H_T = np.tensordot(h, np.array(HT), axes=1)
        y = H_T @ U.inverse(BPSK.points[idx])
        d = cd_d_oamp_detect(y, H_T, U, 1e-8, BPSK).decisions
        agree += np.array_equal(d, ml_detect(U.forward(y), np.tensordot(h, Hs, axes=1), BPSK))
    assert agree >= 99


def test_mac_counter_stages(rng):
    _, U, H = _scenario()
    y = _cn(rng, 64)
    res = cd_d_oamp_detect(y, H, U, 0.1, QPSK, C=4, n_t=2, early_stop=False)
    c = res.macs.counts
    assert set(c) >= {"herk", "chol", "trsm", "lmmse_apply", "transform", "denoise"}
    assert c["chol"] == pytest.approx(2 * 4 * 16**3 / 6)
    assert c["denoise"] == 2 * 64 * 4
