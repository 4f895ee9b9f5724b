import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wideband_afdm.channel import ChannelPath, ChannelSpread, sample_channel
from wideband_afdm.chirp_opt import optimize_c1
from wideband_afdm.daf_core import ChirpParams, SystemConfig
from wideband_afdm.sparsity import (
    daf_domain_channel,
    daf_domain_path_direct,
    daf_domain_path_direct_matrix,
    daf_path_matrices,
    daf_path_matrix,
    narrowband_kernel,
    posp_kernel,
    posp_magnitude,
    posp_support,
    row_coverage,
    scan_support,
    sparse_io,
    support_mask,
    support_width,
)

CFG = SystemConfig(256, 16.0, 6000.0)
SPREAD = ChannelSpread.for_system(CFG, 4e-3, 1e-4)
CH = ChirpParams(optimize_c1(SPREAD, 256, 2))


def test_entrywise_matches_conjugation():
    cfg = SystemConfig(32, 125.0, 6000.0)
    spread = ChannelSpread.for_system(cfg, 1e-3, 1e-4)
    ch = ChirpParams(optimize_c1(spread, 32, 2))
    chan = sample_channel(spread, 4, 7, cfg)
    for path in chan.paths:
        H = daf_path_matrix(path, cfg, ch)
        assert np.max(np.abs(daf_domain_path_direct_matrix(path, cfg, ch) - H)) < 1e-10
        assert daf_domain_path_direct(path, 3, 5, cfg, ch) == pytest.approx(H[3, 5], abs=1e-10)
    Hbar = daf_domain_channel(chan, cfg, ch)
    Hs = daf_path_matrices(chan, cfg, ch)
    assert np.allclose(Hbar, np.tensordot(chan.gains, Hs, axes=1), atol=1e-12)


def test_alpha_zero_closed_form():
    cfg = SystemConfig(64, 62.5, 6000.0)
    ch = ChirpParams(0.05)
    path = ChannelPath(1.0, 2, 0.0, 0.3)
    p, q = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
    F = narrowband_kernel(path, p, q, cfg, ch)
    assert np.max(np.abs(np.abs(F) / 64 - np.abs(daf_path_matrix(path, cfg, ch)))) < 1e-10


def test_strong_scaling_support():
    # alpha = 0.01 spreads a row over ~200 bins; the support still holds its energy
    ch = ChirpParams(0.05)
    path = ChannelPath(1.0, 3, 0.01, 0.01 * 6000 / 16)
    sup = posp_support(path, 40, 2, CFG, ch)
    assert sup.width == 200
    assert row_coverage(daf_path_matrix(path, CFG, ch)[40], sup) > 0.98
    kern = posp_kernel(path, 40, 100, CFG, ch)
    assert kern.K == pytest.approx(2 * 0.05 * (0.01**2 + 0.02))
    expect = 1 / (256 * np.sqrt(kern.K)) if 0 <= kern.n_stat <= 255 else 0.0
    assert posp_magnitude(path, 40, 100, CFG, ch) == pytest.approx(expect)


@given(seed=st.integers(0, 2**31), p=st.integers(0, 255))
def test_supports_cover_and_separate(seed, p):
    chan = sample_channel(SPREAD, 4, seed, CFG)
    Hs = daf_path_matrices(chan, CFG, CH)
    sets = []
    for path, H in zip(chan.paths, Hs):
        sup = posp_support(path, p, 2, CFG, CH)
        assert row_coverage(H[p], sup) > 0.9
        assert sup.width == support_width(path, 2, CFG, CH)
        sets.append(set(sup.indices().tolist()))
    for i in range(4):
        for j in range(i + 1, 4):
            # boundary-touching intervals are tolerated (integer +1 margin)
            assert len(sets[i] & sets[j]) <= 1


def test_mask_rows_match_supports():
    path = ChannelPath(1.0, 5, -6e-5, -6e-5 * 6000 / 16)
    mask = support_mask(path, 2, CFG, CH)
    for p in (0, 17, 255):
        sup = posp_support(path, p, 2, CFG, CH)
        assert set(np.flatnonzero(mask[p])) == set(sup.indices().tolist())


def test_truncated_product_close(rng):
    chan = sample_channel(SPREAD, 4, 3, CFG)
    Hs = daf_path_matrices(chan, CFG, CH)
    x = np.exp(2j * np.pi * rng.random(256))
    full = np.einsum("p,pij,j->i", chan.gains, Hs, x)
    err = np.linalg.norm(sparse_io(x, chan, CFG, CH, 2, Hs) - full) / np.linalg.norm(full)
    assert err < 0.3


def test_scan_support_wraps():
    row = np.zeros(16)
    row[[14, 15, 0, 1]] = 1.0
    assert scan_support(row) == (14, 17)
    row = np.zeros(16)
    row[[3, 4, 5]] = [0.5, 1.0, 0.05]
    assert scan_support(row) == (3, 4)
