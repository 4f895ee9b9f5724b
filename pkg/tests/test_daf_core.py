import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wideband_afdm.daf_core import (
    DEFAULT_C2,
    ChirpParams,
    DAFTransform,
    DimensionError,
    SystemConfig,
    daf_forward,
    daf_inverse,
    make_constellation,
)


def test_matrix_entries_frozen():
    # direct evaluation of exp(-j2pi(c1 n^2 + c2 p^2 + pn/N))/sqrt(N)
    U = DAFTransform(4, 1 / 8, DEFAULT_C2).matrix()
    assert U[1, 2] == pytest.approx(0.2701511529340703 - 0.420735492403948j, abs=1e-13)
    assert U[3, 3] == pytest.approx(0.17642730557807879 + 0.4678390811448518j, abs=1e-13)


def test_zero_chirps_give_unitary_dft(rng):
    x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    assert np.allclose(DAFTransform(16, 0.0, 0.0).forward(x), np.fft.fft(x, norm="ortho"), atol=1e-13)


@given(N=st.integers(2, 96), c1=st.floats(0, 2), c2=st.floats(0, 1), seed=st.integers(0, 2**31))
def test_round_trip_and_unitarity(N, c1, c2, seed):
    r = np.random.default_rng(seed)
    x = r.standard_normal(N) + 1j * r.standard_normal(N)
    U = DAFTransform(N, c1, c2)
    assert np.max(np.abs(U.inverse(U.forward(x)) - x)) < 1e-10
    assert np.linalg.norm(U.forward(x)) == pytest.approx(np.linalg.norm(x), rel=1e-12)


def test_fast_matches_dense_and_conjugate(rng):
    U = DAFTransform(32, 0.07, DEFAULT_C2)
    M = U.matrix()
    X = rng.standard_normal((32, 3)) + 1j * rng.standard_normal((32, 3))
    assert np.allclose(U.forward(X, axis=0), M @ X, atol=1e-12)
    H = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
    assert np.allclose(U.conjugate(H), M @ H @ M.conj().T, atol=1e-11)


def test_wrappers_and_dimension_check():
    cfg = SystemConfig(8, 4.0, 6000.0)
    ch = ChirpParams(0.2)
    x = np.arange(8) + 0j
    assert np.allclose(daf_inverse(daf_forward(x, ch, cfg), ch, cfg), x)
    with pytest.raises(DimensionError):
        daf_forward(np.ones(7), ch, cfg)


def test_dense_cap():
    with pytest.raises(ValueError):
        DAFTransform(8192, 0.1, 0.1).matrix()


def test_negative_c1_rejected():
    with pytest.raises(ValueError):
        ChirpParams(-0.01)


@pytest.mark.parametrize("name", ["bpsk", "qpsk", "16qam"])
def test_constellations(name):
    A = make_constellation(name)
    assert np.mean(np.abs(A.points) ** 2) == pytest.approx(1.0)
    assert A.size == 2**A.bits_per_symbol
    idx = np.arange(A.size)
    assert np.array_equal(A.bits_to_indices(A.indices_to_bits(idx)), idx)
    assert np.array_equal(A.nearest(A.points), idx)
    # Gray: nearest neighbours differ in one bit
    d = np.abs(A.points[:, None] - A.points[None, :])
    dmin = d[d > 0].min()
    for i, j in zip(*np.nonzero(np.isclose(d, dmin))):
        assert np.sum(A.labels[i] != A.labels[j]) == 1


def test_derived_grid():
    cfg = SystemConfig.from_bandwidth(1024, 4000.0, 6000.0)
    assert cfg.delta_f == pytest.approx(3.90625)
    assert cfg.delta_t == pytest.approx(2.5e-4)
    assert cfg.T == pytest.approx(0.256)
