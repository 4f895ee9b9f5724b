"""Discrete affine Fourier transform pair, constellations and frame geometry."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

DEFAULT_C2 = 1.0 / (2.0 * np.pi)
DENSE_CAP = 4096


class DimensionError(ValueError):
    """Raised when a vector does not have the frame length N."""


@dataclass(frozen=True)
class Constellation:
    """Unit-energy constellation with Gray bit labels.

    ``labels[i]`` holds the bits (MSB first) carried by ``points[i]``.
    """

    name: str
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        energy = np.mean(np.abs(pts) ** 2)
        if not np.isclose(energy, 1.0, atol=1e-12):
            raise ValueError(f"constellation {self.name!r} has average energy {energy}, expected 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int8))

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def bits_per_symbol(self) -> int:
        return self.labels.shape[1]

    def bits_to_indices(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits).reshape(-1, self.bits_per_symbol)
        weights = 1 << np.arange(self.bits_per_symbol - 1, -1, -1)
        codes = bits @ weights
        label_codes = self.labels @ weights
        lookup = np.empty(self.size, dtype=int)
        lookup[label_codes] = np.arange(self.size)
        return lookup[codes]

    def indices_to_bits(self, idx: np.ndarray) -> np.ndarray:
        return self.labels[np.asarray(idx)].reshape(-1)

    def nearest(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z)
        return np.argmin(np.abs(z[..., None] - self.points) ** 2, axis=-1)


def _gray(n: int) -> int:
    return n ^ (n >> 1)


def _int_bits(v: int, width: int) -> list[int]:
    return [(v >> (width - 1 - b)) & 1 for b in range(width)]


def make_constellation(name: str) -> Constellation:
    """Build ``bpsk``, ``qpsk`` or ``16qam`` with Gray labelling."""
    key = name.lower()
    if key == "bpsk":
        return Constellation("bpsk", np.array([1.0, -1.0]), np.array([[0], [1]]))
    if key == "qpsk":
        pts, labels = [], []
        for b0 in (0, 1):
            for b1 in (0, 1):
                pts.append(((1 - 2 * b0) + 1j * (1 - 2 * b1)) / np.sqrt(2))
                labels.append([b0, b1])
        return Constellation("qpsk", np.array(pts), np.array(labels))
    if key in ("16qam", "qam16"):
        levels = np.array([-3.0, -1.0, 1.0, 3.0])
        pts, labels = [], []
        for i in range(4):
            for q in range(4):
                pts.append((levels[i] + 1j * levels[q]) / np.sqrt(10))
                labels.append(_int_bits(_gray(i), 2) + _int_bits(_gray(q), 2))
        return Constellation("16qam", np.array(pts), np.array(labels))
    raise ValueError(f"unknown alphabet {name!r}")


@dataclass(frozen=True)
class SystemConfig:
    """Static frame geometry. ``B``, ``T`` and ``delta_t`` are derived from N and delta_f."""

    N: int
    delta_f: float
    f_c: float
    alphabet: Constellation = field(default_factory=lambda: make_constellation("qpsk"))

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if self.delta_f <= 0:
            raise ValueError("delta_f must be positive")
        if isinstance(self.alphabet, str):
            object.__setattr__(self, "alphabet", make_constellation(self.alphabet))

    @property
    def B(self) -> float:
        return self.N * self.delta_f

    @property
    def delta_t(self) -> float:
        return 1.0 / self.B

    @property
    def T(self) -> float:
        return self.N * self.delta_t

    @classmethod
    def from_bandwidth(cls, N: int, B: float, f_c: float, alphabet="qpsk") -> "SystemConfig":
        return cls(N=N, delta_f=B / N, f_c=f_c, alphabet=alphabet)


@dataclass(frozen=True)
class ChirpParams:
    c1: float
    c2: float = DEFAULT_C2

    def __post_init__(self):
        # c1 = 0 is admitted so the transform can collapse to the plain DFT.
        if self.c1 < 0:
            raise ValueError(f"only the c1 >= 0 branch is supported, got c1={self.c1}")


def chirp_phase(c: float, n: np.ndarray) -> np.ndarray:
    """exp(-j 2 pi c n^2) with the phase reduced mod 1 before exponentiation."""
    n = np.asarray(n, dtype=np.int64)
    cycles = np.mod(c * (n * n).astype(float), 1.0)
    return np.exp(-2j * np.pi * cycles)


@dataclass(frozen=True)
class DAFTransform:
    """U = Lambda_c2 F_N Lambda_c1 applied in factored form.

    ``forward``/``inverse`` act along ``axis`` so whole matrices can be
    transformed column- or row-wise. ``matrix()`` materialises U for N up to
    ``dense_cap`` and is intended for checks, not the production path.
    """

    N: int
    c1: float
    c2: float
    dense_cap: int = DENSE_CAP

    @cached_property
    def lam1(self) -> np.ndarray:
        return chirp_phase(self.c1, np.arange(self.N))

    @cached_property
    def lam2(self) -> np.ndarray:
        return chirp_phase(self.c2, np.arange(self.N))

    def _check(self, x: np.ndarray, axis: int) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape[axis] != self.N:
            raise DimensionError(f"expected length {self.N} along axis {axis}, got {x.shape[axis]}")
        return x

    def _bcast(self, v: np.ndarray, ndim: int, axis: int) -> np.ndarray:
        shape = [1] * ndim
        shape[axis] = self.N
        return v.reshape(shape)

    def forward(self, x: np.ndarray, axis: int = 0) -> np.ndarray:
        x = self._check(x, axis)
        l1 = self._bcast(self.lam1, x.ndim, axis)
        l2 = self._bcast(self.lam2, x.ndim, axis)
        return l2 * np.fft.fft(l1 * x, axis=axis, norm="ortho")

    def inverse(self, x: np.ndarray, axis: int = 0) -> np.ndarray:
        x = self._check(x, axis)
        l1 = self._bcast(self.lam1, x.ndim, axis)
        l2 = self._bcast(self.lam2, x.ndim, axis)
        return np.conj(l1) * np.fft.ifft(np.conj(l2) * x, axis=axis, norm="ortho")

    def conjugate(self, H: np.ndarray) -> np.ndarray:
        """U H U^H for a square N x N matrix."""
        left = self.forward(H, axis=0)
        # (A U^H) = (U A^H)^H
        return np.conj(self.forward(np.conj(left), axis=1))

    def matrix(self) -> np.ndarray:
        if self.N > self.dense_cap:
            raise ValueError(f"dense DAF matrix refused for N={self.N} > cap {self.dense_cap}")
        n = np.arange(self.N)
        F = np.exp(-2j * np.pi * np.mod(np.outer(n, n), self.N) / self.N) / np.sqrt(self.N)
        return self.lam2[:, None] * F * self.lam1[None, :]


def daf_matrix(config: SystemConfig, chirp: ChirpParams) -> DAFTransform:
    return DAFTransform(config.N, chirp.c1, chirp.c2)


def daf_forward(x_time: np.ndarray, chirp: ChirpParams, config: SystemConfig) -> np.ndarray:
    return daf_matrix(config, chirp).forward(x_time)


def daf_inverse(x_daf: np.ndarray, chirp: ChirpParams, config: SystemConfig) -> np.ndarray:
    return daf_matrix(config, chirp).inverse(x_daf)
