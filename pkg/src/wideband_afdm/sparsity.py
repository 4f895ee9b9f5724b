"""DAF-domain equivalent channel: exact matrices, POSP supports and widths."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelPath, WidebandChannel, psi_index, time_domain_path_matrix
from .daf_core import ChirpParams, SystemConfig, daf_matrix

DEFAULT_NV = 2


class DegenerateKernelError(ValueError):
    """POSP needs a quadratic phase; alpha = 0 paths have none."""


def daf_path_matrix(path: ChannelPath, config: SystemConfig, chirp: ChirpParams) -> np.ndarray:
    """Unit-gain DAF-domain matrix H_i = U H_T,i U^H."""
    return daf_matrix(config, chirp).conjugate(time_domain_path_matrix(path, config, chirp))


def daf_path_matrices(channel: WidebandChannel, config: SystemConfig, chirp: ChirpParams) -> np.ndarray:
    """Stack of unit-gain per-path DAF matrices, shape (P, N, N)."""
    return np.stack([daf_path_matrix(p, config, chirp) for p in channel.paths])


def daf_domain_channel(channel: WidebandChannel, config: SystemConfig, chirp: ChirpParams) -> np.ndarray:
    H = np.zeros((config.N, config.N), dtype=complex)
    for path in channel.paths:
        H += path.h * time_domain_path_matrix(path, config, chirp)
    return daf_matrix(config, chirp).conjugate(H)


def _direct_row(path: ChannelPath, p: int, q: np.ndarray, config: SystemConfig, chirp: ChirpParams) -> np.ndarray:
    N, c1, c2 = config.N, chirp.c1, chirp.c2
    a, ell, k = path.alpha, path.ell, path.k
    n = np.arange(N)
    s = (1.0 + a) * n - ell
    psi = psi_index(q[:, None], s[None, :], N, c1)
    # 2 N c1 (1+a) ell n / N split so the large integer-ish parts stay exact mod 1
    slope = (p - (1.0 + a) * q[:, None] + 2 * N * c1 * (1.0 + a) * ell - k + psi * a * N) / N
    ph = c1 * (a * a + 2 * a) * (n * n)[None, :] - np.mod(slope * n[None, :], 1.0)
    F = np.exp(2j * np.pi * ph).sum(axis=1)
    pre = np.exp(2j * np.pi * np.mod(c1 * ell * ell - q * ell / N + c2 * (q * q - p * p), 1.0))
    return pre * F / N


def daf_domain_path_direct(path: ChannelPath, p: int, q: int, config: SystemConfig, chirp: ChirpParams) -> complex:
    """Single entry H_i[p, q] from the explicit n-sum, O(N)."""
    return complex(_direct_row(path, int(p), np.array([int(q)]), config, chirp)[0])


def daf_domain_path_direct_matrix(
    path: ChannelPath, config: SystemConfig, chirp: ChirpParams, rows=None
) -> np.ndarray:
    """Rows of H_i assembled entrywise; O(N^2) per row, meant for cross-checks."""
    rows = range(config.N) if rows is None else rows
    q = np.arange(config.N)
    return np.stack([_direct_row(path, int(p), q, config, chirp) for p in rows])


def narrowband_kernel(path: ChannelPath, p, q, config: SystemConfig, chirp: ChirpParams) -> np.ndarray:
    """Geometric-series closed form of the n-sum for alpha = 0."""
    N = config.N
    x = np.asarray(p, dtype=float) - np.asarray(q, dtype=float) + 2 * N * chirp.c1 * path.ell - path.k
    num = np.exp(-2j * np.pi * x) - 1.0
    den = np.exp(-2j * np.pi * x / N) - 1.0
    near = np.abs(den) < 1e-12
    out = np.where(near, N + 0j, num / np.where(near, 1.0, den))
    return out


@dataclass(frozen=True)
class PospKernel:
    K: float
    phi: float
    n_stat: float

    def theta(self, n):
        n = np.asarray(n, dtype=float)
        return self.K * n * n / 2 - self.phi * n


def posp_kernel(path: ChannelPath, p: int, q: int, config: SystemConfig, chirp: ChirpParams, psi: float = 0.0) -> PospKernel:
    """K, phi and the stationary point. phi is taken on the branch (mod 1) nearest the window."""
    N, c1, a = config.N, chirp.c1, path.alpha
    K = 2 * c1 * (a * a + 2 * a)
    if K == 0:
        raise DegenerateKernelError("alpha = 0 has no stationary point; use the narrowband kernel")
    phi = (p - (1 + a) * q + 2 * N * c1 * (1 + a) * path.ell - path.k + psi * a * N) / N
    lo, hi = sorted((0.0, K * (N - 1)))
    mid = (lo + hi) / 2
    phi = phi + np.round(mid - phi)
    return PospKernel(K=K, phi=float(phi), n_stat=float(phi / K))


def posp_magnitude(path: ChannelPath, p: int, q: int, config: SystemConfig, chirp: ChirpParams) -> float:
    kern = posp_kernel(path, p, q, config, chirp)
    N = config.N
    if 0 <= kern.n_stat <= N - 1:
        return 1.0 / (N * math.sqrt(abs(kern.K)))
    return 0.0


@dataclass(frozen=True)
class PospSupport:
    """Support ``q_start, ..., q_start + width - 1`` (mod N) of one path in row p.

    ``Q`` and ``Q_tilde`` are the unrounded inner endpoints before the N_v
    widening; ``q_low``/``q_high`` are the rounded outer endpoints mod N.
    """

    p: int
    N: int
    Q: float
    Q_tilde: float
    N_v: int
    q_start: int
    width: int

    @property
    def q_low(self) -> int:
        return self.q_start % self.N

    @property
    def q_high(self) -> int:
        return (self.q_start + self.width - 1) % self.N

    def indices(self) -> np.ndarray:
        return np.arange(self.q_start, self.q_start + min(self.width, self.N)) % self.N

    def contains(self, q: int) -> bool:
        return self.width >= self.N or (q - self.q_start) % self.N < self.width


def _bounds(path: ChannelPath, p, config: SystemConfig, chirp: ChirpParams, psi=None):
    N, c1, a, k = config.N, chirp.c1, path.alpha, path.k
    p = np.asarray(p, dtype=float)
    K = 2 * c1 * (a * a + 2 * a)
    base = 2 * N * c1 * path.ell
    if psi is None:
        spread_term = K * N * (N - 1)
        lo_a = base + (p - k - spread_term) / (1 + a)
        hi_a = base + (p - k + 2 * c1 * a * N * N) / (1 + a)
        if a >= 0:
            return lo_a, hi_a
        return hi_a, lo_a
    # unstrengthened variant for a given wrap count
    ext = psi * a * N
    first = base + (p - k - K * N * (N - 1) + ext) / (1 + a)
    second = base + (p - k + ext) / (1 + a)
    return (first, second) if a >= 0 else (second, first)


def support_width(path: ChannelPath, N_v: int, config: SystemConfig, chirp: ChirpParams) -> int:
    N, c1, a = config.N, chirp.c1, path.alpha
    K = 2 * c1 * (a * a + 2 * a)
    raw = abs(K * N * (N - 1) + 2 * c1 * a * N * N) / (1 + a) + 2 * N_v + 1
    return int(math.ceil(raw - 1e-9))


def posp_support(
    path: ChannelPath, p: int, N_v: int, config: SystemConfig, chirp: ChirpParams, psi=None
) -> PospSupport:
    """Interval [Q - N_v, Q_tilde + N_v] mod N, rounded to ``support_width`` bins about its centre.

    ``psi`` selects the unstrengthened bounds evaluated at one wrap count;
    the default uses the psi-free bounds valid for every wrap count.
    """
    Q, Qt = (float(v) for v in _bounds(path, p, config, chirp, psi))
    if psi is None:
        width = support_width(path, N_v, config, chirp)
    else:
        width = int(math.ceil(abs(Qt - Q) + 2 * N_v + 1 - 1e-9))
    centre = (Q + Qt) / 2
    q_start = int(math.floor(centre - (width - 1) / 2 + 0.5))
    return PospSupport(p=int(p), N=config.N, Q=Q, Q_tilde=Qt, N_v=N_v, q_start=q_start, width=width)


def support_mask(path: ChannelPath, N_v: int, config: SystemConfig, chirp: ChirpParams) -> np.ndarray:
    """Boolean N x N mask of the POSP supports of every row."""
    N = config.N
    width = support_width(path, N_v, config, chirp)
    Q, Qt = _bounds(path, np.arange(N), config, chirp)
    starts = np.floor((Q + Qt) / 2 - (width - 1) / 2 + 0.5).astype(np.int64)
    mask = np.zeros((N, N), dtype=bool)
    if width >= N:
        mask[:] = True
        return mask
    cols = (starts[:, None] + np.arange(width)[None, :]) % N
    mask[np.arange(N)[:, None], cols] = True
    return mask


def sparse_io(
    x_daf: np.ndarray,
    channel: WidebandChannel,
    config: SystemConfig,
    chirp: ChirpParams,
    N_v: int = DEFAULT_NV,
    path_matrices: np.ndarray | None = None,
) -> np.ndarray:
    """Truncated product keeping exact entries of each path only on its POSP support."""
    if path_matrices is None:
        path_matrices = daf_path_matrices(channel, config, chirp)
    y = np.zeros(config.N, dtype=complex)
    for path, Hi in zip(channel.paths, path_matrices):
        y += path.h * (np.where(support_mask(path, N_v, config, chirp), Hi, 0) @ x_daf)
    return y


def row_coverage(row: np.ndarray, support: PospSupport) -> float:
    """Fraction of the row energy that falls inside the support."""
    e = np.abs(row) ** 2
    return float(e[support.indices()].sum() / e.sum())


def scan_support(row: np.ndarray, frac: float = 0.1) -> tuple[int, int]:
    """Shortest circular arc containing every bin with |row| >= frac * max.

    Returns ``(start, end)`` with ``start`` in [0, N) and ``end >= start``
    possibly beyond N when the arc wraps.
    """
    mag = np.abs(row)
    idx = np.flatnonzero(mag >= frac * mag.max())
    N = len(row)
    if len(idx) == 1:
        return int(idx[0]), int(idx[0])
    gaps = np.diff(np.concatenate([idx, [idx[0] + N]]))
    g = int(np.argmax(gaps))
    start = int(idx[(g + 1) % len(idx)])
    end = int(idx[g]) if g + 1 < len(idx) else int(idx[g])
    if end < start:
        end += N
    return start, end


def export_support_csv(
    out: str | Path,
    channel: WidebandChannel,
    p: int,
    config: SystemConfig,
    chirp: ChirpParams,
    N_v: int = DEFAULT_NV,
    H_bar: np.ndarray | None = None,
) -> Path:
    """Write |H_bar[p, q]| together with per-path support membership for every q."""
    out = Path(out)
    if H_bar is None:
        H_bar = daf_domain_channel(channel, config, chirp)
    supports = [posp_support(path, p, N_v, config, chirp) for path in channel.paths]
    with out.open("w", newline="") as fh:
        fh.write(f"# p={p} N={config.N} c1={chirp.c1!r} N_v={N_v}\n")
        for i, s in enumerate(supports):
            fh.write(f"# path{i}: ell={channel.paths[i].ell} alpha={channel.paths[i].alpha!r} "
                     f"q_low={s.q_low} q_high={s.q_high} width={s.width}\n")
        w = csv.writer(fh)
        w.writerow(["q", "abs_H"] + [f"in_path{i}" for i in range(len(supports))])
        for q in range(config.N):
            w.writerow([q, f"{abs(H_bar[p, q]):.9e}"] + [int(s.contains(q)) for s in supports])
    return out
