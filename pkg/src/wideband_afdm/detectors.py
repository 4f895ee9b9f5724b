"""Symbol detectors: exhaustive ML, LMMSE and the cross-domain distributed OAMP family.

The iterative detectors share one engine. The linear module runs a
group-wise LMMSE on row blocks of a (sparse) channel matrix; the nonlinear
module is a symbol-wise Bayes denoiser over the constellation. ``fwd`` and
``inv`` map between the two: the DAF pair for CD-D-OAMP, the identity for
D-OAMP.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, blas, lapack, solve_triangular

from .daf_core import Constellation, DAFTransform

EPS_VAR = 1e-12
V_MAX = 1e6
RHO_DEFAULT = 0.01
ML_CAP = 2**20


@dataclass
class MacCounter:
    """Multiply-accumulate tallies per stage, accumulated over iterations."""

    counts: dict = field(default_factory=dict)

    def add(self, stage: str, n: float):
        self.counts[stage] = self.counts.get(stage, 0.0) + float(n)

    def total(self, stages=None) -> float:
        keys = self.counts if stages is None else stages
        return float(sum(self.counts.get(k, 0.0) for k in keys))

    def dlmmse(self) -> float:
        return self.total(("herk", "chol", "trsm", "lmmse_apply"))


# ---------------------------------------------------------------- baselines

def all_candidates(alphabet: Constellation, N: int, cap: int = ML_CAP) -> np.ndarray:
    """Index matrix (Q^N, N) of every transmit vector, first symbol most significant."""
    Q = alphabet.size
    if Q**N > cap:
        raise ValueError(f"ML search over {Q}^{N} candidates exceeds cap {cap}")
    return np.array(list(itertools.product(range(Q), repeat=N)), dtype=np.int32)


def ml_detect(y: np.ndarray, H: np.ndarray, alphabet: Constellation, cap: int = ML_CAP) -> np.ndarray:
    """Exhaustive argmin ||y - H x||^2; returns constellation indices."""
    return ml_detect_batch(np.asarray(y)[None, :], H, alphabet, cap=cap)[0]


def ml_detect_batch(
    Y: np.ndarray,
    H: np.ndarray,
    alphabet: Constellation,
    cand: np.ndarray | None = None,
    HX: np.ndarray | None = None,
    cap: int = ML_CAP,
    chunk: int = 64,
) -> np.ndarray:
    """ML for many observations of the same channel.

    ``cand``/``HX`` (candidate indices and their noiseless images, one per
    row) may be passed in to amortise them across calls.
    """
    N = H.shape[1]
    if cand is None:
        cand = all_candidates(alphabet, N, cap)
    if HX is None:
        HX = alphabet.points[cand] @ H.T
    energy = np.sum(np.abs(HX) ** 2, axis=1)
    Y = np.atleast_2d(Y)
    out = np.empty((Y.shape[0], N), dtype=np.int32)
    for s in range(0, Y.shape[0], chunk):
        blk = Y[s: s + chunk]
        metric = energy[None, :] - 2 * np.real(blk.conj() @ HX.T)
        out[s: s + chunk] = cand[np.argmin(metric, axis=1)]
    return out


def lmmse_detect(y: np.ndarray, H: np.ndarray, N0: float, alphabet: Constellation):
    """x_hat = H^H (H H^H + N0 I)^-1 y with nearest-point slicing."""
    A = H @ H.conj().T + N0 * np.eye(H.shape[0])
    x_hat = H.conj().T @ np.linalg.solve(A, y)
    return x_hat, alphabet.nearest(x_hat)


# ---------------------------------------------------------------- partition

@dataclass(frozen=True)
class GroupPartition:
    """Contiguous row blocks and their trimmed column sets.

    ``cols[c]`` lists the global column indices D_c kept for block c and
    ``H_tilde[c]`` the corresponding N_c x |D_c| submatrix. ``flat_cols``
    concatenates all D_c, which is how per-entry group messages are stored.
    """

    N: int
    C: int
    N_c: int
    cols: tuple
    H_tilde: tuple
    discarded_energy: tuple

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.cols])

    @property
    def flat_cols(self) -> np.ndarray:
        return np.concatenate(self.cols)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def rows(self, c: int) -> slice:
        return slice(c * self.N_c, (c + 1) * self.N_c)

    def groups_of(self, j: int) -> list[tuple[int, int]]:
        """(group, position) pairs for every group whose D_c contains symbol j."""
        out = []
        for c, cols in enumerate(self.cols):
            pos = np.flatnonzero(cols == j)
            if len(pos):
                out.append((c, int(pos[0])))
        return out


def partition_groups(H: np.ndarray, C: int, energy_threshold: float = 1e-6) -> GroupPartition:
    N = H.shape[0]
    if C < 1 or N % C:
        raise ValueError(f"C={C} must divide N={N}")
    N_c = N // C
    cols, Ht, lost = [], [], []
    for c in range(C):
        blk = H[c * N_c:(c + 1) * N_c]
        e = np.sum(np.abs(blk) ** 2, axis=0)
        keep = np.flatnonzero(e > energy_threshold * e.max()) if e.max() > 0 else np.arange(N)
        cols.append(keep)
        Ht.append(np.ascontiguousarray(blk[:, keep]))
        lost.append(float(1 - e[keep].sum() / e.sum()) if e.sum() > 0 else 0.0)
    return GroupPartition(N=N, C=C, N_c=N_c, cols=tuple(cols), H_tilde=tuple(Ht), discarded_energy=tuple(lost))


# ---------------------------------------------------------------- engine stages

def _clamp(v: np.ndarray) -> np.ndarray:
    return np.clip(v, EPS_VAR, V_MAX)


def _chol_upper(A: np.ndarray) -> np.ndarray:
    U, info = lapack.zpotrf(A, lower=0, clean=1)
    if info != 0:
        jitter = 1e-12 * np.real(np.trace(A)) / len(A) + 1e-300
        U, info = lapack.zpotrf(A + jitter * np.eye(len(A)), lower=0, clean=1)
        if info != 0:
            raise LinAlgError("LMMSE inner matrix is not positive definite")
    return U


def lmmse_group(
    Ht: np.ndarray,
    y: np.ndarray | None,
    mu_a: np.ndarray | None,
    eta_a: np.ndarray,
    N0: float,
    counter: MacCounter | None = None,
):
    """Posterior mean and variance of one group.

    Covariance form with A = H diag(eta_a) H^H + N0 I = R^H R:
    mu_p = mu_a + eta_a * H^H A^-1 (y - H mu_a) and
    eta_p = eta_a - eta_a^2 * colsum |R^-H H|^2. ``y=None`` skips the mean.
    """
    Nc, D = Ht.shape
    G = Ht * np.sqrt(eta_a)[None, :]
    A = blas.zherk(1.0, G)  # upper triangle of G G^H
    A[np.diag_indices(Nc)] += N0
    R = _chol_upper(A)
    B = solve_triangular(R, Ht, trans="C", lower=False, check_finite=False)
    eta_p = eta_a - eta_a**2 * np.sum(np.abs(B) ** 2, axis=0)
    if counter is not None:
        counter.add("herk", Nc * Nc * D / 2)
        counter.add("chol", Nc**3 / 6)
        counter.add("trsm", Nc * Nc * D / 2)
    if y is None:
        return None, eta_p
    r = solve_triangular(R, y - Ht @ mu_a, trans="C", lower=False, check_finite=False)
    mu_p = mu_a + eta_a * (B.conj().T @ r)
    if counter is not None:
        counter.add("lmmse_apply", Nc * D * 2 + Nc * Nc / 2)
    return mu_p, eta_p


def d_lmmse_step(partition: GroupPartition, y: np.ndarray, mu_a: np.ndarray, eta_a: np.ndarray, N0: float,
                 counter: MacCounter | None = None):
    """All groups; mu_a/eta_a/outputs are flat arrays aligned with ``partition.flat_cols``."""
    off = partition.offsets
    mu_p = np.empty_like(mu_a)
    eta_p = np.empty_like(eta_a)
    for c in range(partition.C):
        sl = slice(off[c], off[c + 1])
        mu_p[sl], eta_p[sl] = lmmse_group(
            partition.H_tilde[c], y[partition.rows(c)], mu_a[sl], eta_a[sl], N0, counter
        )
    return mu_p, _clamp(eta_p)


def extrinsic(mu_p, eta_p, mu_a, eta_a):
    """Precision subtraction; entries whose precision would be <= 1/V_MAX fall back to (mu_p, V_MAX).

    Returns (mu_e, eta_e, number of clamped entries).
    """
    prec = 1.0 / eta_p - 1.0 / eta_a
    bad = prec <= 1.0 / V_MAX
    eta_e = np.where(bad, V_MAX, 1.0 / np.where(bad, 1.0, prec))
    eta_e = _clamp(eta_e)
    mu_e = np.where(bad, mu_p, eta_e * (mu_p / eta_p - mu_a / eta_a))
    return mu_e, eta_e, int(bad.sum())


def combine(partition: GroupPartition, mu_e: np.ndarray, eta_e: np.ndarray):
    """Precision-weighted merge of every group's message about each symbol.

    Symbols no group observes get the uninformative (0, 1).
    """
    idx = partition.flat_cols
    N = partition.N
    prec = np.bincount(idx, weights=1.0 / eta_e, minlength=N)
    wr = np.bincount(idx, weights=(mu_e / eta_e).real, minlength=N)
    wi = np.bincount(idx, weights=(mu_e / eta_e).imag, minlength=N)
    seen = prec > 0
    eta = np.where(seen, 1.0 / np.where(seen, prec, 1.0), 1.0)
    mu = np.where(seen, eta * (wr + 1j * wi), 0.0)
    return mu, _clamp(eta)


def extrinsic_and_combine(partition, mu_p, eta_p, mu_a, eta_a):
    mu_e, eta_e, n_bad = extrinsic(mu_p, eta_p, mu_a, eta_a)
    mu_T, eta_T = combine(partition, mu_e, eta_e)
    return mu_T, eta_T, mu_e, eta_e, n_bad


def daf_denoise(mu_a: np.ndarray, eta_a: float, alphabet: Constellation, prior: np.ndarray | None = None):
    """Symbol-wise posterior over the alphabet for observations mu_a with noise variance eta_a.

    Returns (posterior means, per-symbol variances, posterior matrix of shape (N, Q)).
    """
    pts = alphabet.points
    logw = -np.abs(mu_a[:, None] - pts[None, :]) ** 2 / max(eta_a, EPS_VAR)
    if prior is not None:
        with np.errstate(divide="ignore"):
            logw = logw + np.log(prior)
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    post = w / w.sum(axis=1, keepdims=True)
    mean = post @ pts
    var = np.sum(post * np.abs(pts[None, :] - mean[:, None]) ** 2, axis=1)
    return mean, var, post


def next_prior(partition: GroupPartition, mu_T_p: np.ndarray, eta_T_p: float, mu_e: np.ndarray, eta_e: np.ndarray):
    """Per-entry prior for the next linear pass; clamped entries fall back to (mu_T_p, V_MAX)."""
    idx = partition.flat_cols
    prec = 1.0 / max(eta_T_p, EPS_VAR) - 1.0 / eta_e
    bad = prec <= 1.0 / V_MAX
    eta_a = _clamp(np.where(bad, V_MAX, 1.0 / np.where(bad, 1.0, prec)))
    mu_a = np.where(bad, mu_T_p[idx], eta_a * (mu_T_p[idx] / max(eta_T_p, EPS_VAR) - mu_e / eta_e))
    return mu_a, eta_a, int(bad.sum())


# ---------------------------------------------------------------- iterative detectors

@dataclass
class IterationRecord:
    iteration: int
    eta_D_a: float
    eta_D_p: float
    theta: float
    updated: bool
    mse: float | None
    clamped: int


@dataclass
class DetectionResult:
    decisions: np.ndarray
    posterior: np.ndarray
    mu_D: np.ndarray
    iterations: int
    trace: list
    macs: MacCounter


def _identity(x):
    return x


def oamp_engine(
    y: np.ndarray,
    partition: GroupPartition,
    N0: float,
    alphabet: Constellation,
    fwd: Callable = _identity,
    inv: Callable = _identity,
    n_t: int = 15,
    rho: float = RHO_DEFAULT,
    prior: np.ndarray | None = None,
    x_true: np.ndarray | None = None,
    early_stop: bool = True,
    transform_macs: float = 0.0,
) -> DetectionResult:
    N = partition.N
    Q = alphabet.size
    counter = MacCounter()
    n_flat = len(partition.flat_cols)
    mu_a = np.zeros(n_flat, dtype=complex)
    eta_a = np.ones(n_flat)
    P = np.full((N, Q), 1.0 / Q) if prior is None else np.array(prior, dtype=float)
    theta_prev = 0.0
    trace = []
    mu_keep = np.zeros(N, dtype=complex)
    it = 0
    for it in range(1, n_t + 1):
        mu_p, eta_p = d_lmmse_step(partition, y, mu_a, eta_a, N0, counter)
        mu_T, eta_T, mu_e, eta_e, bad1 = extrinsic_and_combine(partition, mu_p, eta_p, mu_a, eta_a)
        mu_Da = fwd(mu_T)
        eta_Da = float(np.mean(eta_T))
        mu_Dp, var_Dp, post = daf_denoise(mu_Da, eta_Da, alphabet, prior)
        eta_Dp = float(np.mean(var_Dp))
        counter.add("transform", transform_macs)
        counter.add("denoise", N * Q)
        mu_Tp = inv(mu_Dp)
        mu_a, eta_a, bad2 = next_prior(partition, mu_Tp, eta_Dp, mu_e, eta_e)
        theta = float(np.mean(post.max(axis=1) >= 1 - rho))
        updated = theta >= theta_prev
        if updated:
            P = post
            mu_keep = mu_Dp
        mse = None if x_true is None else float(np.mean(np.abs(mu_Dp - x_true) ** 2))
        trace.append(IterationRecord(it, eta_Da, eta_Dp, theta, updated, mse, bad1 + bad2))
        theta_prev = theta
        if early_stop and theta == 1.0:
            break
    return DetectionResult(
        decisions=np.argmax(P, axis=1), posterior=P, mu_D=mu_keep, iterations=it, trace=trace, macs=counter
    )


def _fft_macs(N: int) -> float:
    return 2 * N * np.log2(max(N, 2)) + 4 * N


def cd_d_oamp_detect(
    y_T: np.ndarray,
    H_T: np.ndarray,
    transform: DAFTransform,
    N0: float,
    alphabet: Constellation,
    C: int = 1,
    n_t: int = 15,
    rho: float = RHO_DEFAULT,
    energy_threshold: float = 1e-6,
    partition: GroupPartition | None = None,
    **kw,
) -> DetectionResult:
    """Distributed LMMSE on the time-domain channel, denoising in the DAF domain."""
    if partition is None:
        partition = partition_groups(H_T, C, energy_threshold)
    return oamp_engine(
        y_T, partition, N0, alphabet, transform.forward, transform.inverse, n_t, rho,
        transform_macs=_fft_macs(transform.N), **kw,
    )


def d_oamp_detect(
    y_D: np.ndarray,
    H_D: np.ndarray,
    N0: float,
    alphabet: Constellation,
    C: int = 1,
    n_t: int = 15,
    rho: float = RHO_DEFAULT,
    energy_threshold: float = 1e-6,
    partition: GroupPartition | None = None,
    **kw,
) -> DetectionResult:
    """Same iteration with both modules in the DAF domain."""
    if partition is None:
        partition = partition_groups(H_D, C, energy_threshold)
    return oamp_engine(y_D, partition, N0, alphabet, n_t=n_t, rho=rho, **kw)


# ---------------------------------------------------------------- dense references

def _dense_oamp(y, H, Umat, N0, alphabet, n_t, rho):
    N = H.shape[1]
    Q = alphabet.size
    mu_a = np.zeros(N, dtype=complex)
    eta_a = np.ones(N)
    P = np.full((N, Q), 1.0 / Q)
    theta_prev = 0.0
    for _ in range(n_t):
        S = np.diag(eta_a)
        W = S @ H.conj().T @ np.linalg.inv(H @ S @ H.conj().T + N0 * np.eye(H.shape[0]))
        mu_p = mu_a + W @ (y - H @ mu_a)
        eta_p = _clamp(np.real(np.diag(S - W @ H @ S)))
        mu_e, eta_e, _ = extrinsic(mu_p, eta_p, mu_a, eta_a)
        mu_Dp, var_Dp, post = daf_denoise(Umat @ mu_e, float(np.mean(eta_e)), alphabet)
        eta_Dp = float(np.mean(var_Dp))
        mu_Tp = Umat.conj().T @ mu_Dp
        prec = 1.0 / eta_Dp - 1.0 / eta_e
        bad = prec <= 1.0 / V_MAX
        eta_a = _clamp(np.where(bad, V_MAX, 1.0 / np.where(bad, 1.0, prec)))
        mu_a = np.where(bad, mu_Tp, eta_a * (mu_Tp / eta_Dp - mu_e / eta_e))
        theta = float(np.mean(post.max(axis=1) >= 1 - rho))
        if theta >= theta_prev:
            P = post
        theta_prev = theta
        if theta == 1.0:
            break
    return np.argmax(P, axis=1)


def cd_oamp_reference(y_T, H_T, transform: DAFTransform, N0, alphabet, n_t=15, rho=RHO_DEFAULT):
    """Undistributed cross-domain OAMP with the full LMMSE filter formed explicitly."""
    return _dense_oamp(y_T, H_T, transform.matrix(), N0, alphabet, n_t, rho)


def oamp_reference(y_D, H_D, N0, alphabet, n_t=15, rho=RHO_DEFAULT):
    """Plain OAMP in the DAF domain with the full LMMSE filter."""
    return _dense_oamp(y_D, H_D, np.eye(H_D.shape[1]), N0, alphabet, n_t, rho)
