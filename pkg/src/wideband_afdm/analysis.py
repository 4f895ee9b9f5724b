"""Pairwise error bounds, the BER union bound and state evolution of the OAMP detectors."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb, erfc

from .daf_core import Constellation
from .detectors import EPS_VAR, V_MAX, GroupPartition, daf_denoise, lmmse_group

RANK_EPS = 1e-10
EXACT_BITS_CAP = 10
FD_SAMPLES = 100_000


class ZeroDifferenceError(ValueError):
    pass


def q_func(x):
    return 0.5 * erfc(np.asarray(x) / np.sqrt(2.0))


def omega_eigs(d: np.ndarray, path_matrices: np.ndarray) -> np.ndarray:
    """Eigenvalues of Omega = Phi(d)^H Phi(d), Phi(d) = [H_1 d, ..., H_P d], descending."""
    Phi = np.einsum("pij,j->ip", path_matrices, d)
    lam = np.linalg.eigvalsh(Phi.conj().T @ Phi)
    return lam[::-1]


@dataclass(frozen=True)
class PepReport:
    x: np.ndarray
    x_hat: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    bound: float

    @staticmethod
    def rank_of(lam: np.ndarray, eps: float = RANK_EPS) -> int:
        return int(np.sum(lam > eps * lam.max())) if lam.max() > 0 else 0


def _bound_from_eigs(lam: np.ndarray, P: int, N0, eps: float = RANK_EPS) -> np.ndarray:
    R = PepReport.rank_of(lam, eps)
    N0 = np.atleast_1d(np.asarray(N0, dtype=float))
    return np.exp(np.sum(np.log(4 * N0[:, None] * P / lam[None, :R]), axis=1))


def pep_pair_report(x, x_hat, path_matrices: np.ndarray, N0: float) -> PepReport:
    d = np.asarray(x, dtype=complex) - np.asarray(x_hat, dtype=complex)
    if not np.any(d):
        raise ZeroDifferenceError("x and x_hat coincide")
    lam = omega_eigs(d, path_matrices)
    P = path_matrices.shape[0]
    return PepReport(np.asarray(x), np.asarray(x_hat), lam, PepReport.rank_of(lam), float(_bound_from_eigs(lam, P, N0)[0]))


def pep_pair_bound(x, x_hat, path_matrices: np.ndarray, N0: float) -> float:
    """Chernoff PEP averaged over h ~ CN(0, I/P): prod_{i<=R} 4 N0 P / lambda_i."""
    return pep_pair_report(x, x_hat, path_matrices, N0).bound


def pep_monte_carlo(x, x_hat, path_matrices: np.ndarray, N0: float, n_draws: int = 1_000_000, seed=0,
                    chunk: int = 200_000) -> float:
    """E_h Q(sqrt(||Phi(d) h||^2 / (2 N0))) by sampling; |h_tilde_i|^2 ~ Exp(mean 1/P)."""
    d = np.asarray(x, dtype=complex) - np.asarray(x_hat, dtype=complex)
    lam = np.clip(omega_eigs(d, path_matrices), 0, None)
    P = path_matrices.shape[0]
    rng = np.random.default_rng(seed)
    acc = 0.0
    done = 0
    while done < n_draws:
        m = min(chunk, n_draws - done)
        g = rng.exponential(1.0 / P, size=(m, P))
        acc += float(q_func(np.sqrt(g @ lam / (2 * N0))).sum())
        done += m
    return acc / n_draws


@dataclass
class UnionBound:
    N0: np.ndarray
    bound: np.ndarray
    ci_halfwidth: np.ndarray
    mode: str
    n_pairs: int


def ber_union_bound(
    path_matrices: np.ndarray,
    alphabet: Constellation,
    N0s,
    mode: str = "auto",
    n_pairs: int = 100_000,
    seed=0,
) -> UnionBound:
    """Union bound over ordered pairs, each PEP weighted by its bit differences.

    ``exact`` enumerates all pairs (refused beyond EXACT_BITS_CAP bits per
    frame); ``sampled`` stratifies pairs by the number of differing symbols
    w, draws ``n_pairs`` pairs split evenly across strata and weights each
    stratum by its exact pair count; ``uniform`` draws pairs uniformly.
    """
    N = path_matrices.shape[2]
    P = path_matrices.shape[0]
    Q = alphabet.size
    bits = N * alphabet.bits_per_symbol
    N0s = np.atleast_1d(np.asarray(N0s, dtype=float))
    norm = 1.0 / (N * alphabet.bits_per_symbol)
    if mode == "auto":
        mode = "exact" if bits <= EXACT_BITS_CAP else "sampled"
    pts = alphabet.points
    rng = np.random.default_rng(seed)

    def pair_terms(xi: np.ndarray, xh: np.ndarray) -> np.ndarray:
        out = np.zeros((len(xi), len(N0s)))
        e = np.sum(alphabet.labels[xi] != alphabet.labels[xh], axis=(1, 2))
        for r in range(len(xi)):
            lam = omega_eigs(pts[xi[r]] - pts[xh[r]], path_matrices)
            out[r] = _bound_from_eigs(lam, P, N0s) * e[r]
        return out

    if mode == "exact":
        if bits > EXACT_BITS_CAP:
            raise ValueError(f"exact union bound refused for {bits} bits per frame; use mode='sampled'")
        # Omega depends on x - x_hat only: enumerate difference vectors with
        # their pair multiplicity and summed bit weight
        table: dict[complex, list] = {}
        for a in range(Q):
            for b in range(Q):
                key = complex(np.round(pts[a] - pts[b], 12))
                ent = table.setdefault(key, [0, 0])
                ent[0] += 1
                ent[1] += int(np.sum(alphabet.labels[a] != alphabet.labels[b]))
        deltas = list(table)
        total = np.zeros(len(N0s))
        n_pairs_total = 0
        for combo in itertools.product(range(len(deltas)), repeat=N):
            d = np.array([deltas[i] for i in combo])
            if not np.any(d):
                continue
            counts = np.array([table[deltas[i]][0] for i in combo], dtype=float)
            bitsums = np.array([table[deltas[i]][1] for i in combo], dtype=float)
            mult = np.prod(counts)
            weight = mult * np.sum(bitsums / counts)
            total += weight * _bound_from_eigs(omega_eigs(d, path_matrices), P, N0s)
            n_pairs_total += int(mult)
        bound = total * norm / Q**N
        return UnionBound(N0s, bound, np.zeros_like(bound), "exact", n_pairs_total)

    if mode == "uniform":
        xi = rng.integers(0, Q, size=(n_pairs, N))
        xh = rng.integers(0, Q, size=(n_pairs, N))
        keep = np.any(xi != xh, axis=1)
        terms = np.zeros((n_pairs, len(N0s)))
        terms[keep] = pair_terms(xi[keep], xh[keep])
        scale = float(Q**N) * norm
        mean = terms.mean(axis=0) * scale
        se = terms.std(axis=0, ddof=1) / np.sqrt(n_pairs) * scale
        return UnionBound(N0s, mean, 1.96 * se, "uniform", n_pairs)

    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    per = max(2, n_pairs // N)
    total = np.zeros(len(N0s))
    var = np.zeros(len(N0s))
    for w in range(1, N + 1):
        xi = rng.integers(0, Q, size=(per, N))
        xh = xi.copy()
        for r in range(per):
            pos = rng.choice(N, size=w, replace=False)
            xh[r, pos] = (xi[r, pos] + rng.integers(1, Q, size=w)) % Q
        terms = pair_terms(xi, xh)
        # ordered pairs per x in stratum w: C(N, w) (Q-1)^w
        count = comb(N, w, exact=True) * (Q - 1) ** w
        total += count * terms.mean(axis=0)
        var += count**2 * terms.var(axis=0, ddof=1) / per
    return UnionBound(N0s, total * norm, 1.96 * np.sqrt(var) * norm, "sampled", per * N)


# ---------------------------------------------------------------- state evolution

def denoiser_variance_mc(eta: float, alphabet: Constellation, n_samples: int = FD_SAMPLES, seed=0) -> float:
    """Monte Carlo E|x - E[x | x + sqrt(eta) z]|^2 with x uniform on the alphabet."""
    rng = np.random.default_rng(seed)
    x = alphabet.points[rng.integers(0, alphabet.size, n_samples)]
    z = (rng.standard_normal(n_samples) + 1j * rng.standard_normal(n_samples)) / np.sqrt(2)
    mean, _, _ = daf_denoise(x + np.sqrt(eta) * z, eta, alphabet)
    return float(np.mean(np.abs(x - mean) ** 2))


@dataclass
class SeTrace:
    eta_D_a: list = field(default_factory=list)
    eta_D_p: list = field(default_factory=list)
    eta_a_groups: list = field(default_factory=list)
    empirical: list | None = None


def _prec_sub(eta_big, eta_small_or_scalar):
    prec = 1.0 / eta_big - 1.0 / eta_small_or_scalar
    bad = prec <= 1.0 / V_MAX
    return np.clip(np.where(bad, V_MAX, 1.0 / np.where(bad, 1.0, prec)), EPS_VAR, V_MAX)


def state_evolution(
    partition: GroupPartition,
    N0: float,
    alphabet: Constellation,
    n_t: int = 15,
    n_samples: int = FD_SAMPLES,
    seed=0,
    keep_groups: bool = False,
) -> SeTrace:
    """Variance recursion of the distributed detector with the denoiser replaced by its MC average."""
    off = partition.offsets
    N = partition.N
    eta_a = np.ones(len(partition.flat_cols))
    tr = SeTrace()
    for _ in range(n_t):
        eta_p = np.empty_like(eta_a)
        for c in range(partition.C):
            sl = slice(off[c], off[c + 1])
            _, eta_p[sl] = lmmse_group(partition.H_tilde[c], None, None, eta_a[sl], N0)
        eta_p = np.clip(eta_p, EPS_VAR, V_MAX)
        eta_e = _prec_sub(eta_p, eta_a)
        prec = np.bincount(partition.flat_cols, weights=1.0 / eta_e, minlength=N)
        eta_T = np.where(prec > 0, 1.0 / np.where(prec > 0, prec, 1.0), 1.0)
        eta_Da = float(np.mean(np.clip(eta_T, EPS_VAR, V_MAX)))
        eta_Dp = denoiser_variance_mc(eta_Da, alphabet, n_samples, seed)
        eta_a = _prec_sub(np.full_like(eta_e, max(eta_Dp, EPS_VAR)), eta_e)
        tr.eta_D_a.append(eta_Da)
        tr.eta_D_p.append(eta_Dp)
        if keep_groups:
            tr.eta_a_groups.append(eta_a.copy())
    return tr


def bpsk_fd_quadrature(eta: float) -> float:
    """1 - E[tanh^2(2 r / eta)], r ~ N(1, eta/2), by Gauss-Hermite quadrature."""
    xs, ws = np.polynomial.hermite.hermgauss(200)
    r = 1 + np.sqrt(eta) * xs  # r = 1 + sqrt(2 * eta/2) * t
    return float(1 - np.sum(ws * np.tanh(2 * r / eta) ** 2) / math.sqrt(math.pi))
