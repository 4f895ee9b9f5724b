"""Wideband doubly-dispersive channel with per-path Doppler time scaling.

Each path is described on the sample grid by an integer delay ``ell``, a
Doppler scale ``alpha`` and the normalised Doppler ``k = alpha f_c / delta_f``.
A received sample ``n`` of path i observes the transmitted waveform at the
scaled time ``s = (1 + alpha) n - ell`` (in units of delta_t), so whenever
``alpha != 0`` the time-domain channel is not a permuted diagonal but has to
be evaluated through the sub-carrier expansion of the AFDM waveform.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .daf_core import ChirpParams, DAFTransform, DimensionError, SystemConfig, daf_matrix


class ChannelConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSpread:
    """Maximum delay / Doppler scale of a scenario plus their grid equivalents."""

    tau_max: float
    alpha_max: float
    ell_max: int
    k_max: float

    def __post_init__(self):
        if not 0 <= self.alpha_max < 1:
            raise ChannelConfigError(f"alpha_max must lie in [0, 1), got {self.alpha_max}")
        if self.ell_max < 0 or self.k_max < 0 or self.tau_max < 0:
            raise ChannelConfigError("spread quantities must be nonnegative")

    @classmethod
    def for_system(cls, config: SystemConfig, tau_max: float, alpha_max: float) -> "ChannelSpread":
        ell_max = int(np.floor(tau_max / config.delta_t + 1e-9))
        k_max = alpha_max * config.f_c / config.delta_f
        return cls(tau_max=tau_max, alpha_max=alpha_max, ell_max=ell_max, k_max=k_max)


@dataclass(frozen=True)
class ChannelPath:
    h: complex
    ell: int
    alpha: float
    k: float

    @classmethod
    def from_physical(cls, h: complex, tau: float, alpha: float, config: SystemConfig) -> "ChannelPath":
        ell = int(round(tau / config.delta_t))
        if not np.isclose(ell * config.delta_t, tau, rtol=1e-9, atol=1e-15):
            raise ChannelConfigError(f"delay {tau} is not on the sample grid (delta_t={config.delta_t})")
        return cls(h=complex(h), ell=ell, alpha=float(alpha), k=float(alpha * config.f_c / config.delta_f))

    def tau(self, config: SystemConfig) -> float:
        return self.ell * config.delta_t

    def nu(self, config: SystemConfig) -> float:
        return self.alpha * config.f_c

    def with_gain(self, h: complex) -> "ChannelPath":
        return ChannelPath(complex(h), self.ell, self.alpha, self.k)

    def within(self, spread: ChannelSpread) -> bool:
        return (
            abs(self.alpha) <= spread.alpha_max * (1 + 1e-12)
            and 0 <= self.ell <= spread.ell_max
            and abs(self.k) <= spread.k_max * (1 + 1e-12) + 1e-15
        )


@dataclass(frozen=True)
class WidebandChannel:
    paths: tuple[ChannelPath, ...]
    L_cpp: int = 0
    L_cps: int = 0

    @property
    def P(self) -> int:
        return len(self.paths)

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.h for p in self.paths], dtype=complex)

    def with_gains(self, h: np.ndarray) -> "WidebandChannel":
        paths = tuple(p.with_gain(g) for p, g in zip(self.paths, h))
        return WidebandChannel(paths, self.L_cpp, self.L_cps)


def guard_lengths(config: SystemConfig, spread: ChannelSpread) -> tuple[int, int]:
    """Smallest prefix/suffix lengths strictly exceeding the delay and time-scaling spans."""
    a = spread.alpha_max
    L_cpp = int(np.floor(spread.tau_max / ((1 - a) * config.delta_t))) + 1
    L_cps = int(np.floor(a * config.T / ((1 + a) * config.delta_t))) + 1
    return L_cpp, L_cps


def add_cpp_cps(x_time: np.ndarray, chirp: ChirpParams, L_cpp: int, L_cps: int) -> np.ndarray:
    """Prepend the chirp-periodic prefix and append the chirp-periodic suffix.

    Both guards are the analytic continuation of the IDAF samples, i.e.
    ``x[n] = x[n+N] exp(-j2pi c1 (N^2 + 2Nn))`` before the frame and
    ``x[n] = x[n-N] exp(j2pi c1 (2Nn - N^2))`` after it.
    """
    x = np.asarray(x_time, dtype=complex)
    N = len(x)
    if L_cpp > N or L_cps > N:
        raise ChannelConfigError("guard longer than one symbol is not supported")
    c1 = chirp.c1
    n_pre = np.arange(-L_cpp, 0)
    pre = x[n_pre + N] * np.exp(-2j * np.pi * np.mod(c1 * (N * N + 2.0 * N * n_pre), 1.0))
    n_suf = np.arange(N, N + L_cps)
    suf = x[n_suf - N] * np.exp(2j * np.pi * np.mod(c1 * (2.0 * N * n_suf - N * N), 1.0))
    return np.concatenate([pre, x, suf])


def remove_cpp_cps(framed: np.ndarray, L_cpp: int, L_cps: int) -> np.ndarray:
    framed = np.asarray(framed)
    return framed[L_cpp: len(framed) - L_cps]


@dataclass(frozen=True)
class PhaseWrapSchedule:
    """Times at which the instantaneous frequency of sub-carrier m wraps out of band."""

    m: int
    breakpoints: np.ndarray
    T: float

    def psi(self, t: float) -> int:
        """Number of breakpoints <= t (left-closed intervals); t is taken mod T."""
        tt = float(np.mod(t, self.T))
        return bisect_right(self.breakpoints.tolist(), tt)

    def psi_many(self, t: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.breakpoints, np.mod(t, self.T), side="right")


def phase_wrap_schedule(m: int, config: SystemConfig, chirp: ChirpParams) -> PhaseWrapSchedule:
    N, c1, T = config.N, chirp.c1, config.T
    bps = []
    if c1 > 0:
        cap = int(np.ceil(2 * N * c1)) + 1
        for rho in range(1, cap + 1):
            t = ((N - m) / (2 * N * c1) + (rho - 1) / (2 * c1)) * T / N
            if t >= T:
                break
            bps.append(t)
    return PhaseWrapSchedule(m=m, breakpoints=np.array(bps, dtype=float), T=T)


def psi_index(m: np.ndarray, s: np.ndarray, N: int, c1: float) -> np.ndarray:
    """Closed form of the wrap count at scaled sample time s (sample units, taken mod N)."""
    return np.floor(2.0 * c1 * np.mod(s, N) + np.asarray(m) / N)


def time_domain_path_matrix(path: ChannelPath, config: SystemConfig, chirp: ChirpParams) -> np.ndarray:
    """Unit-gain N x N time-domain matrix of a single path.

    Row p collects the waveform at s_p = (1 + alpha) p - ell expanded over
    the N sub-carriers; the sum over sub-carriers is one FFT per row.
    """
    N, c1 = config.N, chirp.c1
    p = np.arange(N)
    m = np.arange(N)
    a, ell = path.alpha, path.ell
    s = (1.0 + a) * p - ell
    psi = psi_index(m[None, :], s[:, None], N, c1)
    # psi * s = psi * (p - ell) + psi * alpha * p and the first term is an integer
    ph = np.mod(np.outer(p - ell, m), N) / N + np.outer(a * p, m) / N - psi * (a * p)[:, None]
    G = np.exp(2j * np.pi * ph)
    F = np.fft.fft(G, axis=1) / N
    pre = np.mod(c1 * s * s + path.k * p / N, 1.0)[:, None] - np.mod(c1 * (p * p).astype(float), 1.0)[None, :]
    return np.exp(2j * np.pi * pre) * F


def time_domain_channel_matrix(channel: WidebandChannel, config: SystemConfig, chirp: ChirpParams) -> np.ndarray:
    H = np.zeros((config.N, config.N), dtype=complex)
    for path in channel.paths:
        H += path.h * time_domain_path_matrix(path, config, chirp)
    return H


def afdm_waveform(x_daf: np.ndarray, t: np.ndarray, config: SystemConfig, chirp: ChirpParams) -> np.ndarray:
    """Continuous AFDM waveform at times t in [-T, 2T) including the CPP/CPS continuation.

    Inside [0, T) this is the sub-carrier synthesis with per-sub-carrier wrap
    counts read from :func:`phase_wrap_schedule`; outside, the chirp-periodic
    relation maps the time back into the symbol. Cost O(len(t) * N).
    """
    N, c1, c2 = config.N, chirp.c1, chirp.c2
    x_daf = np.asarray(x_daf, dtype=complex)
    if len(x_daf) != N:
        raise DimensionError(f"expected {N} DAF symbols, got {len(x_daf)}")
    s = np.atleast_1d(np.asarray(t, dtype=float)) / config.delta_t
    if np.any(s < -N) or np.any(s >= 2 * N):
        raise ValueError("waveform only defined on [-T, 2T)")
    s_core = np.where(s < 0, s + N, np.where(s >= N, s - N, s))
    ext = np.ones_like(s, dtype=complex)
    pre = s < 0
    post = s >= N
    ext[pre] = np.exp(-2j * np.pi * c1 * (N * N + 2.0 * N * s[pre]))
    ext[post] = np.exp(2j * np.pi * c1 * (2.0 * N * s[post] - N * N))
    m = np.arange(N)
    schedules = [phase_wrap_schedule(int(mm), config, chirp) for mm in m]
    psi = np.stack([sch.psi_many(s_core * config.delta_t) for sch in schedules], axis=1)
    ph = c1 * s_core[:, None] ** 2 + np.outer(s_core, m) / N + c2 * (m * m)[None, :] - psi * s_core[:, None]
    core = np.exp(2j * np.pi * ph) @ x_daf / np.sqrt(N)
    return core * ext


def _noise(n: int, N0: float, rng: np.random.Generator) -> np.ndarray:
    return np.sqrt(N0 / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def apply_channel(
    x_time: np.ndarray,
    channel: WidebandChannel,
    config: SystemConfig,
    chirp: ChirpParams,
    N0: float = 0.0,
    rng_seed=None,
    method: str = "matrix",
    H_T: np.ndarray | None = None,
) -> np.ndarray:
    """Received samples over the observation window [0, T).

    ``x_time`` may be the bare symbol (length N) or the framed vector
    (length L_cpp + N + L_cps); the guards carry no extra information and are
    stripped. ``H_T`` reuses a precomputed time-domain matrix.
    ``method="waveform"`` samples the continuous waveform directly
    instead of going through the per-path matrices.
    """
    N = config.N
    x = np.asarray(x_time, dtype=complex)
    if len(x) == channel.L_cpp + N + channel.L_cps and len(x) != N:
        x = remove_cpp_cps(x, channel.L_cpp, channel.L_cps)
    if len(x) != N:
        raise DimensionError(f"expected {N} (or framed) samples, got {len(x)}")
    if method == "matrix":
        if H_T is None:
            H_T = time_domain_channel_matrix(channel, config, chirp)
        y = H_T @ x
    elif method == "waveform":
        x_daf = daf_matrix(config, chirp).forward(x)
        n = np.arange(N)
        y = np.zeros(N, dtype=complex)
        for path in channel.paths:
            s = (1.0 + path.alpha) * n - path.ell
            y += path.h * np.exp(2j * np.pi * path.k * n / N) * afdm_waveform(x_daf, s * config.delta_t, config, chirp)
    else:
        raise ValueError(f"unknown method {method!r}")
    if N0 > 0:
        y = y + _noise(N, N0, np.random.default_rng(rng_seed))
    return y


def sample_channel(
    spread: ChannelSpread,
    P: int,
    rng_seed,
    config: SystemConfig,
    gain_profile: str = "uniform",
    distinct_delays: bool = True,
) -> WidebandChannel:
    """Draw P paths: CN(0, 1/P) gains, integer delays, alpha = alpha_max cos(theta).

    ``gain_profile="exponential"`` scales path powers by exp(-ell / ell_max)
    (normalised to unit total average power) instead of the uniform profile.
    """
    if P < 1:
        raise ChannelConfigError("P must be >= 1")
    rng = np.random.default_rng(rng_seed)
    n_delays = spread.ell_max + 1
    if distinct_delays:
        if P > n_delays:
            raise ChannelConfigError(f"cannot place {P} distinct delays on {n_delays} taps")
        ells = np.sort(rng.choice(n_delays, size=P, replace=False))
    else:
        ells = np.sort(rng.integers(0, n_delays, size=P))
    theta = rng.uniform(-np.pi, np.pi, size=P)
    alphas = spread.alpha_max * np.cos(theta)
    g = (rng.standard_normal(P) + 1j * rng.standard_normal(P)) / np.sqrt(2)
    if gain_profile == "uniform":
        power = np.full(P, 1.0 / P)
    elif gain_profile == "exponential":
        w = np.exp(-ells / max(spread.ell_max, 1))
        power = w / w.sum()
    else:
        raise ChannelConfigError(f"unknown gain profile {gain_profile!r}")
    h = g * np.sqrt(power)
    paths = tuple(
        ChannelPath(h=complex(hi), ell=int(li), alpha=float(ai), k=float(ai * config.f_c / config.delta_f))
        for hi, li, ai in zip(h, ells, alphas)
    )
    L_cpp, L_cps = guard_lengths(config, spread)
    return WidebandChannel(paths=paths, L_cpp=L_cpp, L_cps=L_cps)


def transmit(x_daf: np.ndarray, transform: DAFTransform, channel: WidebandChannel, chirp: ChirpParams) -> np.ndarray:
    """IDAF followed by CPP/CPS framing."""
    return add_cpp_cps(transform.inverse(x_daf), chirp, channel.L_cpp, channel.L_cps)
