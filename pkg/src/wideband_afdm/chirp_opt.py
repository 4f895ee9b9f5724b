"""Chirp parameter c1 that keeps the per-path DAF supports disjoint, and the admissible N window."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import ChannelSpread


class InfeasibleDesignError(ValueError):
    pass


@dataclass(frozen=True)
class DesignReport:
    c1_opt: float | None
    c1_narrowband: float | None
    N_window: tuple[float, float]
    quad_coeffs: tuple[float, float, float]
    discriminant: float
    feasible: bool
    N_min: int | None = None
    N_max: int | None = None

    def as_rows(self) -> list[tuple[str, object]]:
        a, b, c = self.quad_coeffs
        return [
            ("a_N", a), ("b_N", b), ("c_N", c),
            ("discriminant", self.discriminant),
            ("x_L", self.N_window[0]), ("x_H_capped", self.N_window[1]),
            ("N_min", self.N_min), ("N_max", self.N_max),
            ("feasible", self.feasible),
            ("c1_opt", self.c1_opt), ("c1_narrowband", self.c1_narrowband),
        ]


def narrowband_c1(spread: ChannelSpread, N: int, N_v: int = 2) -> float:
    return (2 * spread.k_max + 2 * N_v + 1) / (2 * N)


def optimize_c1(
    spread: ChannelSpread,
    N: int,
    N_v: int = 2,
    dense_delays: bool = True,
    min_delay_gap: int = 1,
    exact: bool = False,
) -> float:
    """Smallest c1 that separates the supports of adjacent delay taps.

    The default is the simplified rule (unit delay gap, alpha_max^2 dropped).
    ``exact=True`` or ``dense_delays=False`` keeps the alpha_max^2 terms and
    uses ``min_delay_gap`` as the closest spacing between path delays.
    """
    a, k = spread.alpha_max, spread.k_max
    if dense_delays and not exact:
        den = 2 * N * (1 - 4 * a * (N - 1))
        num = 2 * k + 2 * a * (N - 1) + 2 * N_v + 1
    else:
        gap = 1 if dense_delays else min_delay_gap
        if gap < 1:
            raise ValueError("min_delay_gap must be >= 1")
        num = 2 * k + 2 * a * (N - 1) + 2 * (1 - a * a) * N_v + 1
        den = 2 * N * ((1 - a * a) * gap - 2 * a * (2 - a * a) * (N - 1))
    if den <= 0:
        raise InfeasibleDesignError(f"N={N} too large for alpha_max={a}: c1 denominator {den:.3g} <= 0")
    return num / den


def c1_upper_bound(spread: ChannelSpread, N: int, N_v: int = 2) -> float:
    """Largest c1 before the outermost supports wrap around (simplified form)."""
    a, k, L = spread.alpha_max, spread.k_max, spread.ell_max
    return (N - 2 * k - 2 * a * (N - 1) - 2 * N_v) / (2 * N * (L + 4 * a * (N - 1)))


def quad_coeffs(spread: ChannelSpread, N_v: int = 2) -> tuple[float, float, float]:
    a, k, L = spread.alpha_max, spread.k_max, spread.ell_max
    return 4 * a, 2 * a * L - 1, (2 * k + 2 * N_v) * (L + 1) + L - (2 * L + 6) * a


def admissible_N(spread: ChannelSpread, N_v: int = 2, N: int | None = None) -> DesignReport:
    """Open window (x_L, min(x_H, 1/(4 alpha_max) + 1)) of symbol counts N.

    With ``N`` given, the report also carries both c1 rules at that N
    (``c1_opt`` is None when N lies outside the scaling cap).
    """
    a_N, b_N, c_N = quad_coeffs(spread, N_v)
    if a_N == 0:
        disc = b_N * b_N
        x_L, x_H = -c_N / b_N, math.inf
    else:
        disc = b_N * b_N - 4 * a_N * c_N
        if disc > 0:
            r = math.sqrt(disc)
            x_L, x_H = (-b_N - r) / (2 * a_N), (-b_N + r) / (2 * a_N)
        else:
            x_L = x_H = math.nan
    cap = math.inf if spread.alpha_max == 0 else 1 / (4 * spread.alpha_max) + 1
    hi = min(x_H, cap) if disc > 0 else math.nan
    N_min = N_max = None
    feasible = False
    if disc > 0:
        N_min = int(math.floor(x_L)) + 1
        N_max = int(math.ceil(hi)) - 1 if math.isfinite(hi) else None
        feasible = N_max is None or N_min <= N_max
    c1_opt = c1_nb = None
    if N is not None:
        c1_nb = narrowband_c1(spread, N, N_v)
        try:
            c1_opt = optimize_c1(spread, N, N_v)
        except InfeasibleDesignError:
            c1_opt = None
    return DesignReport(
        c1_opt=c1_opt,
        c1_narrowband=c1_nb,
        N_window=(x_L, hi),
        quad_coeffs=(a_N, b_N, c_N),
        discriminant=disc,
        feasible=feasible,
        N_min=N_min,
        N_max=N_max,
    )


def total_span(spread: ChannelSpread, N: int, c1: float, N_v: int = 2) -> float:
    """Worst-case (over rows) distance from the lowest to the highest support edge.

    Uses the extreme paths (ell=0, +alpha_max) and (ell_max, -alpha_max) with
    their tied Doppler shifts. Wrap-around is avoided when this is below N.
    """
    a, k, L = spread.alpha_max, spread.k_max, spread.ell_max
    K_pos = 2 * c1 * (a * a + 2 * a)

    def q_low(p):
        return (p - k - K_pos * N * (N - 1)) / (1 + a)

    def q_high(p):
        if a >= 1:
            raise InfeasibleDesignError("alpha_max must be < 1")
        K_neg = 2 * c1 * (a * a - 2 * a)
        return 2 * N * c1 * L + (p + k - K_neg * N * (N - 1)) / (1 - a)

    return max(q_high(p) - q_low(p) for p in (0, N - 1)) + 2 * N_v
