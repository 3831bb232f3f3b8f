"""PPM order optimization and photon-information-efficiency limits.

Photon information efficiency (PIE) is information per detected signal
photon, ``I / n_a`` in bits/photon, at average detected power ``n_a`` per bin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._search import golden_section_max, integer_golden_max
from ._special import binary_kl_nats
from .infotheory import DEFAULT_TOL, LOG2E, _mi_nats

MODES = ("simple", "complete")
GRID_FACTOR = 10.0
TIE_TOL = 1e-12
ASYMPTOTE_BRACKET = (1e-6, 1e3)
ASYMPTOTE_SCAN = 200
M_ABS_MAX = 10**13


@dataclass(frozen=True)
class OptimResult:
    M_star: int
    pie_star: float
    n_s_star: float
    info_bits_per_bin: float
    n_a: float
    n_b: float
    mode: str


@dataclass(frozen=True)
class AsymptoticLimit:
    pie_inf: float
    n_s_inf: float
    n_b: float


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def info_bits(M, n_a, n_b, mode="complete", tol=DEFAULT_TOL):
    """Information per bin for order ``M`` under the average-power constraint."""
    _check_mode(mode)
    K = 1 if mode == "simple" else M
    return _mi_nats(M, K, M * n_a, n_b, tol)[0] * LOG2E


def pie(M, n_a, n_b, mode="complete", tol=DEFAULT_TOL):
    """Photon information efficiency ``I / n_a`` of order ``M`` in bits/photon."""
    return info_bits(M, n_a, n_b, mode, tol) / n_a


def pie_ratio_objective(n_s, n_b):
    """``D(p_c || p_b) / n_s`` in bits/photon: the zero-power-limit PIE at pulse energy ``n_s``."""
    p_b = -math.expm1(-n_b)
    q_b = math.exp(-n_b)
    delta = q_b * -math.expm1(-n_s)
    return binary_kl_nats(p_b, q_b, delta) / n_s * LOG2E


def asymptotic_pie(n_b, tol=1e-10):
    """Zero-power limit of the optimized PIE and the pulse energy achieving it.

    The ratio ``D(p_c||p_b)/n_s`` is scanned on 200 log-spaced pulse energies
    in ``[1e-6, 1e3]`` and the best bracket refined by golden section on
    ``log n_s`` to relative tolerance ``tol``.
    """
    if not n_b > 0:
        raise ValueError("the asymptotic PIE is unbounded for n_b = 0")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    return _asymptotic_pie(float(n_b), float(tol))


@lru_cache(maxsize=256)
def _asymptotic_pie(n_b, tol):
    lo, hi = ASYMPTOTE_BRACKET
    xs = np.linspace(math.log(lo), math.log(hi), ASYMPTOTE_SCAN)
    vals = [pie_ratio_objective(math.exp(x), n_b) for x in xs]
    i = int(np.argmax(vals))
    if i == 0 or i == len(xs) - 1:
        raise ArithmeticError(
            f"maximum of D(p_c||p_b)/n_s at the edge of [{lo:g}, {hi:g}] for n_b={n_b:g}"
        )
    x, v = golden_section_max(lambda t: pie_ratio_objective(math.exp(t), n_b),
                              xs[i - 1], xs[i + 1], xtol=tol)
    return AsymptoticLimit(pie_inf=v, n_s_inf=math.exp(x), n_b=n_b)


def simple_decoding_asymptotics(n_a, n_b):
    """Small-power approximations ``(PIE, n_s)`` for simple decoding.

    ``PIE ~ log2(e) n_a / (2 e n_b (1 - exp(-n_b)))`` at ``M ~ 1 + 1/n_b``,
    hence ``n_s ~ (1 + 1/n_b) n_a``.
    """
    if not n_a > 0:
        raise ValueError("n_a must be > 0")
    if not n_b > 0:
        raise ValueError("n_b must be > 0")
    pie_1 = LOG2E * n_a / (2.0 * math.e * n_b * -math.expm1(-n_b))
    return pie_1, (1.0 + 1.0 / n_b) * n_a


def search_limit(n_a, n_b, tol=1e-10):
    """Largest PPM order the staged search considers.

    ``10 * max(n_s_inf, 1 + 1/n_b) / n_a``; without noise the reference pulse
    energy is taken as 1, which covers the erasure-channel optimum.
    """
    if n_b > 0:
        ref = max(asymptotic_pie(n_b, tol).n_s_inf, 1.0 + 1.0 / n_b)
    else:
        ref = 1.0
    return int(min(max(math.ceil(GRID_FACTOR * ref / n_a), 16), M_ABS_MAX))


def _best(values):
    # smallest M among those within TIE_TOL of the maximum
    top = max(values.values())
    return min(m for m, v in values.items() if v >= top - TIE_TOL)


def optimize_ppm_order(n_a, n_b, mode="complete", tol=DEFAULT_TOL, exhaustive=False,
                       m_max=None, points_per_decade=24, refine_top=3):
    """Integer PPM order maximizing the photon information efficiency.

    The search evaluates a geometric grid of orders from 2 to `search_limit`
    (or ``m_max``), then refines by integer golden section between the grid
    neighbours of the ``refine_top`` best grid points.  With ``exhaustive``
    every order up to the limit is evaluated instead.

    Ties within 1e-12 bits/photon go to the smaller order.
    """
    _check_mode(mode)
    if not n_a > 0:
        raise ValueError(f"n_a must be > 0, got {n_a}")
    if not n_b >= 0:
        raise ValueError(f"n_b must be >= 0, got {n_b}")
    if m_max is None:
        m_max = search_limit(n_a, n_b)
    if m_max < 2:
        raise ValueError(f"no feasible PPM order in [2, {m_max}]")

    def objective(M):
        v = pie(M, n_a, n_b, mode, tol)
        if not math.isfinite(v):
            raise FloatingPointError(f"non-finite PIE at M={M}, n_a={n_a}, n_b={n_b}")
        return v

    if exhaustive:
        values = {M: objective(M) for M in range(2, m_max + 1)}
    else:
        decades = max(math.log10(m_max / 2.0), 1e-9)
        n_pts = max(int(math.ceil(decades * points_per_decade)) + 1, 2)
        grid = np.unique(np.round(np.geomspace(2, m_max, n_pts)).astype(np.int64))
        grid = [int(m) for m in grid]
        values = {M: objective(M) for M in grid}
        order = sorted(range(len(grid)), key=lambda i: (-values[grid[i]], grid[i]))
        for i in order[:refine_top]:
            lo = grid[max(i - 1, 0)]
            hi = grid[min(i + 1, len(grid) - 1)]
            values.update(integer_golden_max(objective, lo, hi))

    M_star = _best(values)
    pie_star = values[M_star]
    return OptimResult(
        M_star=M_star,
        pie_star=pie_star,
        n_s_star=M_star * n_a,
        info_bits_per_bin=pie_star * n_a,
        n_a=n_a,
        n_b=n_b,
        mode=mode,
    )
