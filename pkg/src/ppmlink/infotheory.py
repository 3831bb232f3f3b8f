"""Mutual information of the photon-counted PPM channel and its bounds.

Internally everything is in nats; public functions return bits.

The truncated-decoding information is evaluated in the form

    I = (1/M) sum_k Bin(k; M, p_b) * gamma_k * [w g(a_k) + (1 - w) g(-u_k)],

with ``w = k/M`` and ``g(x) = (1+x) log(1+x) - x``.  This is an exact
rearrangement of the entropy-difference sum over click counts: the common
pure-noise factor of every ``k``-click pattern cancels, and what remains is a
Jensen gap expressed through nonnegative terms only, so nothing cancels even
when the pulse is nearly invisible against the background.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._special import binary_kl_nats, binom_logpmf, xlog1px_minus_x
from .channel import ChannelParams

LOG2E = 1.0 / math.log(2.0)
DEFAULT_TOL = 1e-12
MAX_TERMS = 20_000_000


class TruncationError(ArithmeticError):
    """The requested tolerance needs more terms than allowed.

    ``partial`` holds the `InfoResult` accumulated before giving up.
    """

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class InfoResult:
    """Mutual information per time bin.

    Attributes
    ----------
    bits_per_bin : float
    K_effective : int
        Largest click count that entered the sum (0 if none did).
    tail_bound : float
        Certified upper bound, in bits per bin, on the omitted terms.
    """

    bits_per_bin: float
    K_effective: int
    tail_bound: float


def relative_entropy_binary(p, q):
    """Binary relative entropy ``D(p||q)`` in bits, with ``0 log 0 = 0``.

    Returns ``inf`` (and warns) when ``p`` puts mass where ``q`` has none.
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError(f"probabilities must lie in [0, 1], got p={p}, q={q}")
    if p == q:
        return 0.0
    if q == 0.0 or q == 1.0:
        warnings.warn(f"D({p}||{q}) is infinite", RuntimeWarning, stacklevel=2)
        return math.inf
    return binary_kl_nats(q, 1.0 - q, p - q) * LOG2E


def _bernstein_radius(log_inv_eps, variance):
    # t with exp(-t^2 / (2 (variance + t/3))) == eps
    L = log_inv_eps
    return L / 3.0 + math.sqrt(L * L / 9.0 + 2.0 * L * variance)


def _bernstein_tail(t, variance):
    if t <= 0:
        return 1.0
    return math.exp(-t * t / (2.0 * (variance + t / 3.0)))


def _mi_nats(M, K, n_s, n_b, tol=DEFAULT_TOL, max_terms=MAX_TERMS):
    """Return ``(nats_per_bin, K_effective, tail_bound_bits)``."""
    if n_s == 0.0:
        return 0.0, 0, 0.0
    s = -math.expm1(-n_s)
    if n_b == 0.0:
        # noise-free: M-ary erasure channel
        return s * math.log(M) / M, 1, 0.0

    p_b = -math.expm1(-n_b)
    q_b = math.exp(-n_b)
    q = math.exp(-n_s)

    # noise clicks N ~ Bin(M-1, p_b); the frame shows N or N+1 clicks
    mu = (M - 1) * p_b
    var = mu * q_b
    log2M_over_M = math.log2(M) / M
    eps = tol / (2.0 * log2M_over_M)
    t = _bernstein_radius(max(math.log(1.0 / eps), 0.0), var) if eps < 1 else 0.0
    k_lo = max(1, math.floor(mu - t) + 1)
    k_hi = min(K, math.ceil(mu + t))
    tail_lo = _bernstein_tail(mu - (k_lo - 1), var) if k_lo > 1 else 0.0
    tail_hi = _bernstein_tail(k_hi - mu, var) if k_hi < K else 0.0

    def tail_bits(mass):
        # each outcome contributes at most p(y) log M to the information per frame
        return log2M_over_M * min(mass, 1.0)

    if k_hi < k_lo:
        return 0.0, 0, tail_bits(tail_lo)

    truncated = False
    if k_hi - k_lo + 1 > max_terms:
        truncated = True
        stop = k_lo + max_terms - 1
    else:
        stop = k_hi

    # gamma_k = q + w s/p_b = (q r + w)/r with r = p_b/s, kept in logs so that
    # neither a vanishing background nor a vanishing pulse overflows
    log_r = math.log(p_b) - math.log(s)
    log_qr = -n_s + log_r
    total = 0.0
    chunk = 1 << 20
    for start in range(k_lo, stop + 1, chunk):
        k = np.arange(start, min(stop, start + chunk - 1) + 1, dtype=float)
        w = k / M
        log_den = np.logaddexp(log_qr, np.log(w))
        u = np.exp(np.log(w) - log_den)
        a = (1.0 - w) * np.exp(-log_den)
        gap = w * xlog1px_minus_x(a) + (1.0 - w) * xlog1px_minus_x(-u)
        terms = np.exp(binom_logpmf(k, M, p_b, q_b) - log_r + log_den) * gap
        total += math.fsum(terms)
    value = total / M

    if truncated:
        partial = InfoResult(value * LOG2E, stop, tail_bits(tail_lo + 1.0))
        raise TruncationError(
            f"tolerance {tol:g} needs {k_hi - k_lo + 1} terms (cap {max_terms})",
            partial,
        )
    return value, int(stop), tail_bits(tail_lo + tail_hi)


def mutual_information(params: ChannelParams, tol=DEFAULT_TOL, max_terms=MAX_TERMS):
    """Mutual information per time bin for decoding truncated at ``params.K`` clicks.

    Click counts whose total probability cannot matter at ``tol`` bits are
    skipped; the bound on what was skipped is returned as ``tail_bound``.

    Raises
    ------
    TruncationError
        If more than ``max_terms`` click counts would be needed.
    """
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    nats, k_eff, tail = _mi_nats(params.M, params.K, params.n_s, params.n_b, tol, max_terms)
    return InfoResult(nats * LOG2E, k_eff, tail)


def mi_bits(M, n_s, n_b, K=None, tol=DEFAULT_TOL):
    """Shorthand returning only the information in bits per bin."""
    return mutual_information(ChannelParams(n_s, n_b, M, K), tol).bits_per_bin


def _ook_pieces(M, n_s, n_b):
    # (p_b, 1-p_b, delta = p_c - p_b, mixture qbar, 1 - qbar)
    p_b = -math.expm1(-n_b)
    q_b = math.exp(-n_b)
    delta = q_b * -math.expm1(-n_s)
    qbar = p_b + delta / M
    one_minus_qbar = q_b * (1.0 + math.expm1(-n_s) / M)
    return p_b, q_b, delta, qbar, one_minus_qbar


def mutual_information_ook_bound(M_real, n_s, n_b):
    """Information of on-off keying with pulse probability ``1/M_real``.

    Upper-bounds the completely decoded PPM information; ``M_real`` may be
    any real number above 1.
    """
    if not M_real > 1:
        raise ValueError(f"M_real must exceed 1, got {M_real}")
    if n_s < 0 or n_b < 0:
        raise ValueError("photon numbers must be >= 0")
    if math.isinf(M_real):
        return 0.0
    _, _, delta, qbar, one_minus_qbar = _ook_pieces(M_real, n_s, n_b)
    d_empty = binary_kl_nats(qbar, one_minus_qbar, -delta / M_real)
    d_pulse = binary_kl_nats(qbar, one_minus_qbar, delta * (1.0 - 1.0 / M_real))
    return ((1.0 - 1.0 / M_real) * d_empty + d_pulse / M_real) * LOG2E


def mutual_information_lower_bound(M, n_s, n_b):
    """Jensen lower bound ``D(p_c || (1-1/M) p_b + p_c/M) / M`` in bits per bin."""
    if not M >= 2:
        raise ValueError(f"M must be >= 2, got {M}")
    if n_s < 0 or n_b < 0:
        raise ValueError("photon numbers must be >= 0")
    _, _, delta, qbar, one_minus_qbar = _ook_pieces(M, n_s, n_b)
    return binary_kl_nats(qbar, one_minus_qbar, delta * (1.0 - 1.0 / M)) / M * LOG2E


def simple_decoding_quadratic_approx(M, n_s, n_b):
    """Leading small-pulse term of the single-click (simple decoding) information.

    ``log2(e) (M-1) exp(-(M-1) n_b) n_s**2 / (2 M**2 (1 - exp(-n_b)))``
    """
    if not M >= 2:
        raise ValueError(f"M must be >= 2, got {M}")
    if not n_b > 0:
        raise ValueError("the quadratic approximation requires n_b > 0")
    return (
        LOG2E * (M - 1) * math.exp(-(M - 1) * n_b) * n_s**2
        / (2.0 * M**2 * -math.expm1(-n_b))
    )
