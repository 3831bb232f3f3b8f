"""Numerically careful special functions shared by the channel and information layers.

The binomial log-pmf follows Loader's saddle-point formulation
(Stirling-series remainder plus a deviance term), which keeps full relative
accuracy for trial counts far beyond what naive log-gamma differences allow.
"""
import math

import numpy as np

_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# remainder of Stirling's series, lgamma(n+1) - (n+1/2) log n + n - log sqrt(2 pi)
_S0 = 1.0 / 12
_S1 = 1.0 / 360
_S2 = 1.0 / 1260
_S3 = 1.0 / 1680
_S4 = 1.0 / 1188


_STIRLERR_INT = np.array(
    [0.0] + [math.lgamma(v + 1.0) - (v + 0.5) * math.log(v) + v - _LN_SQRT_2PI
             for v in range(1, 16)]
)


def stirlerr(n):
    """Stirling-series error term, vectorized over positive ``n``."""
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    small = n <= 15
    table = small & (n == np.floor(n))
    if np.any(table):
        out[table] = _STIRLERR_INT[n[table].astype(np.int64)]
    rest = small & ~table
    if np.any(rest):
        ns = n[rest]
        lg = np.array([math.lgamma(v + 1.0) for v in ns.ravel()]).reshape(ns.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = lg - (ns + 0.5) * np.log(ns) + ns - _LN_SQRT_2PI
        out[rest] = np.where(ns == 0, 0.0, val)
    big = ~small
    if np.any(big):
        nb = n[big]
        nn = nb * nb
        out[big] = (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / nb
    return out


def bd0(x, np_):
    """Deviance ``x log(x/np) + np - x`` without cancellation near ``x == np``."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(np_, dtype=float)
    x, m = np.broadcast_arrays(x, m)
    out = np.empty(x.shape)
    near = np.abs(x - m) < 0.1 * (x + m)
    if np.any(near):
        xs, ms = x[near], m[near]
        v = (xs - ms) / (xs + ms)
        s = (xs - ms) * v
        ej = 2.0 * xs * v
        v2 = v * v
        # |v| < 0.1/1.1 so 14 terms reach double precision
        for j in range(1, 15):
            ej = ej * v2
            s = s + ej / (2 * j + 1)
        out[near] = s
    far = ~near
    if np.any(far):
        xf, mf = x[far], m[far]
        with np.errstate(divide="ignore", invalid="ignore"):
            val = xf * (np.log(xf) - np.log(mf)) + mf - xf
        out[far] = np.where(xf == 0, mf, val)
    return out


def log_binom_coef(n, k):
    """Natural log of ``C(n, k)``; ``-inf`` outside ``0 <= k <= n``."""
    n = float(n)
    k = np.asarray(k, dtype=float)
    out = np.full(k.shape, -np.inf)
    edge = (k == 0) | (k == n)
    out[edge] = 0.0
    inner = (k > 0) & (k < n)
    if np.any(inner):
        ki = k[inner]
        nk = n - ki
        out[inner] = (
            ki * np.log(n / ki)
            - nk * np.log1p(-ki / n)
            + 0.5 * np.log(n / (2.0 * math.pi * ki * nk))
            + stirlerr(n) - stirlerr(ki) - stirlerr(nk)
        )
    return out


def binom_logpmf(k, n, p, q=None):
    """Log of the Binomial(n, p) pmf at ``k``.

    ``q`` is ``1 - p``; pass it explicitly when it is known more accurately
    than ``1 - p`` rounds (e.g. ``q = exp(-x)`` with ``p = -expm1(-x)``).
    """
    if q is None:
        q = 1.0 - p
    n = float(n)
    k = np.asarray(k, dtype=float)
    out = np.full(k.shape, -np.inf)
    if p == 0.0:
        out[k == 0] = 0.0
        return out
    if q == 0.0:
        out[k == n] = 0.0
        return out
    lo = k == 0
    out[lo] = n * math.log(q)
    hi = k == n
    out[hi] = n * math.log(p)
    inner = (k > 0) & (k < n)
    if np.any(inner):
        ki = k[inner]
        nk = n - ki
        lc = stirlerr(n) - stirlerr(ki) - stirlerr(nk) - bd0(ki, n * p) - bd0(nk, n * q)
        out[inner] = lc + 0.5 * np.log(n / (2.0 * math.pi * ki * nk))
    return out


_G_SERIES = np.array([1.0 / (j * (j - 1)) for j in range(2, 24)])


def xlog1px_minus_x(x):
    """``(1 + x) log(1 + x) - x`` for ``x >= -1``; nonnegative, ~ x**2/2 near 0.

    Relative entropies and Jensen gaps are written as weighted sums of this
    function so that nearly equal distributions do not cancel catastrophically.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    small = np.abs(x) < 0.1
    if np.any(small):
        xs = x[small]
        acc = np.zeros_like(xs)
        # alternating series sum_{j>=2} (-x)^j / (j (j-1)), Horner from the top
        for c in _G_SERIES[::-1]:
            acc = acc * (-xs) + c
        out[small] = acc * xs * xs
    big = ~small
    if np.any(big):
        xb = x[big]
        with np.errstate(divide="ignore", invalid="ignore"):
            val = (1.0 + xb) * np.log1p(xb) - xb
        out[big] = np.where(xb == -1.0, 1.0, val)
    return out


def binary_kl_nats(q, one_minus_q, diff):
    """Binary relative entropy ``D(q + diff || q)`` in nats.

    Both ``q`` and ``1 - q`` are taken as inputs so callers can supply them
    without rounding; ``diff`` is ``p - q``.
    """
    if diff == 0.0:
        return 0.0
    a = diff / q if q > 0 else math.inf
    b = -diff / one_minus_q if one_minus_q > 0 else math.inf
    if math.isinf(a) or math.isinf(b):
        return math.inf
    ga, gb = xlog1px_minus_x(np.array([a, b]))
    return float(q * ga + one_minus_q * gb)
