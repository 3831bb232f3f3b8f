"""Click-level model of one PPM frame seen by a Geiger-mode photon counter.

A frame has ``M`` time bins, one of which carries the pulse.  Each bin clicks
independently: the pulse bin with probability ``p_c`` and every empty bin with
probability ``p_b``.  All sequence probabilities are returned as natural logs
because for large frames the linear-domain products underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    """Dimensionless description of the PPM channel.

    Attributes
    ----------
    n_s : float
        Mean detected signal photons in the pulse.
    n_b : float
        Mean background photons per time bin.
    M : int
        PPM order (bins per frame).
    K : int, optional
        Largest number of clicks per frame the decoder resolves; frames with
        more clicks are erased.  Defaults to ``M`` (complete decoding).
    """

    n_s: float
    n_b: float
    M: int
    K: int | None = None

    def __post_init__(self):
        if not (self.n_s >= 0 and math.isfinite(self.n_s)):
            raise ValueError(f"n_s must be finite and >= 0, got {self.n_s}")
        if not (self.n_b >= 0 and math.isfinite(self.n_b)):
            raise ValueError(f"n_b must be finite and >= 0, got {self.n_b}")
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"M must be an integer >= 2, got {self.M}")
        object.__setattr__(self, "M", int(self.M))
        if self.K is None:
            object.__setattr__(self, "K", self.M)
        if int(self.K) != self.K or not 1 <= self.K <= self.M:
            raise ValueError(f"K must be an integer in [1, M={self.M}], got {self.K}")
        object.__setattr__(self, "K", int(self.K))

    @classmethod
    def from_average_power(cls, n_a, n_b, M, K=None):
        """Build parameters under the average-power constraint ``n_s = M * n_a``."""
        if not n_a >= 0:
            raise ValueError(f"n_a must be >= 0, got {n_a}")
        return cls(n_s=M * n_a, n_b=n_b, M=M, K=K)

    @property
    def n_a(self):
        return self.n_s / self.M

    @property
    def complete(self):
        return self.K == self.M


@dataclass(frozen=True)
class ClickProbs:
    p_b: float
    p_c: float
    log_pb: float
    log1m_pb: float
    log_pc: float
    log1m_pc: float


def click_probabilities(n_s, n_b):
    """Click probabilities of an empty bin and of the pulse bin.

    ``p_b = 1 - exp(-n_b)``, ``p_c = 1 - exp(-n_s - n_b)``.  The log fields are
    built from ``expm1`` so they stay accurate for photon numbers near zero.
    """
    if n_s < 0 or n_b < 0:
        raise ValueError(f"photon numbers must be >= 0, got n_s={n_s}, n_b={n_b}")
    p_b = -math.expm1(-n_b)
    p_c = -math.expm1(-(n_s + n_b))
    return ClickProbs(
        p_b=p_b,
        p_c=p_c,
        log_pb=math.log(p_b) if p_b > 0 else -math.inf,
        log1m_pb=-n_b,
        log_pc=math.log(p_c) if p_c > 0 else -math.inf,
        log1m_pc=-(n_s + n_b),
    )


def _times_log(count, log_value):
    # count * log_value with 0 * (-inf) == 0
    return np.where(count == 0, 0.0, count * log_value)


def _check_k(k, lo, hi, name):
    k = np.asarray(k)
    if np.any(k != np.floor(k)) or np.any(k < lo) or np.any(k > hi):
        raise ValueError(f"{name}: k must be an integer in [{lo}, {hi}], got {k}")
    return k.astype(float)


def _unwrap(x):
    return float(x) if np.ndim(x) == 0 else x


def log_seq_prob_signal(k, cp: ClickProbs, M):
    """Log-probability of one specific ``k``-click pattern that includes the pulse bin."""
    k = _check_k(k, 1, M, "log_seq_prob_signal")
    with np.errstate(invalid="ignore"):
        out = cp.log_pc + _times_log(k - 1, cp.log_pb) + _times_log(M - k, cp.log1m_pb)
    return _unwrap(out)


def log_seq_prob_empty(k, cp: ClickProbs, M):
    """Log-probability of one specific ``k``-click pattern that misses the pulse bin.

    ``k == M`` is rejected: no such pattern exists.
    """
    k = _check_k(k, 0, M - 1, "log_seq_prob_empty")
    with np.errstate(invalid="ignore"):
        out = (
            cp.log1m_pc
            + _times_log(k, cp.log_pb)
            + _times_log(M - k - 1, cp.log1m_pb)
        )
    return _unwrap(out)


def log_marginal_prob(k, cp: ClickProbs, M):
    """Log-probability of one specific ``k``-click pattern averaged over the M inputs."""
    k = _check_k(k, 0, M, "log_marginal_prob")
    w = k / M
    with np.errstate(divide="ignore"):
        sig = np.log(w) + log_seq_prob_signal(np.clip(k, 1, M), cp, M)
        emp = np.log1p(-w) + log_seq_prob_empty(np.clip(k, 0, M - 1), cp, M)
    sig = np.where(k == 0, -np.inf, sig)
    emp = np.where(k == M, -np.inf, emp)
    return _unwrap(np.logaddexp(sig, emp))
