"""Independent checks of the analytic channel model.

`brute_force_mi` enumerates every click pattern of a small frame and computes
the mutual information straight from the joint distribution.  The simulator
draws frames bin by bin and feeds a plug-in estimator.  Neither path shares
code with `ppmlink.infotheory`.

Random streams use numpy's Philox 4x64 counter-based generator.  A run with
seed ``s`` is split into chunks of `CHUNK_FRAMES` frames; chunk ``i`` draws
from ``Philox(SeedSequence(s).spawn(n_chunks)[i])``, first the input symbols
(``integers(0, M)``) and then an ``(n, M)`` block of uniforms compared against
the per-bin click probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ENUM_M = 20
CHUNK_FRAMES = 1 << 18


def _bin_probs(n_s, n_b):
    p_b = 1.0 - math.exp(-n_b)
    p_c = 1.0 - math.exp(-n_s - n_b)
    return p_b, p_c


def _patterns(M):
    # row j = binary click pattern of integer j, bin i is bit i
    idx = np.arange(1 << M, dtype=np.int64)
    return ((idx[:, None] >> np.arange(M)) & 1).astype(bool)


def brute_force_mi(M, n_s, n_b, K=None):
    """Exact mutual information in bits per bin by enumerating all ``2**M`` patterns.

    Patterns with more than ``K`` clicks are merged into one erasure outcome.
    """
    if M > MAX_ENUM_M:
        raise ValueError(f"enumeration refused for M={M} > {MAX_ENUM_M}")
    if M < 2:
        raise ValueError("M must be >= 2")
    K = M if K is None else K
    p_b, p_c = _bin_probs(n_s, n_b)
    clicks = _patterns(M)
    n_clicks = clicks.sum(axis=1)
    kept = n_clicks <= K

    # p(y | x) for each input x (pulse in bin x); rows = inputs
    cond = np.empty((M, clicks.shape[0]))
    for x in range(M):
        probs = np.where(clicks, p_b, 1.0 - p_b)
        probs[:, x] = np.where(clicks[:, x], p_c, 1.0 - p_c)
        cond[x] = probs.prod(axis=1)
    erased = cond[:, ~kept].sum(axis=1, keepdims=True)
    cond = np.hstack([cond[:, kept], erased])

    joint = cond / M
    marginal = joint.sum(axis=0)
    terms = []
    for x in range(M):
        nz = joint[x] > 0
        terms.extend(joint[x, nz] * np.log2(cond[x, nz] / marginal[nz]))
    return math.fsum(terms) / M


@dataclass
class FrameSample:
    """A batch of simulated frames: input symbols and their click patterns."""

    input_symbol: np.ndarray  # (n,) ints in [0, M)
    clicks: np.ndarray  # (n, M) bool


@dataclass
class FrameCounts:
    """Aggregated simulation output.

    ``by_class[x, k, f]`` counts frames with input ``x``, ``k`` clicks in total,
    and ``f == 1`` when the pulse bin clicked.  ``joint[x, y]`` counts input
    ``x`` against the full pattern ``y`` (bit ``i`` = bin ``i``); it is only
    filled when ``M <= MAX_ENUM_M``.
    """

    M: int
    num_frames: int
    by_class: np.ndarray
    joint: np.ndarray | None

    def __add__(self, other):
        joint = None if self.joint is None else self.joint + other.joint
        return FrameCounts(self.M, self.num_frames + other.num_frames,
                           self.by_class + other.by_class, joint)


def sample_frames(M, n_s, n_b, num_frames, rng):
    """Draw ``num_frames`` frames from ``rng`` with bin-wise independent clicks."""
    p_b, p_c = _bin_probs(n_s, n_b)
    symbols = rng.integers(0, M, size=num_frames)
    u = rng.random((num_frames, M))
    thresh = np.full((num_frames, M), p_b)
    thresh[np.arange(num_frames), symbols] = p_c
    return FrameSample(symbols, u < thresh)


def _count(sample, M, want_joint):
    sym = sample.input_symbol
    k = sample.clicks.sum(axis=1)
    flag = sample.clicks[np.arange(sym.size), sym].astype(np.int64)
    cls = np.bincount((sym * (M + 1) + k) * 2 + flag, minlength=M * (M + 1) * 2)
    joint = None
    if want_joint:
        weights = np.int64(1) << np.arange(M, dtype=np.int64)
        pattern = sample.clicks.astype(np.int64) @ weights
        joint = np.bincount(sym * (1 << M) + pattern, minlength=M << M).reshape(M, 1 << M)
    return FrameCounts(M, sym.size, cls.reshape(M, M + 1, 2), joint)


def simulate_frames(M, n_s, n_b, num_frames, seed):
    """Simulate frames and return their `FrameCounts`.

    Deterministic in ``seed``: chunk sub-streams are spawned from it and the
    counts are merged by addition, so the result does not depend on order.
    """
    if num_frames < 1:
        raise ValueError("num_frames must be >= 1")
    if M < 2:
        raise ValueError("M must be >= 2")
    if n_s < 0 or n_b < 0:
        raise ValueError("photon numbers must be >= 0")
    want_joint = M <= MAX_ENUM_M
    n_chunks = -(-num_frames // CHUNK_FRAMES)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    total = None
    remaining = num_frames
    for child in children:
        n = min(CHUNK_FRAMES, remaining)
        remaining -= n
        rng = np.random.Generator(np.random.Philox(child))
        counts = _count(sample_frames(M, n_s, n_b, n, rng), M, want_joint)
        total = counts if total is None else total + counts
    return total


def plugin_mutual_information(joint_counts):
    """Plug-in mutual information in bits from a 2-D contingency table."""
    c = np.asarray(joint_counts, dtype=float)
    n = c.sum()
    rows = c.sum(axis=1, keepdims=True)
    cols = c.sum(axis=0, keepdims=True)
    nz = c > 0
    expected = (rows * cols)[nz] / n
    return float(np.sum(c[nz] * np.log2(c[nz] / expected)) / n)


def bootstrap_mi(joint_counts, n_resamples=100, seed=0):
    """Plug-in estimate and its bootstrap standard error (multinomial resampling)."""
    c = np.asarray(joint_counts)
    n = int(c.sum())
    p = (c / n).ravel()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    reps = [
        plugin_mutual_information(rng.multinomial(n, p).reshape(c.shape))
        for _ in range(n_resamples)
    ]
    return plugin_mutual_information(c), float(np.std(reps, ddof=1))
