"""Small numeric helpers shared across planner and inference code."""
from __future__ import annotations

import numpy as np


def logsumexp(x):
    """Stable log(sum(exp(x))) for a 1-d array; -inf for an empty/all--inf x."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return -np.inf
    m = np.max(x)
    if not np.isfinite(m):
        return m  # all -inf (or a +inf present, which we never produce)
    return m + np.log(np.sum(np.exp(x - m)))


def softmax_weights(logits) -> np.ndarray:
    """Normalized exp(logits), computed with max-subtraction.

    Entries of -inf get weight exactly 0.  If every entry is -inf the result
    is the uniform distribution (the caller has no information to act on).
    """
    logits = np.asarray(logits, dtype=float)
    m = np.max(logits) if logits.size else -np.inf
    if not np.isfinite(m):
        return np.full(logits.shape, 1.0 / max(len(logits), 1))
    w = np.exp(logits - m)
    return w / w.sum()


def log_normal_pdf(x, sigma):
    return -np.log(sigma * np.sqrt(2.0 * np.pi)) - 0.5 * (x / sigma) ** 2


def systematic_offspring(weights, k, u) -> np.ndarray:
    """Offspring counts of systematic resampling with uniform offset ``u``.

    ``weights`` must be normalized; ``u`` is a single draw from U(0,1).
    Positions (i + u)/k for i in 0..k-1 are matched against the cumulative
    weight profile.
    """
    w = np.asarray(weights, dtype=float)
    edges = np.cumsum(w)
    edges[-1] = 1.0  # guard rounding
    positions = (np.arange(k) + u) / k
    idx = np.searchsorted(edges, positions, side="right")
    counts = np.bincount(idx, minlength=len(w))
    return counts
