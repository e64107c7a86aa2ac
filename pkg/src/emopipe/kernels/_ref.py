"""Pure-NumPy reference implementations of the hot kernels.

Semantics match ``emopipe.kernels._core`` (the Cython extension); this module
is the import-time fallback when the extension is not built, and the baseline
side of benchmarks/bench_kernels.py.  The biquad recursion cannot be
vectorized over time, so ``sosfilt`` here is markedly slower than the
compiled version; batch callers should stack as many signals as possible
into one call.
"""

from __future__ import annotations

import numpy as np


def sosfilt(sos: np.ndarray, x: np.ndarray, zi: np.ndarray | None = None) -> np.ndarray:
    """Cascade of second-order sections applied along the last axis.

    Parameters
    ----------
    sos : (n_sections, 5) float64
        Rows of (b0, b1, b2, a1, a2); a0 is implicitly 1.
    x : (n_signals, n_samples) float64
        Each row is filtered independently.
    zi : (n_signals, n_sections, 2) float64, optional
        Initial state per signal and section (direct form II transposed).

    Returns
    -------
    (n_signals, n_samples) float64
    """
    sos = np.asarray(sos, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    n_signals, n_samples = x.shape
    n_sections = sos.shape[0]
    if zi is None:
        state = np.zeros((n_signals, n_sections, 2))
    else:
        state = np.array(zi, dtype=np.float64, copy=True)
    y = np.empty_like(x)
    b0 = sos[:, 0]
    b1 = sos[:, 1]
    b2 = sos[:, 2]
    a1 = sos[:, 3]
    a2 = sos[:, 4]
    z1 = state[:, :, 0]
    z2 = state[:, :, 1]
    for t in range(n_samples):
        v = x[:, t]
        for s in range(n_sections):
            out = b0[s] * v + z1[:, s]
            z1[:, s] = b1[s] * v + z2[:, s] - a1[s] * out
            z2[:, s] = b2[s] * v - a2[s] * out
            v = out
        y[:, t] = v
    return y


def window_variances(w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Population variances of each row, its first and its second difference.

    Parameters
    ----------
    w : (n_windows, window_len) float64 with window_len >= 3

    Returns
    -------
    (v0, v1, v2) : three (n_windows,) float64 arrays
    """
    w = np.asarray(w, dtype=np.float64)
    d1 = np.diff(w, axis=1)
    d2 = np.diff(d1, axis=1)
    return (
        np.var(w, axis=1),
        np.var(d1, axis=1),
        np.var(d2, axis=1),
    )


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    sample_idx: np.ndarray,
    feat_idx: np.ndarray,
    n_classes: int,
) -> tuple[int, float, float, int]:
    """Best axis-aligned split of the node ``sample_idx`` by Gini impurity.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values.  Minimizing weighted Gini is equivalent to maximizing
    ``sum_c cL[c]^2 / nL + sum_c cR[c]^2 / nR`` over integer class counts,
    which is what both backends score (exact in float64, so tie-breaks agree
    bit-for-bit across backends).  Ties resolve to the lowest feature index,
    then the lowest threshold, via strict-improvement scanning order.

    Returns
    -------
    (feature, threshold, score, n_left); feature is -1 when no candidate
    split exists (all considered columns constant on the node).
    """
    labels = np.asarray(y)[sample_idx]
    k = labels.shape[0]
    one_hot = np.zeros((k, n_classes))
    one_hot[np.arange(k), labels] = 1.0
    best_feature = -1
    best_threshold = 0.0
    best_score = -np.inf
    best_n_left = 0
    for f in feat_idx:
        v = X[sample_idx, f]
        order = np.argsort(v, kind="quicksort")
        sv = v[order]
        boundaries = np.nonzero(sv[:-1] != sv[1:])[0]
        if boundaries.size == 0:
            continue
        cum = np.cumsum(one_hot[order], axis=0)
        total = cum[-1]
        c_left = cum[boundaries]
        c_right = total - c_left
        n_left = (boundaries + 1).astype(np.float64)
        n_right = k - n_left
        score = (c_left * c_left).sum(axis=1) / n_left
        score += (c_right * c_right).sum(axis=1) / n_right
        j = int(np.argmax(score))
        if score[j] > best_score:
            i = int(boundaries[j])
            threshold = 0.5 * (sv[i] + sv[i + 1])
            if threshold >= sv[i + 1]:
                threshold = sv[i]
            best_feature = int(f)
            best_threshold = float(threshold)
            best_score = float(score[j])
            best_n_left = i + 1
    return best_feature, best_threshold, best_score, best_n_left
