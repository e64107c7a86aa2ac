# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: biquad cascade filtering, windowed Hjorth variances,
and the Gini best-split sweep.  Semantics match emopipe.kernels._ref."""

from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()


def sosfilt(double[:, ::1] sos, double[:, ::1] x, zi=None):
    """Cascade of (b0,b1,b2,a1,a2) sections applied along the last axis of x."""
    cdef Py_ssize_t n_sections = sos.shape[0]
    cdef Py_ssize_t n_signals = x.shape[0]
    cdef Py_ssize_t n_samples = x.shape[1]
    y_arr = np.empty((n_signals, n_samples), dtype=np.float64)
    cdef double[:, ::1] y = y_arr
    cdef double[:, :, ::1] zi_view
    cdef bint has_zi = zi is not None
    if has_zi:
        zi_view = np.ascontiguousarray(zi, dtype=np.float64)
    cdef double* z1 = <double*> malloc(n_sections * sizeof(double))
    cdef double* z2 = <double*> malloc(n_sections * sizeof(double))
    if z1 == NULL or z2 == NULL:
        free(z1)
        free(z2)
        raise MemoryError()
    cdef Py_ssize_t sig, t, s
    cdef double v, out
    try:
        with nogil:
            for sig in range(n_signals):
                for s in range(n_sections):
                    if has_zi:
                        z1[s] = zi_view[sig, s, 0]
                        z2[s] = zi_view[sig, s, 1]
                    else:
                        z1[s] = 0.0
                        z2[s] = 0.0
                for t in range(n_samples):
                    v = x[sig, t]
                    for s in range(n_sections):
                        out = sos[s, 0] * v + z1[s]
                        z1[s] = sos[s, 1] * v + z2[s] - sos[s, 3] * out
                        z2[s] = sos[s, 2] * v - sos[s, 4] * out
                        v = out
                    y[sig, t] = v
    finally:
        free(z1)
        free(z2)
    return y_arr


def window_variances(double[:, ::1] w):
    """Population variances of each row, its first and its second difference."""
    cdef Py_ssize_t m = w.shape[0]
    cdef Py_ssize_t n = w.shape[1]
    v0_arr = np.empty(m, dtype=np.float64)
    v1_arr = np.empty(m, dtype=np.float64)
    v2_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] v0 = v0_arr
    cdef double[::1] v1 = v1_arr
    cdef double[::1] v2 = v2_arr
    cdef Py_ssize_t i, t
    cdef double s0, s1, s2, m0, m1, m2, d1, d2, dev
    with nogil:
        for i in range(m):
            s0 = 0.0
            for t in range(n):
                s0 += w[i, t]
            m0 = s0 / n
            m1 = (w[i, n - 1] - w[i, 0]) / (n - 1)
            m2 = (w[i, n - 1] - w[i, n - 2] - w[i, 1] + w[i, 0]) / (n - 2)
            s0 = 0.0
            s1 = 0.0
            s2 = 0.0
            for t in range(n):
                dev = w[i, t] - m0
                s0 += dev * dev
                if t < n - 1:
                    d1 = w[i, t + 1] - w[i, t]
                    dev = d1 - m1
                    s1 += dev * dev
                if t < n - 2:
                    d2 = w[i, t + 2] - 2.0 * w[i, t + 1] + w[i, t]
                    dev = d2 - m2
                    s2 += dev * dev
            v0[i] = s0 / n
            v1[i] = s1 / (n - 1)
            v2[i] = s2 / (n - 2)
    return v0_arr, v1_arr, v2_arr


cdef inline void _swap(double* v, int* lab, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef double tv = v[a]
    cdef int tl = lab[a]
    v[a] = v[b]
    lab[a] = lab[b]
    v[b] = tv
    lab[b] = tl


cdef void _sort_pairs(double* v, int* lab, Py_ssize_t n) noexcept nogil:
    """In-place quicksort of v with lab carried along (median-of-3 Hoare,
    explicit stack, insertion sort below 16 elements)."""
    cdef Py_ssize_t lo_stack[128]
    cdef Py_ssize_t hi_stack[128]
    cdef int top
    cdef Py_ssize_t lo, hi, i, j, mid
    cdef double pivot, tv
    cdef int tl
    if n < 2:
        return
    lo_stack[0] = 0
    hi_stack[0] = n - 1
    top = 1
    while top > 0:
        top -= 1
        lo = lo_stack[top]
        hi = hi_stack[top]
        while hi - lo > 15:
            mid = lo + (hi - lo) // 2
            if v[mid] < v[lo]:
                _swap(v, lab, lo, mid)
            if v[hi] < v[lo]:
                _swap(v, lab, lo, hi)
            if v[hi] < v[mid]:
                _swap(v, lab, mid, hi)
            pivot = v[mid]
            i = lo - 1
            j = hi + 1
            while True:
                i += 1
                while v[i] < pivot:
                    i += 1
                j -= 1
                while v[j] > pivot:
                    j -= 1
                if i >= j:
                    break
                _swap(v, lab, i, j)
            # recurse into the smaller half, loop on the larger
            if j - lo < hi - j - 1:
                lo_stack[top] = j + 1
                hi_stack[top] = hi
                top += 1
                hi = j
            else:
                lo_stack[top] = lo
                hi_stack[top] = j
                top += 1
                lo = j + 1
        # insertion sort for the remaining short range
        for i in range(lo + 1, hi + 1):
            tv = v[i]
            tl = lab[i]
            j = i - 1
            while j >= lo and v[j] > tv:
                v[j + 1] = v[j]
                lab[j + 1] = lab[j]
                j -= 1
            v[j + 1] = tv
            lab[j + 1] = tl


def best_split(
    double[:, ::1] X,
    int[::1] y,
    long long[::1] sample_idx,
    long long[::1] feat_idx,
    int n_classes,
):
    """Best Gini split of the node; see emopipe.kernels._ref.best_split."""
    cdef Py_ssize_t k = sample_idx.shape[0]
    cdef Py_ssize_t m = feat_idx.shape[0]
    cdef Py_ssize_t K = n_classes
    cdef double* v = <double*> malloc(k * sizeof(double))
    cdef int* lab = <int*> malloc(k * sizeof(int))
    cdef int* node_lab = <int*> malloc(k * sizeof(int))
    cdef double* c_left = <double*> malloc(K * sizeof(double))
    cdef double* c_total = <double*> malloc(K * sizeof(double))
    if v == NULL or lab == NULL or node_lab == NULL or c_left == NULL or c_total == NULL:
        free(v)
        free(lab)
        free(node_lab)
        free(c_left)
        free(c_total)
        raise MemoryError()
    cdef Py_ssize_t fi, i, c
    cdef long long f
    cdef long long best_feature = -1
    cdef double best_threshold = 0.0
    cdef double best_score = -1.0
    cdef bint have_best = False
    cdef Py_ssize_t best_n_left = 0
    cdef double sl, sr, cnt, score, thr
    try:
        with nogil:
            for c in range(K):
                c_total[c] = 0.0
            for i in range(k):
                node_lab[i] = y[sample_idx[i]]
                c_total[node_lab[i]] += 1.0
            for fi in range(m):
                f = feat_idx[fi]
                for i in range(k):
                    v[i] = X[sample_idx[i], f]
                    lab[i] = node_lab[i]
                _sort_pairs(v, lab, k)
                for c in range(K):
                    c_left[c] = 0.0
                for i in range(k - 1):
                    c_left[lab[i]] += 1.0
                    if v[i] != v[i + 1]:
                        sl = 0.0
                        sr = 0.0
                        for c in range(K):
                            cnt = c_left[c]
                            sl += cnt * cnt
                            cnt = c_total[c] - cnt
                            sr += cnt * cnt
                        score = sl / (i + 1) + sr / (k - i - 1)
                        if (not have_best) or score > best_score:
                            thr = 0.5 * (v[i] + v[i + 1])
                            if thr >= v[i + 1]:
                                thr = v[i]
                            best_feature = f
                            best_threshold = thr
                            best_score = score
                            best_n_left = i + 1
                            have_best = True
    finally:
        free(v)
        free(lab)
        free(node_lab)
        free(c_left)
        free(c_total)
    if not have_best:
        return -1, 0.0, float("-inf"), 0
    return int(best_feature), best_threshold, best_score, int(best_n_left)
