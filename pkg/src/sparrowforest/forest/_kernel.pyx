# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled tree kernel: the hot twin of _kernel_py.py.

Same contract, same arithmetic, same feature-stream and tie rules as the
pure-Python fallback; keep the two files structurally in sync.
"""

from libc.math cimport log2
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy

import numpy as np

from libc.stdint cimport int32_t, int64_t, uint64_t, uint8_t

GAIN_EPS = 1e-12
GINI = 0
ENTROPY = 1

cdef double _GAIN_EPS = 1e-12


cdef inline uint64_t _mix64(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef int _sample_features_c(const int32_t* active, int k, int mtry,
                            uint64_t* state, int32_t* pool, int32_t* out) nogil:
    cdef int j, i, r
    cdef int32_t tmp, key
    if mtry >= k:
        for j in range(k):
            out[j] = active[j]
        return k
    for j in range(k):
        pool[j] = active[j]
    for j in range(mtry):
        r = j + <int>(_mix64(state) % <uint64_t>(k - j))
        tmp = pool[j]
        pool[j] = pool[r]
        pool[r] = tmp
    for j in range(mtry):
        out[j] = pool[j]
    # insertion sort: candidates are scanned in ascending feature order
    for i in range(1, mtry):
        key = out[i]
        j = i - 1
        while j >= 0 and out[j] > key:
            out[j + 1] = out[j]
            j -= 1
        out[j + 1] = key
    return mtry


cdef inline void _swap_pair(double* v, uint8_t* lab, long a, long b) nogil:
    cdef double tv = v[a]
    cdef uint8_t tl = lab[a]
    v[a] = v[b]
    v[b] = tv
    lab[a] = lab[b]
    lab[b] = tl


cdef void _sort_pairs(double* v, uint8_t* lab, long lo, long hi) nogil:
    # quicksort on v with lab carried along; insertion sort below 16
    cdef long i, j, mid, li, ri
    cdef double pivot, key
    cdef uint8_t lkey
    while hi - lo > 15:
        mid = lo + (hi - lo) // 2
        if v[mid] < v[lo]:
            _swap_pair(v, lab, mid, lo)
        if v[hi] < v[lo]:
            _swap_pair(v, lab, hi, lo)
        if v[hi] < v[mid]:
            _swap_pair(v, lab, hi, mid)
        pivot = v[mid]
        li = lo
        ri = hi
        while li <= ri:
            while v[li] < pivot:
                li += 1
            while v[ri] > pivot:
                ri -= 1
            if li <= ri:
                _swap_pair(v, lab, li, ri)
                li += 1
                ri -= 1
        if ri - lo < hi - li:
            _sort_pairs(v, lab, lo, ri)
            lo = li
        else:
            _sort_pairs(v, lab, li, hi)
            hi = ri
    for i in range(lo + 1, hi + 1):
        key = v[i]
        lkey = lab[i]
        j = i - 1
        while j >= lo and v[j] > key:
            v[j + 1] = v[j]
            lab[j + 1] = lab[j]
            j -= 1
        v[j + 1] = key
        lab[j + 1] = lkey


cdef inline double _imp(long c1, long c2, long m, int criterion) nogil:
    cdef double fm = <double>m
    cdef double e, p
    if criterion == 0:
        return 1.0 - (<double>(c1 * c1 + c2 * c2)) / (fm * fm)
    e = 0.0
    if c1 > 0:
        p = (<double>c1) / fm
        e -= p * log2(p)
    if c2 > 0:
        p = (<double>c2) / fm
        e -= p * log2(p)
    return e


cdef bint _scan_node_c(const double[:, ::1] X, const uint8_t[::1] y01,
                       const int64_t* idx, long s, long e, long tot2,
                       const int32_t* cand, int n_cand,
                       int criterion, int min_leaf,
                       double* vbuf, uint8_t* lbuf,
                       int32_t* out_f, double* out_thr, double* out_gain) nogil:
    cdef long m = e - s
    cdef long i, nl, nr, c1, c2, r1, r2
    cdef long tot1 = m - tot2
    cdef double fm = <double>m
    cdef double parent = _imp(tot1, tot2, m, criterion)
    cdef double best_gain = 0.0
    cdef double lo_v, hi_v, il, ir, gain, thr, best_thr = 0.0
    cdef int32_t best_f = -1
    cdef int ci, f

    for ci in range(n_cand):
        f = cand[ci]
        for i in range(m):
            vbuf[i] = X[idx[s + i], f]
            lbuf[i] = y01[idx[s + i]]
        _sort_pairs(vbuf, lbuf, 0, m - 1)
        c2 = 0
        for i in range(m - 1):
            c2 += lbuf[i]
            lo_v = vbuf[i]
            hi_v = vbuf[i + 1]
            if hi_v == lo_v:
                continue
            nl = i + 1
            nr = m - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            c1 = nl - c2
            r2 = tot2 - c2
            r1 = nr - r2
            il = _imp(c1, c2, nl, criterion)
            ir = _imp(r1, r2, nr, criterion)
            gain = parent - ((<double>nl) * il + (<double>nr) * ir) / fm
            if gain > best_gain + _GAIN_EPS:
                thr = (lo_v + hi_v) / 2.0
                if thr == hi_v:  # midpoint rounded up; keep partition consistent
                    thr = lo_v
                best_gain = gain
                best_f = f
                best_thr = thr
    if best_f < 0:
        return 0
    out_f[0] = best_f
    out_thr[0] = best_thr
    out_gain[0] = best_gain
    return 1


def best_split(X, y01, rows, features, criterion, min_leaf=1):
    """Best (feature, threshold, gain) over the given rows, or None."""
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const uint8_t[::1] yv = np.ascontiguousarray(y01, dtype=np.uint8)
    idx_arr = np.ascontiguousarray(rows, dtype=np.int64)
    cdef int64_t[::1] idxv = idx_arr
    feats = np.ascontiguousarray(sorted(int(f) for f in features), dtype=np.int32)
    cdef int32_t[::1] fv = feats
    cdef long m = idx_arr.shape[0]
    cdef long i, tot2 = 0
    for i in range(m):
        tot2 += yv[idxv[i]]
    cdef double* vbuf = <double*> malloc(m * sizeof(double))
    cdef uint8_t* lbuf = <uint8_t*> malloc(m * sizeof(uint8_t))
    if vbuf == NULL or lbuf == NULL:
        free(vbuf)
        free(lbuf)
        raise MemoryError()
    cdef int32_t out_f = -1
    cdef double out_thr = 0.0, out_gain = 0.0
    cdef bint found
    try:
        found = _scan_node_c(Xv, yv, &idxv[0], 0, m, tot2, &fv[0], fv.shape[0],
                             criterion, min_leaf, vbuf, lbuf,
                             &out_f, &out_thr, &out_gain)
    finally:
        free(vbuf)
        free(lbuf)
    if not found:
        return None
    return int(out_f), float(out_thr), float(out_gain)


def grow_tree(X, y01, sample_rows, active_features, mtry, max_depth, min_leaf,
              criterion, feat_seed):
    """Grow one CART tree; returns parallel node arrays.

    (feature, threshold, left, right, n1, n2); feature == -1 marks a leaf.
    """
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const uint8_t[::1] yv = np.ascontiguousarray(y01, dtype=np.uint8)
    rows_arr = np.ascontiguousarray(sample_rows, dtype=np.int64)
    act_arr = np.ascontiguousarray(active_features, dtype=np.int32)
    cdef int64_t[::1] rowsv = rows_arr
    cdef int32_t[::1] actv = act_arr

    cdef long n = rows_arr.shape[0]
    cdef int n_active = act_arr.shape[0]
    cdef long cap = 2 * max(1, n // max(1, <long>min_leaf)) + 3

    feature_arr = np.full(cap, -1, dtype=np.int32)
    threshold_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    n1_arr = np.zeros(cap, dtype=np.int64)
    n2_arr = np.zeros(cap, dtype=np.int64)
    cdef int32_t[::1] feature = feature_arr
    cdef double[::1] threshold = threshold_arr
    cdef int32_t[::1] left = left_arr
    cdef int32_t[::1] right = right_arr
    cdef int64_t[::1] n1 = n1_arr
    cdef int64_t[::1] n2 = n2_arr

    cdef int c_mtry = mtry
    cdef long c_max_depth = max_depth
    cdef int c_min_leaf = min_leaf
    cdef int c_criterion = criterion
    cdef uint64_t state = feat_seed

    cdef int64_t* idx = <int64_t*> malloc(n * sizeof(int64_t))
    cdef int64_t* scratch = <int64_t*> malloc(n * sizeof(int64_t))
    cdef double* vbuf = <double*> malloc(n * sizeof(double))
    cdef uint8_t* lbuf = <uint8_t*> malloc(n * sizeof(uint8_t))
    cdef int32_t* pool = <int32_t*> malloc(n_active * sizeof(int32_t))
    cdef int32_t* cand = <int32_t*> malloc(n_active * sizeof(int32_t))
    cdef int64_t* st_s = <int64_t*> malloc((cap + 2) * sizeof(int64_t))
    cdef int64_t* st_e = <int64_t*> malloc((cap + 2) * sizeof(int64_t))
    cdef int64_t* st_d = <int64_t*> malloc((cap + 2) * sizeof(int64_t))
    cdef int64_t* st_slot = <int64_t*> malloc((cap + 2) * sizeof(int64_t))
    if (idx == NULL or scratch == NULL or vbuf == NULL or lbuf == NULL or
            pool == NULL or cand == NULL or st_s == NULL or st_e == NULL or
            st_d == NULL or st_slot == NULL):
        free(idx); free(scratch); free(vbuf); free(lbuf); free(pool)
        free(cand); free(st_s); free(st_e); free(st_d); free(st_slot)
        raise MemoryError()

    cdef long node_count = 1
    cdef long top, s, e, depth, slot, m, i, c1, c2, nl, lslot, rslot, r
    cdef int n_cand
    cdef int32_t bf = -1
    cdef double bthr = 0.0, bgain = 0.0
    cdef bint found

    try:
        with nogil:
            for i in range(n):
                idx[i] = rowsv[i]
            top = 0
            st_s[0] = 0
            st_e[0] = n
            st_d[0] = 0
            st_slot[0] = 0
            top = 1
            while top > 0:
                top -= 1
                s = st_s[top]
                e = st_e[top]
                depth = st_d[top]
                slot = st_slot[top]
                m = e - s
                c2 = 0
                for i in range(s, e):
                    c2 += yv[idx[i]]
                c1 = m - c2
                n1[slot] = c1
                n2[slot] = c2
                if c1 == 0 or c2 == 0 or depth >= c_max_depth or m < 2 * c_min_leaf:
                    continue
                n_cand = _sample_features_c(&actv[0], n_active, c_mtry, &state, pool, cand)
                found = _scan_node_c(Xv, yv, idx, s, e, c2, cand, n_cand,
                                     c_criterion, c_min_leaf, vbuf, lbuf,
                                     &bf, &bthr, &bgain)
                if not found:
                    continue
                # stable partition by X[row, bf] <= bthr
                nl = 0
                for i in range(s, e):
                    r = idx[i]
                    if Xv[r, bf] <= bthr:
                        scratch[nl] = r
                        nl += 1
                c2 = nl  # reuse as write cursor for the right block
                for i in range(s, e):
                    r = idx[i]
                    if not (Xv[r, bf] <= bthr):
                        scratch[c2] = r
                        c2 += 1
                memcpy(idx + s, scratch, m * sizeof(int64_t))
                feature[slot] = bf
                threshold[slot] = bthr
                lslot = node_count
                rslot = node_count + 1
                node_count += 2
                left[slot] = lslot
                right[slot] = rslot
                st_s[top] = s + nl
                st_e[top] = e
                st_d[top] = depth + 1
                st_slot[top] = rslot
                top += 1
                st_s[top] = s
                st_e[top] = s + nl
                st_d[top] = depth + 1
                st_slot[top] = lslot
                top += 1
    finally:
        free(idx); free(scratch); free(vbuf); free(lbuf); free(pool)
        free(cand); free(st_s); free(st_e); free(st_d); free(st_slot)

    return (feature_arr[:node_count].copy(), threshold_arr[:node_count].copy(),
            left_arr[:node_count].copy(), right_arr[:node_count].copy(),
            n1_arr[:node_count].copy(), n2_arr[:node_count].copy())


def predict_tree(X, feature, threshold, left, right, n1, n2):
    """Predicted 0/1 labels for every row of X (1 means class 2)."""
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int32_t[::1] fv = np.ascontiguousarray(feature, dtype=np.int32)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const int32_t[::1] lv = np.ascontiguousarray(left, dtype=np.int32)
    cdef const int32_t[::1] rv = np.ascontiguousarray(right, dtype=np.int32)
    cdef const int64_t[::1] c1v = np.ascontiguousarray(n1, dtype=np.int64)
    cdef const int64_t[::1] c2v = np.ascontiguousarray(n2, dtype=np.int64)
    cdef long n = Xv.shape[0]
    out_arr = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] out = out_arr
    cdef long i, node
    with nogil:
        for i in range(n):
            node = 0
            while fv[node] >= 0:
                if Xv[i, fv[node]] <= tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            out[i] = 1 if c2v[node] > c1v[node] else 0  # tie -> class 1
    return out_arr
