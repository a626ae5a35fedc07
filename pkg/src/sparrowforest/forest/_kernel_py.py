"""Pure-Python tree kernel: the fallback twin of the compiled extension.

Both backends implement the same contract with the same arithmetic, draw
order and tie rules, so a forest grown by either is interchangeable. Keep
this file and _kernel.pyx structurally in sync.

Labels arrive as 0/1 (0 = class 1, 1 = class 2). Split thresholds sit at
midpoints between consecutive distinct sorted values; rows with value <=
threshold go left. A candidate replaces the incumbent best only when its
gain exceeds it by more than GAIN_EPS, so exact ties resolve to the lowest
feature index and lowest threshold in both backends.
"""

from __future__ import annotations

import math

import numpy as np

GAIN_EPS = 1e-12

GINI = 0
ENTROPY = 1

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    # Same stream as the C implementation; all arithmetic mod 2**64.
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _sample_features(active: list[int], mtry: int, state: int) -> tuple[list[int], int]:
    k = len(active)
    if mtry >= k:
        return list(active), state
    pool = list(active)
    for j in range(mtry):
        state, z = _splitmix64(state)
        r = j + z % (k - j)
        pool[j], pool[r] = pool[r], pool[j]
    return sorted(pool[:mtry]), state


def _node_impurity(c1: int, c2: int, m: int, criterion: int) -> float:
    if criterion == GINI:
        fm = float(m)
        return 1.0 - (c1 * c1 + c2 * c2) / (fm * fm)
    e = 0.0
    if c1 > 0:
        p = c1 / m
        e -= p * math.log2(p)
    if c2 > 0:
        p = c2 / m
        e -= p * math.log2(p)
    return e


def _scan_node(X, y01, seg, features, criterion, min_leaf):
    """Exhaustive midpoint scan over candidate features for one node.

    Returns (feature, threshold, gain) or None when no split improves the
    weighted impurity by more than GAIN_EPS.
    """
    m = len(seg)
    ylist = y01[seg]
    tot2 = int(ylist.sum())
    tot1 = m - tot2
    parent = _node_impurity(tot1, tot2, m, criterion)
    fm = float(m)

    best_gain = 0.0
    best_feature = -1
    best_thr = 0.0
    for f in features:
        vals = X[seg, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order].tolist()
        sy = ylist[order].tolist()
        c2 = 0
        for i in range(m - 1):
            c2 += sy[i]
            lo = sv[i]
            hi = sv[i + 1]
            if hi == lo:
                continue
            nl = i + 1
            nr = m - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            c1 = nl - c2
            r2 = tot2 - c2
            r1 = nr - r2
            il = _node_impurity(c1, c2, nl, criterion)
            ir = _node_impurity(r1, r2, nr, criterion)
            gain = parent - (nl * il + nr * ir) / fm
            if gain > best_gain + GAIN_EPS:
                thr = (lo + hi) / 2.0
                if thr == hi:  # midpoint rounded up; keep partition consistent
                    thr = lo
                best_gain = gain
                best_feature = f
                best_thr = thr
    if best_feature < 0:
        return None
    return best_feature, best_thr, best_gain


def best_split(X, y01, rows, features, criterion, min_leaf=1):
    """Best (feature, threshold, gain) over the given rows, or None."""
    seg = np.asarray(rows, dtype=np.int64)
    feats = sorted(int(f) for f in features)
    return _scan_node(np.asarray(X, dtype=np.float64), np.asarray(y01), seg, feats, criterion, min_leaf)


def grow_tree(X, y01, sample_rows, active_features, mtry, max_depth, min_leaf, criterion, feat_seed):
    """Grow one CART tree; returns parallel node arrays.

    (feature, threshold, left, right, n1, n2); feature == -1 marks a leaf.
    Nodes are visited in preorder (left subtree first) and the feature
    stream is consumed once per split attempt, exactly as in the compiled
    kernel.
    """
    n = len(sample_rows)
    cap = 2 * max(1, n // max(1, min_leaf)) + 3
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    n1 = np.zeros(cap, dtype=np.int64)
    n2 = np.zeros(cap, dtype=np.int64)

    idx = np.array(sample_rows, dtype=np.int64)
    active = [int(f) for f in active_features]
    state = int(feat_seed)
    node_count = 1
    stack = [(0, n, 0, 0)]  # (start, end, depth, slot)
    while stack:
        s, e, depth, slot = stack.pop()
        seg = idx[s:e]
        m = e - s
        c2 = int(y01[seg].sum())
        c1 = m - c2
        n1[slot] = c1
        n2[slot] = c2
        if c1 == 0 or c2 == 0 or depth >= max_depth or m < 2 * min_leaf:
            continue
        candidates, state = _sample_features(active, mtry, state)
        found = _scan_node(X, y01, seg, candidates, criterion, min_leaf)
        if found is None:
            continue
        bf, bthr, _ = found
        go_left = X[seg, bf] <= bthr
        nl = int(go_left.sum())
        left_rows = seg[go_left]  # seg views idx: gather both sides before writing
        right_rows = seg[~go_left]
        idx[s : s + nl] = left_rows
        idx[s + nl : e] = right_rows
        feature[slot] = bf
        threshold[slot] = bthr
        lslot = node_count
        rslot = node_count + 1
        node_count += 2
        left[slot] = lslot
        right[slot] = rslot
        stack.append((s + nl, e, depth + 1, rslot))
        stack.append((s, s + nl, depth + 1, lslot))

    sl = slice(0, node_count)
    return feature[sl], threshold[sl], left[sl], right[sl], n1[sl], n2[sl]


def predict_tree(X, feature, threshold, left, right, n1, n2):
    """Predicted 0/1 labels for every row of X (1 means class 2)."""
    n = X.shape[0]
    leaf_label = (n2 > n1).astype(np.uint8)  # tie -> class 1
    node = np.zeros(n, dtype=np.int64)
    while True:
        f = feature[node]
        mask = f >= 0
        if not mask.any():
            break
        rows = np.flatnonzero(mask)
        cur = node[rows]
        vals = X[rows, f[rows]]
        go_left = vals <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
    return leaf_label[node]
