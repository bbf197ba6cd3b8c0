"""Compiled CART growth shared by the forest and the boosting ensemble.

Trees live in flat node arrays (``feat``, ``thr``, ``left``, ``right``,
``value``); a leaf has ``feat == -1``. Randomness comes from a counter-based
splitmix64 hash, so a tree depends only on its key, never on call order.

Candidate features at a node are the ``n_cand`` features whose hash of
(tree key, node number, feature id) is smallest, then scanned in feature-id
order. Keying on ids rather than column positions makes a fitted tree
independent of how the columns happen to be ordered.
"""

import numpy as np
from numba import njit

GINI, ENTROPY, MSE, FRIEDMAN_MSE = 0, 1, 2, 3

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def splitmix(x):
    z = x + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def mix(a, b):
    return splitmix(a ^ splitmix(b))


@njit(cache=True, nogil=True)
def uniform(key, counter):
    return float(mix(key, np.uint64(counter)) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def _sorted_sum(terms, m):
    # insertion sort, then add smallest first: the result ignores class order
    for i in range(1, m):
        v = terms[i]
        j = i - 1
        while j >= 0 and terms[j] > v:
            terms[j + 1] = terms[j]
            j -= 1
        terms[j + 1] = v
    s = 0.0
    for i in range(m):
        s += terms[i]
    return s


@njit(cache=True, nogil=True)
def _impurity_from(get, counts, lcounts, total, crit, terms):
    """Gini or entropy of ``counts`` (get=0), ``lcounts`` (1) or ``counts - lcounts`` (2).

    Gini is computed as (w^2 - sum c^2) / w^2; with integer weights the sum
    is exact. Entropy adds its per-class terms in sorted order. Either way the
    value does not depend on how classes are numbered.
    """
    if total <= 0.0:
        return 0.0
    if crit == GINI:
        s = 0.0
        for c in range(counts.shape[0]):
            if get == 0:
                v = counts[c]
            elif get == 1:
                v = lcounts[c]
            else:
                v = counts[c] - lcounts[c]
            s += v * v
        t2 = total * total
        return max((t2 - s) / t2, 0.0)
    m = 0
    for c in range(counts.shape[0]):
        if get == 0:
            v = counts[c]
        elif get == 1:
            v = lcounts[c]
        else:
            v = counts[c] - lcounts[c]
        if v > 0.0:
            q = v / total
            terms[m] = -q * np.log(q)
            m += 1
    return _sorted_sum(terms, m)


@njit(cache=True, nogil=True)
def _clf_impurity(counts, total, crit):
    terms = np.empty(counts.shape[0])
    return _impurity_from(0, counts, counts, total, crit, terms)


@njit(cache=True, nogil=True)
def _candidates(tree_key, node_no, fids, by_id, n_cand):
    p = fids.shape[0]
    if n_cand >= p:
        return by_id.copy()
    keys = np.empty(p, np.uint64)
    base = mix(tree_key, np.uint64(node_no))
    for j in range(p):
        keys[j] = mix(base, np.uint64(fids[j]))
    chosen = np.argsort(keys)[:n_cand]
    # scan in feature-id order
    order = np.argsort(fids[chosen])
    return chosen[order]


@njit(cache=True, nogil=True)
def column_order(X):
    """Row indices sorted by each column, ties broken by row index."""
    n, p = X.shape
    out = np.empty((p, n), np.int64)
    for f in range(p):
        out[f] = np.argsort(X[:, f], kind="mergesort")
    return out


@njit(cache=True, nogil=True)
def grow_tree(X, fids, by_id, gorder, y_cls, y_reg, w, rows, n_classes, crit, max_depth, n_cand,
              tree_key, feat, thr, left, right, value, importance, base, w_root):
    """Grow one tree from ``rows`` (indices with positive weight) into slots ``base..``.

    Classification when ``crit`` is GINI/ENTROPY (``value`` rows hold class
    probabilities), regression otherwise (``value[:, 0]`` holds the leaf mean).
    Importance accumulates the weighted impurity decrease, divided by
    ``w_root``, per column. Returns the number of nodes written.

    ``gorder[f]`` lists all rows sorted by column ``f`` (ties by row index).
    Each column keeps its own sorted copy of the node's rows, partitioned in
    place at every split, so no sorting happens below the root.
    """
    is_clf = crit == GINI or crit == ENTROPY
    n_rows = rows.shape[0]
    cap = 2 * n_rows + 1
    st_node = np.empty(cap, np.int64)
    st_lo = np.empty(cap, np.int64)
    st_hi = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    top = 0
    st_node[0] = base
    st_lo[0] = 0
    st_hi[0] = n_rows
    st_depth[0] = 0
    top = 1
    n_nodes = 1

    counts = np.zeros(n_classes)
    lcounts = np.zeros(n_classes)
    terms = np.empty(n_classes)
    scratch = np.empty(n_rows, rows.dtype)
    p = X.shape[1]
    n_all = X.shape[0]
    in_tree = np.zeros(n_all, np.bool_)
    for q in range(n_rows):
        in_tree[rows[q]] = True
    sidx = np.empty((p, n_rows), np.int64)
    for f in range(p):
        m = 0
        for q in range(n_all):
            r = gorder[f, q]
            if in_tree[r]:
                sidx[f, m] = r
                m += 1
    goes_left = np.zeros(n_all, np.bool_)

    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        depth = st_depth[top]
        nn = hi - lo

        wsum = 0.0
        ssum = 0.0
        s2 = 0.0
        counts[:] = 0.0
        for q in range(lo, hi):
            r = rows[q]
            wsum += w[r]
            if is_clf:
                counts[y_cls[r]] += w[r]
            else:
                ssum += w[r] * y_reg[r]
                s2 += w[r] * y_reg[r] * y_reg[r]
        if is_clf:
            for c in range(n_classes):
                value[node, c] = counts[c] / wsum
            node_imp = _impurity_from(0, counts, lcounts, wsum, crit, terms)
        else:
            mean = ssum / wsum
            value[node, 0] = mean
            node_imp = max(s2 / wsum - mean * mean, 0.0)
        feat[node] = -1
        left[node] = -1
        right[node] = -1
        thr[node] = 0.0

        if depth >= max_depth or nn < 2 or node_imp <= 1e-15:
            continue

        cand = _candidates(tree_key, node - base, fids, by_id, n_cand)
        best_gain = -np.inf
        best_f = -1
        best_thr = 0.0
        for ci in range(cand.shape[0]):
            f = cand[ci]
            srow = sidx[f]
            if X[srow[lo], f] == X[srow[hi - 1], f]:
                continue
            wl = 0.0
            sl = 0.0
            lcounts[:] = 0.0
            for q in range(lo, hi - 1):
                r = srow[q]
                wl += w[r]
                if is_clf:
                    lcounts[y_cls[r]] += w[r]
                else:
                    sl += w[r] * y_reg[r]
                v = X[r, f]
                vn = X[srow[q + 1], f]
                if vn <= v:
                    continue
                wr = wsum - wl
                if is_clf:
                    il = _impurity_from(1, counts, lcounts, wl, crit, terms)
                    ir = _impurity_from(2, counts, lcounts, wr, crit, terms)
                    gain = node_imp - (wl / wsum) * il - (wr / wsum) * ir
                else:
                    ml = sl / wl
                    mr = (ssum - sl) / wr
                    if crit == FRIEDMAN_MSE:
                        gain = wl * wr * (ml - mr) * (ml - mr)
                    else:
                        gain = wl * wr / wsum * (ml - mr) * (ml - mr)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    t = v + (vn - v) / 2.0
                    best_thr = t if t < vn else v
        if best_f < 0:
            continue

        # stable partition: rows going left keep their order, then rows going right
        nl = 0
        for q in range(lo, hi):
            if X[rows[q], best_f] <= best_thr:
                nl += 1
        a = 0
        b = nl
        for q in range(lo, hi):
            r = rows[q]
            if X[r, best_f] <= best_thr:
                scratch[a] = r
                a += 1
            else:
                scratch[b] = r
                b += 1
        for q in range(nn):
            rows[lo + q] = scratch[q]
            goes_left[scratch[q]] = q < nl
        for f in range(p):
            srow = sidx[f]
            a = 0
            b = nl
            for q in range(lo, hi):
                r = srow[q]
                if goes_left[r]:
                    scratch[a] = r
                    a += 1
                else:
                    scratch[b] = r
                    b += 1
            for q in range(nn):
                srow[lo + q] = scratch[q]

        # impurity decrease for importance
        wl = 0.0
        wr = 0.0
        sl = 0.0
        sr = 0.0
        s2l = 0.0
        s2r = 0.0
        lcounts[:] = 0.0
        rc = np.zeros(n_classes)
        for q in range(lo, hi):
            r = rows[q]
            if q < lo + nl:
                wl += w[r]
                if is_clf:
                    lcounts[y_cls[r]] += w[r]
                else:
                    sl += w[r] * y_reg[r]
                    s2l += w[r] * y_reg[r] * y_reg[r]
            else:
                wr += w[r]
                if is_clf:
                    rc[y_cls[r]] += w[r]
                else:
                    sr += w[r] * y_reg[r]
                    s2r += w[r] * y_reg[r] * y_reg[r]
        if is_clf:
            il = _impurity_from(1, counts, lcounts, wl, crit, terms)
            ir = _impurity_from(0, rc, rc, wr, crit, terms)
        else:
            il = max(s2l / wl - (sl / wl) ** 2, 0.0)
            ir = max(s2r / wr - (sr / wr) ** 2, 0.0)
        dec = wsum * node_imp - wl * il - wr * ir
        if dec > 0.0:
            importance[best_f] += dec / w_root

        lnode = base + n_nodes
        rnode = lnode + 1
        n_nodes += 2
        feat[node] = best_f
        thr[node] = best_thr
        left[node] = lnode
        right[node] = rnode
        # push right first so the left subtree is numbered first
        st_node[top] = rnode
        st_lo[top] = lo + nl
        st_hi[top] = hi
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lnode
        st_lo[top] = lo
        st_hi[top] = lo + nl
        st_depth[top] = depth + 1
        top += 1
    return n_nodes


@njit(cache=True, nogil=True)
def apply_tree(X, root, feat, thr, left, right):
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = root
        while feat[node] >= 0:
            if X[i, feat[node]] <= thr[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True, nogil=True)
def fit_forest(X, fids, y, n_classes, n_trees, max_depth, n_cand, crit, seed):
    n, p = X.shape
    by_id = np.argsort(fids)
    gorder = column_order(X)
    per_tree = 2 * n + 1
    total = n_trees * per_tree
    feat = np.empty(total, np.int64)
    thr = np.empty(total)
    left = np.empty(total, np.int64)
    right = np.empty(total, np.int64)
    value = np.zeros((total, n_classes))
    roots = np.empty(n_trees, np.int64)
    importance = np.zeros((n_trees, p))
    y_reg = np.empty(0)
    master = splitmix(np.uint64(seed))
    used = 0
    for t in range(n_trees):
        tree_key = mix(master, np.uint64(t))
        w = np.zeros(n)
        for i in range(n):
            j = int(uniform(tree_key, i) * n)
            if j >= n:
                j = n - 1
            w[j] += 1.0
        m = 0
        for i in range(n):
            if w[i] > 0:
                m += 1
        rows = np.empty(m, np.int64)
        m = 0
        for i in range(n):
            if w[i] > 0:
                rows[m] = i
                m += 1
        roots[t] = used
        k = grow_tree(X, fids, by_id, gorder, y, y_reg, w, rows, n_classes, crit, max_depth, n_cand,
                      mix(tree_key, np.uint64(0xC0FFEE)), feat, thr, left, right, value,
                      importance[t], used, float(n))
        used += k
    return roots, feat[:used], thr[:used], left[:used], right[:used], value[:used], importance


@njit(cache=True, nogil=True)
def forest_votes(X, roots, feat, thr, left, right, value, n_classes):
    votes = np.zeros((X.shape[0], n_classes), np.int64)
    for t in range(roots.shape[0]):
        leaves = apply_tree(X, roots[t], feat, thr, left, right)
        for i in range(X.shape[0]):
            leaf = leaves[i]
            best = 0
            for c in range(1, n_classes):
                if value[leaf, c] > value[leaf, best]:
                    best = c
            votes[i, best] += 1
    return votes


@njit(cache=True, nogil=True)
def _softmax_rows(F):
    P = np.empty_like(F)
    for i in range(F.shape[0]):
        mx = F[i].max()
        s = 0.0
        for c in range(F.shape[1]):
            P[i, c] = np.exp(F[i, c] - mx)
            s += P[i, c]
        for c in range(F.shape[1]):
            P[i, c] /= s
    return P


@njit(cache=True, nogil=True)
def log_loss(F, y):
    total = 0.0
    for i in range(F.shape[0]):
        mx = F[i].max()
        s = 0.0
        for c in range(F.shape[1]):
            s += np.exp(F[i, c] - mx)
        total += mx + np.log(s) - F[i, y[i]]
    return total / F.shape[0]


@njit(cache=True, nogil=True)
def fit_boosting(X, fids, y, n_classes, n_iter, max_depth, crit, subsample, learning_rate, seed, init):
    """Multiclass gradient boosting on softmax residuals.

    Each iteration draws a subsample without replacement, then fits one
    regression tree per class to ``onehot - softmax(F)`` on those rows. Leaf
    values are residual means; every row's score moves by ``learning_rate``
    times its leaf value. Returns trees plus the training log-loss after each
    iteration.
    """
    n, p = X.shape
    by_id = np.argsort(fids)
    gorder = column_order(X)
    n_sub = int(np.floor(subsample * n + 0.5))
    if n_sub < 1:
        n_sub = 1
    if n_sub > n:
        n_sub = n
    per_tree = 2 * n_sub + 1
    n_trees = n_iter * n_classes
    total = max(n_trees * per_tree, 1)
    feat = np.empty(total, np.int64)
    thr = np.empty(total)
    left = np.empty(total, np.int64)
    right = np.empty(total, np.int64)
    value = np.zeros((total, 1))
    roots = np.empty(n_trees, np.int64)
    importance = np.zeros((max(n_trees, 1), p))
    losses = np.empty(n_iter)
    y_dummy = np.zeros(n, np.int64)

    F = np.empty((n, n_classes))
    for i in range(n):
        F[i] = init
    master = splitmix(np.uint64(seed))
    used = 0
    perm = np.empty(n, np.int64)
    for it in range(n_iter):
        it_key = mix(master, np.uint64(it))
        # partial Fisher-Yates for the subsample
        for i in range(n):
            perm[i] = i
        for i in range(n_sub):
            j = i + int(uniform(it_key, i) * (n - i))
            if j >= n:
                j = n - 1
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
        rows_sorted = np.sort(perm[:n_sub])
        w = np.zeros(n)
        for i in range(n_sub):
            w[rows_sorted[i]] = 1.0
        P = _softmax_rows(F)
        for c in range(n_classes):
            resid = np.empty(n)
            for i in range(n):
                resid[i] = (1.0 if y[i] == c else 0.0) - P[i, c]
            t = it * n_classes + c
            roots[t] = used
            rows = rows_sorted.copy()
            k = grow_tree(X, fids, by_id, gorder, y_dummy, resid, w, rows, 1, crit, max_depth, p,
                          mix(it_key, np.uint64(c + 1)), feat, thr, left, right, value,
                          importance[t], used, float(n_sub))
            leaves = apply_tree(X, used, feat, thr, left, right)
            for i in range(n):
                F[i, c] += learning_rate * value[leaves[i], 0]
            used += k
        losses[it] = log_loss(F, y)
    return roots, feat[:used], thr[:used], left[:used], right[:used], value[:used], importance[:n_trees], losses


@njit(cache=True, nogil=True)
def boosting_scores(X, init, roots, feat, thr, left, right, value, n_classes, learning_rate):
    F = np.empty((X.shape[0], n_classes))
    for i in range(X.shape[0]):
        F[i] = init
    for t in range(roots.shape[0]):
        c = t % n_classes
        leaves = apply_tree(X, roots[t], feat, thr, left, right)
        for i in range(X.shape[0]):
            F[i, c] += learning_rate * value[leaves[i], 0]
    return F
