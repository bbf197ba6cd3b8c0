"""Compiled inner loops for Vietoris-Rips persistence.

All routines are nopython + nogil so diagrams can be computed from a thread
pool without contention.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def enumerate_edges(dm, cap):
    n = dm.shape[0]
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if dm[i, j] <= cap:
                count += 1
    ei = np.empty(count, np.int32)
    ej = np.empty(count, np.int32)
    ed = np.empty(count, np.float64)
    c = 0
    for i in range(n):
        for j in range(i + 1, n):
            if dm[i, j] <= cap:
                ei[c] = i
                ej[c] = j
                ed[c] = dm[i, j]
                c += 1
    return ei, ej, ed


@njit(cache=True, nogil=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, nogil=True)
def union_find_h0(n, ei, ej, ed, vertex_birth):
    """Elder-rule H0 over edges given in filtration order.

    Returns (births, deaths, negative) where ``negative[e]`` marks edges that
    merged two components. Ties in birth kill the component with the larger
    root index.
    """
    parent = np.arange(n)
    oldest = np.arange(n)  # representative vertex carrying the component birth
    births = np.empty(max(n - 1, 0), np.float64)
    deaths = np.empty(max(n - 1, 0), np.float64)
    negative = np.zeros(ei.shape[0], np.bool_)
    m = 0
    for e in range(ei.shape[0]):
        ri = _find(parent, ei[e])
        rj = _find(parent, ej[e])
        if ri == rj:
            continue
        oi = oldest[ri]
        oj = oldest[rj]
        bi = vertex_birth[oi]
        bj = vertex_birth[oj]
        # younger component dies
        if bi < bj or (bi == bj and oi < oj):
            survivor, victim = ri, rj
            births[m] = bj
        else:
            survivor, victim = rj, ri
            births[m] = bi
        deaths[m] = ed[e]
        m += 1
        parent[victim] = survivor
        negative[e] = True
    return births[:m], deaths[:m], negative


@njit(cache=True, nogil=True)
def sorted_triangles(vrank, n_values):
    """Triangles with every edge inside the cap, in filtration order.

    ``vrank[i, j]`` is the dense rank of d(i, j) among the admitted edge
    lengths, or -1 if the edge exceeds the cap. A triangle's diameter is the
    value of its largest-rank edge, so a counting sort over that rank, fed in
    lexicographic order, yields the (diameter, lexicographic) order directly.
    """
    n = vrank.shape[0]
    counts = np.zeros(n_values + 1, np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            rij = vrank[i, j]
            if rij < 0:
                continue
            for k in range(j + 1, n):
                rik = vrank[i, k]
                rjk = vrank[j, k]
                if rik < 0 or rjk < 0:
                    continue
                r = max(rij, max(rik, rjk))
                counts[r + 1] += 1
    starts = np.cumsum(counts)
    fill = starts[:-1].copy()
    tri = np.empty((starts[-1], 3), np.int32)
    key = np.empty(starts[-1], np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            rij = vrank[i, j]
            if rij < 0:
                continue
            for k in range(j + 1, n):
                rik = vrank[i, k]
                rjk = vrank[j, k]
                if rik < 0 or rjk < 0:
                    continue
                r = max(rij, max(rik, rjk))
                pos = fill[r]
                fill[r] += 1
                tri[pos, 0] = i
                tri[pos, 1] = j
                tri[pos, 2] = k
                key[pos] = r
    return tri, key


@njit(cache=True, nogil=True)
def coboundary_csr(n, ei, ej, tri):
    """Edge -> incident triangle ranks, each row ascending.

    ``ei``/``ej`` and ``tri`` must already be in filtration order; a triangle's
    rank is its row index in ``tri``.
    """
    n_edges = ei.shape[0]
    edge_id = np.full((n, n), -1, np.int32)
    for e in range(n_edges):
        edge_id[ei[e], ej[e]] = e
    counts = np.zeros(n_edges + 1, np.int64)
    for t in range(tri.shape[0]):
        a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
        counts[edge_id[a, b] + 1] += 1
        counts[edge_id[a, c] + 1] += 1
        counts[edge_id[b, c] + 1] += 1
    indptr = np.cumsum(counts)
    fill = indptr[:-1].copy()
    indices = np.empty(indptr[-1], np.int64)
    for t in range(tri.shape[0]):
        a, b, c = tri[t, 0], tri[t, 1], tri[t, 2]
        for e in (edge_id[a, b], edge_id[a, c], edge_id[b, c]):
            indices[fill[e]] = t
            fill[e] += 1
    return indptr, indices


@njit(cache=True, nogil=True)
def _heap_push(heap, size, value):
    i = size
    heap[i] = value
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent] <= value:
            break
        heap[i] = heap[parent]
        i = parent
    heap[i] = value
    return size + 1


@njit(cache=True, nogil=True)
def _heap_pop(heap, size):
    top = heap[0]
    size -= 1
    last = heap[size]
    i = 0
    while True:
        child = 2 * i + 1
        if child >= size:
            break
        if child + 1 < size and heap[child + 1] < heap[child]:
            child += 1
        if heap[child] >= last:
            break
        heap[i] = heap[child]
        i = child
    if size > 0:
        heap[i] = last
    return top, size


@njit(cache=True, nogil=True)
def _heap_pivot(heap, size):
    """Smallest entry with odd multiplicity, or -1; cancelled pairs are discarded."""
    while size > 0:
        top, size = _heap_pop(heap, size)
        if size > 0 and heap[0] == top:
            _, size = _heap_pop(heap, size)
            continue
        size = _heap_push(heap, size, top)
        return top, size
    return -1, size


@njit(cache=True, nogil=True)
def _grow(arr, needed):
    if needed <= arr.shape[0]:
        return arr
    out = np.empty(max(2 * arr.shape[0], needed), arr.dtype)
    out[: arr.shape[0]] = arr
    return out


@njit(cache=True, nogil=True)
def reduce_h1(ed, negative, indptr, indices, tri_diam):
    """Reduce the edge/triangle incidence matrix over GF(2).

    Columns are edge coboundaries taken in reverse filtration order; rows are
    triangles in reverse filtration order, so a column's pivot is its
    lowest-rank triangle. This is the anti-transpose of the triangle boundary
    matrix, which has the same persistence pairs. Edges already paired in H0
    are cleared (their columns would reduce to zero).

    Reduced columns fill in badly, so only the reduction matrix V (which edges
    were summed) is stored. The working column is a min-heap of triangle ranks
    with lazy cancellation, popped only as far as the pivot.

    Returns (births, deaths, essential_births).
    """
    n_edges = ed.shape[0]
    n_tri = tri_diam.shape[0]
    owner = np.full(n_tri, -1, np.int64)  # triangle rank -> slot
    v_start = np.empty(n_edges + 1, np.int64)
    v_store = np.empty(n_edges + 16, np.int64)
    v_used = 0
    slots = 0
    v_start[0] = 0

    heap = np.empty(1024, np.int64)
    vcol = np.empty(64, np.int64)

    births = np.empty(n_edges, np.float64)
    deaths = np.empty(n_edges, np.float64)
    essential = np.empty(n_edges, np.float64)
    n_pairs = 0
    n_ess = 0

    for e in range(n_edges - 1, -1, -1):
        if negative[e]:
            continue
        lo = indptr[e]
        hi = indptr[e + 1]
        if hi == lo:
            essential[n_ess] = ed[e]
            n_ess += 1
            continue
        pivot = indices[lo]
        nv = 1
        vcol[0] = e
        if owner[pivot] >= 0:
            size = 0
            heap = _grow(heap, hi - lo)
            for q in range(lo, hi):
                size = _heap_push(heap, size, indices[q])
            while True:
                pivot, size = _heap_pivot(heap, size)
                if pivot < 0:
                    break
                slot = owner[pivot]
                if slot < 0:
                    break
                for q in range(v_start[slot], v_start[slot + 1]):
                    f = v_store[q]
                    vcol = _grow(vcol, nv + 1)
                    vcol[nv] = f
                    nv += 1
                    heap = _grow(heap, size + indptr[f + 1] - indptr[f])
                    for r in range(indptr[f], indptr[f + 1]):
                        size = _heap_push(heap, size, indices[r])
            if pivot < 0:
                essential[n_ess] = ed[e]
                n_ess += 1
                continue
            # V over GF(2): drop edges that were added an even number of times
            vs = np.sort(vcol[:nv])
            m = 0
            q = 0
            while q < nv:
                if q + 1 < nv and vs[q] == vs[q + 1]:
                    q += 2
                    continue
                vcol[m] = vs[q]
                m += 1
                q += 1
            nv = m
        v_store = _grow(v_store, v_used + nv)
        v_store[v_used:v_used + nv] = vcol[:nv]
        v_used += nv
        owner[pivot] = slots
        slots += 1
        v_start[slots] = v_used
        births[n_pairs] = ed[e]
        deaths[n_pairs] = tri_diam[pivot]
        n_pairs += 1
    return births[:n_pairs], deaths[:n_pairs], essential[:n_ess]
