# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see _pykernels for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, INFINITY

cnp.import_array()


def pricing_block(Py_ssize_t m, Py_ssize_t n):
    return max(1, min(m, 8192 // max(n, 1) + 1))


cdef void _northwest(double[::1] supply, double[::1] demand, long long[::1] bi,
                     long long[::1] bj, double[::1] bf):
    cdef Py_ssize_t m = supply.shape[0], n = demand.shape[0]
    cdef double[::1] s = np.array(supply, dtype=np.float64)
    cdef double[::1] d = np.array(demand, dtype=np.float64)
    cdef Py_ssize_t i = 0, j = 0, k
    cdef double x
    for k in range(m + n - 1):
        x = s[i] if s[i] < d[j] else d[j]
        bi[k] = i
        bj[k] = j
        bf[k] = x
        s[i] -= x
        d[j] -= x
        if (s[i] <= d[j] and i < m - 1) or j == n - 1:
            i += 1
        else:
            j += 1


cdef int _tree(Py_ssize_t m, Py_ssize_t n, long long[::1] bi, long long[::1] bj,
               double[:, ::1] C, double[::1] pot, long long[::1] parent,
               long long[::1] pedge, long long[::1] depth, long long[::1] start,
               long long[::1] adj, long long[::1] fill, long long[::1] queue,
               char[::1] seen):
    cdef Py_ssize_t N = m + n, nb = m + n - 1, k, v, w, r, c, head, tail, e
    for v in range(N + 1):
        start[v] = 0
    for k in range(nb):
        start[bi[k] + 1] += 1
        start[m + bj[k] + 1] += 1
    for v in range(N):
        start[v + 1] += start[v]
    for v in range(N):
        fill[v] = start[v]
    # adjacency lists in increasing edge order, as in the reference
    for k in range(nb):
        r = bi[k]
        c = m + bj[k]
        adj[fill[r]] = k
        fill[r] += 1
        adj[fill[c]] = k
        fill[c] += 1
    for v in range(N):
        seen[v] = 0
        parent[v] = -1
        pedge[v] = -1
    pot[0] = 0.0
    depth[0] = 0
    seen[0] = 1
    queue[0] = 0
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        for e in range(start[v], start[v + 1]):
            k = adj[e]
            r = bi[k]
            c = m + bj[k]
            w = c if v == r else r
            if seen[w]:
                continue
            seen[w] = 1
            parent[w] = v
            pedge[w] = k
            depth[w] = depth[v] + 1
            pot[w] = C[bi[k], bj[k]] - pot[v]
            queue[tail] = w
            tail += 1
    return 0 if head == N else -1


def transport_simplex(C_in, supply_in, demand_in, long long max_iter, double tol):
    cdef double[:, ::1] C = np.ascontiguousarray(C_in, dtype=np.float64)
    cdef double[::1] supply = np.ascontiguousarray(supply_in, dtype=np.float64)
    cdef double[::1] demand = np.ascontiguousarray(demand_in, dtype=np.float64)
    cdef Py_ssize_t m = C.shape[0], n = C.shape[1], N = m + n, nb = m + n - 1
    bi_a = np.empty(nb, dtype=np.int64)
    bj_a = np.empty(nb, dtype=np.int64)
    bf_a = np.empty(nb, dtype=np.float64)
    cdef long long[::1] bi = bi_a
    cdef long long[::1] bj = bj_a
    cdef double[::1] bf = bf_a
    _northwest(supply, demand, bi, bj, bf)
    pot_a = np.zeros(N)
    cdef double[::1] pot = pot_a
    cdef long long[::1] parent = np.empty(N, dtype=np.int64)
    cdef long long[::1] pedge = np.empty(N, dtype=np.int64)
    cdef long long[::1] depth = np.empty(N, dtype=np.int64)
    cdef long long[::1] start = np.empty(N + 1, dtype=np.int64)
    cdef long long[::1] adj = np.empty(2 * nb, dtype=np.int64)
    cdef long long[::1] fill = np.empty(N, dtype=np.int64)
    cdef long long[::1] queue = np.empty(N, dtype=np.int64)
    cdef char[::1] seen = np.empty(N, dtype=np.int8)
    cdef long long[::1] path = np.empty(N, dtype=np.int64)
    cdef long long[::1] up_a = np.empty(N, dtype=np.int64)
    cdef Py_ssize_t K = pricing_block(m, n)
    cdef Py_ssize_t nblocks = (m + K - 1) // K
    cdef Py_ssize_t blk = 0, it = 0, b_, r0, r1, i, j, ei, ej, x, y, na, nbp, L, pos, leave, k
    cdef double best, red, theta
    while True:
        if _tree(m, n, bi, bj, C, pot, parent, pedge, depth, start, adj, fill, queue, seen) != 0:
            raise RuntimeError("basis is not a spanning tree")
        ei = -1
        for b_ in range(nblocks):
            r0 = blk * K
            r1 = r0 + K
            if r1 > m:
                r1 = m
            best = INFINITY
            for i in range(r0, r1):
                for j in range(n):
                    red = C[i, j] - pot[i] - pot[m + j]
                    if red < best:
                        best = red
                        ei = i
                        ej = j
            blk = (blk + 1) % nblocks
            if best < -tol:
                break
            ei = -1
        if ei < 0:
            return bi_a, bj_a, bf_a, pot_a[:m].copy(), pot_a[m:].copy(), it
        it += 1
        if it > max_iter:
            raise RuntimeError(f"transportation simplex exceeded {max_iter} pivots")
        x = m + ej
        y = ei
        L = 0
        na = 0
        while depth[x] > depth[y]:
            path[L] = pedge[x]
            L += 1
            x = parent[x]
        while depth[y] > depth[x]:
            up_a[na] = pedge[y]
            na += 1
            y = parent[y]
        while x != y:
            path[L] = pedge[x]
            L += 1
            x = parent[x]
            up_a[na] = pedge[y]
            na += 1
            y = parent[y]
        for k in range(na):
            path[L] = up_a[na - 1 - k]
            L += 1
        theta = INFINITY
        leave = -1
        for pos in range(0, L, 2):
            if bf[path[pos]] < theta:
                theta = bf[path[pos]]
                leave = pos
        for pos in range(L):
            if pos % 2 == 0:
                bf[path[pos]] -= theta
            else:
                bf[path[pos]] += theta
        k = path[leave]
        bi[k] = ei
        bj[k] = ej
        bf[k] = theta


def ag_gaps(eigs_in, double a):
    cdef double[:, ::1] E = np.ascontiguousarray(np.atleast_2d(eigs_in), dtype=np.float64)
    cdef Py_ssize_t rows = E.shape[0], n = E.shape[1], i, j
    out_a = np.empty(rows)
    cdef double[::1] out = out_a
    cdef double tr, det
    for i in range(rows):
        tr = 0.0
        det = 1.0
        for j in range(n):
            tr += E[i, j]
            det *= E[i, j]
        out[i] = (tr + a - n) / a - pow(det, 1.0 / a)
    return out_a
