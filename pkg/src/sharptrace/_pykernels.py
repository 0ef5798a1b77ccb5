"""Pure-Python reference implementations of the compiled kernels.

Both back ends follow the same pivoting rules step for step, so they
produce identical bases and flows on the same input.
"""

from __future__ import annotations

import numpy as np

__all__ = ["transport_simplex", "pricing_block", "ag_gaps"]


def pricing_block(m: int, n: int) -> int:
    """Rows per pricing block (about 8192 cells)."""
    return max(1, min(m, 8192 // max(n, 1) + 1))


def _northwest(supply, demand):
    m, n = len(supply), len(demand)
    bi = np.empty(m + n - 1, dtype=np.int64)
    bj = np.empty(m + n - 1, dtype=np.int64)
    bf = np.empty(m + n - 1)
    s = supply.copy()
    d = demand.copy()
    i = j = 0
    for k in range(m + n - 1):
        x = min(s[i], d[j])
        bi[k], bj[k], bf[k] = i, j, x
        s[i] -= x
        d[j] -= x
        # on ties advance the row; the next cell in column j carries zero flow
        if (s[i] <= d[j] and i < m - 1) or j == n - 1:
            i += 1
        else:
            j += 1
    return bi, bj, bf


def _tree(m, n, bi, bj, C):
    """BFS over the basis tree from row 0: potentials, parent node and parent edge."""
    N = m + n
    adj = [[] for _ in range(N)]
    for k in range(len(bi)):
        adj[bi[k]].append(k)
        adj[m + bj[k]].append(k)
    pot = np.zeros(N)
    parent = np.full(N, -1, dtype=np.int64)
    pedge = np.full(N, -1, dtype=np.int64)
    depth = np.zeros(N, dtype=np.int64)
    seen = np.zeros(N, dtype=bool)
    seen[0] = True
    queue = [0]
    head = 0
    while head < len(queue):
        v = queue[head]
        head += 1
        for k in adj[v]:
            r, c = bi[k], m + bj[k]
            w = c if v == r else r
            if seen[w]:
                continue
            seen[w] = True
            parent[w] = v
            pedge[w] = k
            depth[w] = depth[v] + 1
            # u_i + v_j = C_ij
            pot[w] = C[bi[k], bj[k]] - pot[v]
            queue.append(w)
    if head != N:
        raise RuntimeError("basis is not a spanning tree")
    return pot, parent, pedge, depth


def transport_simplex(C, supply, demand, max_iter: int, tol: float):
    """Balanced transportation problem min <C, X> by the primal simplex.

    Northwest-corner start, block Dantzig pricing, tree cycle pivots.
    Returns (rows, cols, flows, u, v, iterations).
    """
    C = np.ascontiguousarray(C, dtype=float)
    supply = np.asarray(supply, dtype=float)
    demand = np.asarray(demand, dtype=float)
    m, n = C.shape
    bi, bj, bf = _northwest(supply, demand)
    K = pricing_block(m, n)
    nblocks = (m + K - 1) // K
    blk = 0
    it = 0
    while True:
        pot, parent, pedge, depth = _tree(m, n, bi, bj, C)
        u, v = pot[:m], pot[m:]
        enter = None
        for _ in range(nblocks):
            r0 = blk * K
            r1 = min(m, r0 + K)
            red = C[r0:r1] - u[r0:r1, None] - v[None, :]
            flat = int(np.argmin(red))
            blk = (blk + 1) % nblocks
            if red.flat[flat] < -tol:
                enter = (r0 + flat // n, flat % n)
                break
        if enter is None:
            return bi, bj, bf, u.copy(), v.copy(), it
        it += 1
        if it > max_iter:
            raise RuntimeError(f"transportation simplex exceeded {max_iter} pivots")
        # path in the tree from column node b up/down to row node a
        a, b = enter[0], m + enter[1]
        up_b, up_a = [], []
        x, y = b, a
        while depth[x] > depth[y]:
            up_b.append(pedge[x])
            x = parent[x]
        while depth[y] > depth[x]:
            up_a.append(pedge[y])
            y = parent[y]
        while x != y:
            up_b.append(pedge[x])
            x = parent[x]
            up_a.append(pedge[y])
            y = parent[y]
        path = up_b + up_a[::-1]
        # even positions lose flow, odd positions gain
        theta = np.inf
        leave = -1
        for pos in range(0, len(path), 2):
            k = path[pos]
            if bf[k] < theta:
                theta = bf[k]
                leave = pos
        for pos, k in enumerate(path):
            bf[k] += -theta if pos % 2 == 0 else theta
        k = path[leave]
        bi[k], bj[k], bf[k] = enter[0], enter[1], theta


def ag_gaps(eigs, a: float):
    """(tr M + a - n)/a - det(M)^(1/a) for rows of nonnegative eigenvalues."""
    eigs = np.atleast_2d(np.asarray(eigs, dtype=float))
    n = eigs.shape[1]
    det = np.prod(eigs, axis=1)
    return (eigs.sum(axis=1) + a - n) / a - det ** (1.0 / a)
