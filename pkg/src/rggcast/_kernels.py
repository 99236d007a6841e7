"""Numba kernels for the hot loops: neighbor search, union-find, threshold sweeps.

Everything here operates on flat numpy arrays so the jitted code stays simple
and cacheable. The public modules wrap these in typed containers.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def cell_list_pairs(xs, ys, order, cell_start, cell_count, nx, ny, r2, period):
    """Enumerate all point pairs at squared distance <= r2 using a cell list.

    Points are pre-bucketed into a grid of cells with side >= r, flattened as
    cell = cx * ny + cy. ``order`` lists point indices grouped by cell,
    ``cell_start``/``cell_count`` delimit each group. Each point is compared
    only against points in its own cell and the 8 surrounding cells; scanning
    5 of the 9 offsets (self plus 4 forward neighbors) visits every unordered
    pair exactly once. ``period > 0`` wraps both the grid and the distance
    computation (torus mode); requires nx == ny == period when active.
    """
    cap = 1 << 16
    eu = np.empty(cap, np.int64)
    ev = np.empty(cap, np.int64)
    ne = 0
    offs_x = (0, 1, 0, 1, 1)
    offs_y = (0, 0, 1, 1, -1)
    for cx in range(nx):
        for cy in range(ny):
            c = cx * ny + cy
            n0 = cell_count[c]
            if n0 == 0:
                continue
            s0 = cell_start[c]
            for k in range(5):
                qx = cx + offs_x[k]
                qy = cy + offs_y[k]
                if period > 0.0:
                    if qx >= nx:
                        qx -= nx
                    if qy >= ny:
                        qy -= ny
                    elif qy < 0:
                        qy += ny
                elif qx < 0 or qx >= nx or qy < 0 or qy >= ny:
                    continue
                q = qx * ny + qy
                n1 = cell_count[q]
                if n1 == 0:
                    continue
                s1 = cell_start[q]
                if k == 0:
                    for a in range(n0):
                        ia = order[s0 + a]
                        for b in range(a + 1, n0):
                            ib = order[s0 + b]
                            dx = xs[ia] - xs[ib]
                            dy = ys[ia] - ys[ib]
                            if period > 0.0:
                                if dx > 0.5 * period:
                                    dx -= period
                                elif dx < -0.5 * period:
                                    dx += period
                                if dy > 0.5 * period:
                                    dy -= period
                                elif dy < -0.5 * period:
                                    dy += period
                            if dx * dx + dy * dy <= r2:
                                if ne >= cap:
                                    cap *= 2
                                    eu2 = np.empty(cap, np.int64)
                                    eu2[:ne] = eu[:ne]
                                    eu = eu2
                                    ev2 = np.empty(cap, np.int64)
                                    ev2[:ne] = ev[:ne]
                                    ev = ev2
                                eu[ne] = ia
                                ev[ne] = ib
                                ne += 1
                else:
                    for a in range(n0):
                        ia = order[s0 + a]
                        for b in range(n1):
                            ib = order[s1 + b]
                            dx = xs[ia] - xs[ib]
                            dy = ys[ia] - ys[ib]
                            if period > 0.0:
                                if dx > 0.5 * period:
                                    dx -= period
                                elif dx < -0.5 * period:
                                    dx += period
                                if dy > 0.5 * period:
                                    dy -= period
                                elif dy < -0.5 * period:
                                    dy += period
                            if dx * dx + dy * dy <= r2:
                                if ne >= cap:
                                    cap *= 2
                                    eu2 = np.empty(cap, np.int64)
                                    eu2[:ne] = eu[:ne]
                                    eu = eu2
                                    ev2 = np.empty(cap, np.int64)
                                    ev2[:ne] = ev[:ne]
                                    ev = ev2
                                eu[ne] = ia
                                ev[ne] = ib
                                ne += 1
    return eu[:ne].copy(), ev[:ne].copy()


@njit(cache=True)
def union_find_roots(n, eu, ev, active):
    """Canonical component root per point, via union-find over masked edges.

    Edges with an inactive endpoint are skipped. Union by size with path
    halving; the returned array maps every point (active or not) to the root
    index of its component, inactive points remain their own roots.
    """
    parent = np.arange(n)
    size = np.ones(n, np.int64)
    for e in range(eu.size):
        a = eu[e]
        b = ev[e]
        if not (active[a] and active[b]):
            continue
        ra = a
        while parent[ra] != ra:
            parent[ra] = parent[parent[ra]]
            ra = parent[ra]
        rb = b
        while parent[rb] != rb:
            parent[rb] = parent[parent[rb]]
            rb = parent[rb]
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
    for i in range(n):
        r = i
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        parent[i] = r
    return parent


@njit(cache=True)
def canonicalize_roots(roots):
    """Relabel each component by its smallest member index."""
    n = roots.size
    rep = np.full(n, -1, np.int64)
    for i in range(n):
        r = roots[i]
        if rep[r] == -1:
            rep[r] = i
    out = np.empty(n, np.int64)
    for i in range(n):
        out[i] = rep[roots[i]]
    return out


@njit(cache=True)
def neighbor_or(mask, indptr, indices):
    """mask OR (union of neighbors of mask), i.e. the extended set of mask."""
    out = mask.copy()
    for i in range(mask.size):
        if mask[i]:
            for jj in range(indptr[i], indptr[i + 1]):
                out[indices[jj]] = True
    return out


@njit(cache=True)
def transmit_thresholds(n, u, order, indptr, indices, src):
    """Per-point critical forwarding probability for joining the source cluster.

    Under common random numbers a point v transmits at probability p exactly
    when u[v] < p and v is connected to the source through points with
    u < p. Activating points in increasing order of u and merging clusters
    incrementally yields, for each point, the activation level at which its
    cluster first touches the source cluster. The returned t satisfies:
    v transmits at forwarding probability p  iff  t[v] < p, for every p.

    The source is active from the start with t[src] = -1. Points never joining
    the source cluster keep t = +inf. Cluster membership lists are kept as
    linked lists so each point is assigned its threshold exactly once.
    """
    tstar = np.full(n, np.inf)
    parent = np.arange(n)
    size = np.ones(n, np.int64)
    active = np.zeros(n, np.bool_)
    head = np.arange(n)
    tail = np.arange(n)
    nxt = np.full(n, -1, np.int64)
    active[src] = True
    tstar[src] = -1.0
    src_root = src
    for oi in range(order.size):
        v = order[oi]
        if v == src:
            continue
        active[v] = True
        uv = u[v]
        for jj in range(indptr[v], indptr[v + 1]):
            w = indices[jj]
            if not active[w]:
                continue
            ra = v
            while parent[ra] != ra:
                parent[ra] = parent[parent[ra]]
                ra = parent[ra]
            rb = w
            while parent[rb] != rb:
                parent[rb] = parent[parent[rb]]
                rb = parent[rb]
            if ra == rb:
                continue
            if ra == src_root or rb == src_root:
                ro = rb if ra == src_root else ra
                x = head[ro]
                while x != -1:
                    tstar[x] = uv
                    x = nxt[x]
                parent[ro] = src_root
                size[src_root] += size[ro]
            else:
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                parent[rb] = ra
                size[ra] += size[rb]
                nxt[tail[ra]] = head[rb]
                tail[ra] = tail[rb]
    return tstar


@njit(cache=True)
def receive_thresholds(tstar, indptr, indices):
    """Per-point critical probability for receiving a packet.

    A point receives as soon as it transmits itself or any full-graph
    neighbor transmits: r[v] = min(t[v], min over neighbors w of t[w]).
    """
    r = tstar.copy()
    for i in range(tstar.size):
        for jj in range(indptr[i], indptr[i + 1]):
            w = indices[jj]
            if tstar[w] < r[i]:
                r[i] = tstar[w]
    return r


@njit(cache=True)
def prefix_kth_smallest(vals, k, n_values):
    """Running k-th order statistic over packet prefixes.

    vals[i, j] is point i's reception threshold for packet j (0-based).
    For each requested prefix length n in n_values (ascending, n >= k),
    returns the k-th smallest of vals[i, :n]: the critical probability at
    which point i has received at least k of the first n packets.
    """
    n_points, n_max = vals.shape
    out = np.empty((n_points, n_values.size), np.float64)
    buf = np.empty(k, np.float64)
    for i in range(n_points):
        nv = 0
        m = 0
        for j in range(n_max):
            x = vals[i, j]
            if m < k:
                pos = m
                while pos > 0 and buf[pos - 1] > x:
                    buf[pos] = buf[pos - 1]
                    pos -= 1
                buf[pos] = x
                m += 1
            elif x < buf[k - 1]:
                pos = k - 1
                while pos > 0 and buf[pos - 1] > x:
                    buf[pos] = buf[pos - 1]
                    pos -= 1
                buf[pos] = x
            if nv < n_values.size and j + 1 == n_values[nv]:
                out[i, nv] = buf[k - 1] if m >= k else np.inf
                nv += 1
    return out
