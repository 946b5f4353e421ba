"""Numba kernels for the per-point hot paths.

All neighborhood sums use Neumaier compensation and run in a fixed order
(grid-cell order, then ascending point index inside a cell), and queries are
split into chunks whose boundaries do not depend on the worker count. Output
is therefore bit-identical for any number of threads.
"""

import numpy as np
from numba import njit, prange

# A neighborhood whose middle covariance eigenvalue is below this fraction of
# the largest is treated as collinear.
DEGENERATE_RTOL = 1e-12

# Relative widening of the cell search window so that floating-point rounding
# in the cell assignment can never drop a point that passes the distance test.
_WINDOW_MARGIN = 1e-12

CHUNK = 256

_NAN = np.nan


@njit(cache=True, inline="always")
def _neumaier(s, c, x):
    t = s + x
    keep = abs(s) >= abs(x)
    big = s if keep else x
    small = x if keep else s
    return t, c + ((big - t) + small)


@njit(cache=True)
def jacobi_eig3(a00, a01, a02, a11, a12, a22):
    """Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi sweeps.

    Returns ``(w, V)`` with eigenvalues ascending and eigenvectors as columns.
    Equal eigenvalues keep their original diagonal order.
    """
    A = np.empty((3, 3))
    V = np.eye(3)
    scale = max(abs(a00), abs(a01), abs(a02), abs(a11), abs(a12), abs(a22))
    if scale == 0.0 or not np.isfinite(scale):
        return np.zeros(3), V
    A[0, 0] = a00 / scale
    A[1, 1] = a11 / scale
    A[2, 2] = a22 / scale
    A[0, 1] = A[1, 0] = a01 / scale
    A[0, 2] = A[2, 0] = a02 / scale
    A[1, 2] = A[2, 1] = a12 / scale

    for sweep in range(64):
        if A[0, 1] == 0.0 and A[0, 2] == 0.0 and A[1, 2] == 0.0:
            break
        for pair in range(3):
            if pair == 0:
                p, q, r = 0, 1, 2
            elif pair == 1:
                p, q, r = 0, 2, 1
            else:
                p, q, r = 1, 2, 0
            apq = A[p, q]
            if apq == 0.0:
                continue
            g = 100.0 * abs(apq)
            if (
                sweep > 3
                and abs(A[p, p]) + g == abs(A[p, p])
                and abs(A[q, q]) + g == abs(A[q, q])
            ):
                A[p, q] = 0.0
                A[q, p] = 0.0
                continue
            h = A[q, q] - A[p, p]
            if abs(h) + g == abs(h):
                t = apq / h
            else:
                theta = 0.5 * h / apq
                t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta < 0.0:
                    t = -t
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            tau = s / (1.0 + c)
            h = t * apq
            A[p, p] -= h
            A[q, q] += h
            A[p, q] = 0.0
            A[q, p] = 0.0
            g = A[r, p]
            h = A[r, q]
            A[r, p] = A[p, r] = g - s * (h + g * tau)
            A[r, q] = A[q, r] = h + s * (g - h * tau)
            for k in range(3):
                g = V[k, p]
                h = V[k, q]
                V[k, p] = g - s * (h + g * tau)
                V[k, q] = h + s * (g - h * tau)

    order = np.arange(3)
    for i in range(1, 3):
        j = i
        while j > 0 and A[order[j], order[j]] < A[order[j - 1], order[j - 1]]:
            order[j], order[j - 1] = order[j - 1], order[j]
            j -= 1
    w = np.empty(3)
    W = np.empty((3, 3))
    for c in range(3):
        w[c] = A[order[c], order[c]] * scale
        for k in range(3):
            W[k, c] = V[k, order[c]]
    return w, W


@njit(cache=True, inline="always")
def orient(nx, ny, nz):
    """Flip a normal so z >= 0, then y >= 0, then x >= 0 on exact ties."""
    if nz < 0.0 or (nz == 0.0 and (ny < 0.0 or (ny == 0.0 and nx < 0.0))):
        return -nx, -ny, -nz
    return nx, ny, nz


@njit(cache=True)
def plane_from_moments(n, s1, s2):
    """Fit a plane from shifted first/second moments of ``n`` points.

    ``s1`` holds sums of x, y, z and ``s2`` sums of xx, xy, xz, yy, yz, zz,
    all taken relative to a common origin near the points. Returns
    ``(ok, mx, my, mz, nx, ny, nz, l0, l1, l2)`` where ``(mx, my, mz)`` is the
    centroid in the same shifted frame.
    """
    inv = 1.0 / n
    mx = s1[0] * inv
    my = s1[1] * inv
    mz = s1[2] * inv
    cxx = s2[0] * inv - mx * mx
    cxy = s2[1] * inv - mx * my
    cxz = s2[2] * inv - mx * mz
    cyy = s2[3] * inv - my * my
    cyz = s2[4] * inv - my * mz
    czz = s2[5] * inv - mz * mz
    w, V = jacobi_eig3(cxx, cxy, cxz, cyy, cyz, czz)
    l0 = max(w[0], 0.0)
    l1 = max(w[1], 0.0)
    l2 = max(w[2], 0.0)
    ok = l2 > 0.0 and l1 >= DEGENERATE_RTOL * l2
    nx, ny, nz = orient(V[0, 0], V[1, 0], V[2, 0])
    return ok, mx, my, mz, nx, ny, nz, l0, l1, l2


# -- grid traversal ---------------------------------------------------------


@njit(cache=True, inline="always")
def _window(q, r, origin, edge, dims, axis):
    rr = r * (1.0 + _WINDOW_MARGIN)
    lo = np.floor((q - rr - origin[axis]) / edge)
    hi = np.floor((q + rr - origin[axis]) / edge)
    top = float(dims[axis] - 1)
    if lo < 0.0:
        lo = 0.0
    if hi > top:
        hi = top
    return int(lo), int(hi)


@njit(cache=True)
def _window_size(keys, starts, ends, dims, origin, edge, qx, qy, qz, r):
    """Number of stored points in the cells overlapping the query ball's box."""
    x0, x1 = _window(qx, r, origin, edge, dims, 0)
    y0, y1 = _window(qy, r, origin, edge, dims, 1)
    z0, z1 = _window(qz, r, origin, edge, dims, 2)
    total = 0
    ncell = keys.shape[0]
    for cx in range(x0, x1 + 1):
        for cy in range(y0, y1 + 1):
            base = (cx * dims[1] + cy) * dims[2]
            for cz in range(z0, z1 + 1):
                key = base + cz
                pos = np.searchsorted(keys, key)
                if pos < ncell and keys[pos] == key:
                    total += ends[pos] - starts[pos]
    return total


@njit(cache=True)
def _gather(
    pts, idx, keys, starts, ends, dims, origin, edge,
    qx, qy, qz, r, skip, bj, bx, by, bz, bd,
):
    """Collect points within distance ``r`` of the query into the buffers.

    Stores original index, offset from the query and squared distance. Points
    whose original index equals ``skip`` are left out. Returns the count.
    """
    x0, x1 = _window(qx, r, origin, edge, dims, 0)
    y0, y1 = _window(qy, r, origin, edge, dims, 1)
    z0, z1 = _window(qz, r, origin, edge, dims, 2)
    r2 = r * r
    count = 0
    ncell = keys.shape[0]
    for cx in range(x0, x1 + 1):
        for cy in range(y0, y1 + 1):
            base = (cx * dims[1] + cy) * dims[2]
            for cz in range(z0, z1 + 1):
                key = base + cz
                pos = np.searchsorted(keys, key)
                if pos >= ncell or keys[pos] != key:
                    continue
                for s in range(starts[pos], ends[pos]):
                    dx = pts[s, 0] - qx
                    dy = pts[s, 1] - qy
                    dz = pts[s, 2] - qz
                    d2 = dx * dx + dy * dy + dz * dz
                    if d2 <= r2 and idx[s] != skip:
                        bj[count] = idx[s]
                        bx[count] = dx
                        by[count] = dy
                        bz[count] = dz
                        bd[count] = d2
                        count += 1
    return count


@njit(cache=True)
def query_ball(pts, idx, keys, starts, ends, dims, origin, edge, q, r):
    """Original indices within the closed ball, ascending."""
    cap = _window_size(keys, starts, ends, dims, origin, edge, q[0], q[1], q[2], r)
    bj = np.empty(cap, dtype=np.int64)
    bx = np.empty(cap)
    by = np.empty(cap)
    bz = np.empty(cap)
    bd = np.empty(cap)
    n = _gather(
        pts, idx, keys, starts, ends, dims, origin, edge,
        q[0], q[1], q[2], r, -1, bj, bx, by, bz, bd,
    )
    return np.sort(bj[:n])


@njit(cache=True)
def count_cells_touched(keys, dims, origin, edge, q, r):
    x0, x1 = _window(q[0], r, origin, edge, dims, 0)
    y0, y1 = _window(q[1], r, origin, edge, dims, 1)
    z0, z1 = _window(q[2], r, origin, edge, dims, 2)
    return max(x1 - x0 + 1, 0) * max(y1 - y0 + 1, 0) * max(z1 - z0 + 1, 0)


# -- per-point kernels ------------------------------------------------------


@njit(cache=True)
def _roughness_one(
    pts, idx, keys, starts, ends, dims, origin, edge,
    qx, qy, qz, skip, radii, r2, min_nb, p2p, out_row, work,
):
    bj, bx, by, bz, bd, ox, oy, oz, dist = work
    K = radii.shape[0]
    rmax = radii[K - 1]
    n = _gather(
        pts, idx, keys, starts, ends, dims, origin, edge,
        qx, qy, qz, rmax, skip, bj, bx, by, bz, bd,
    )

    # stable split into radius shells so each radius is a prefix
    counts = np.zeros(K + 1, dtype=np.int64)
    for j in range(n):
        g = 0
        while bd[j] > r2[g]:
            g += 1
        bj[j] = g
        counts[g + 1] += 1
    for k in range(K):
        counts[k + 1] += counts[k]
    fill = counts[:K].copy()
    for j in range(n):
        g = bj[j]
        t = fill[g]
        ox[t] = bx[j]
        oy[t] = by[j]
        oz[t] = bz[j]
        fill[g] = t + 1

    s1 = np.zeros(3)
    c1 = np.zeros(3)
    s2 = np.zeros(6)
    c2 = np.zeros(6)
    m1 = np.empty(3)
    m2 = np.empty(6)
    start = 0
    for k in range(K):
        end = counts[k + 1]
        for j in range(start, end):
            x = ox[j]
            y = oy[j]
            z = oz[j]
            s1[0], c1[0] = _neumaier(s1[0], c1[0], x)
            s1[1], c1[1] = _neumaier(s1[1], c1[1], y)
            s1[2], c1[2] = _neumaier(s1[2], c1[2], z)
            s2[0], c2[0] = _neumaier(s2[0], c2[0], x * x)
            s2[1], c2[1] = _neumaier(s2[1], c2[1], x * y)
            s2[2], c2[2] = _neumaier(s2[2], c2[2], x * z)
            s2[3], c2[3] = _neumaier(s2[3], c2[3], y * y)
            s2[4], c2[4] = _neumaier(s2[4], c2[4], y * z)
            s2[5], c2[5] = _neumaier(s2[5], c2[5], z * z)
        start = end
        nk = end
        if nk < min_nb:
            out_row[k] = _NAN
            continue
        for a in range(3):
            m1[a] = s1[a] + c1[a]
        for a in range(6):
            m2[a] = s2[a] + c2[a]
        ok, mx, my, mz, nx, ny, nz, l0, l1, l2 = plane_from_moments(nk, m1, m2)
        if not ok:
            out_row[k] = _NAN
            continue
        if p2p:
            out_row[k] = abs(mx * nx + my * ny + mz * nz)
            continue
        sd = 0.0
        cd = 0.0
        for j in range(nk):
            d = (ox[j] - mx) * nx + (oy[j] - my) * ny + (oz[j] - mz) * nz
            dist[j] = d
            sd, cd = _neumaier(sd, cd, d)
        dbar = (sd + cd) / nk
        sa = 0.0
        ca = 0.0
        for j in range(nk):
            sa, ca = _neumaier(sa, ca, abs(dist[j] - dbar))
        out_row[k] = (sa + ca) / nk


def _alloc_work(cap):
    return (
        np.empty(cap, dtype=np.int64),
        np.empty(cap), np.empty(cap), np.empty(cap), np.empty(cap),
        np.empty(cap), np.empty(cap), np.empty(cap), np.empty(cap),
    )


_alloc_work_jit = njit(cache=True)(_alloc_work)


@njit(cache=True, parallel=True)
def roughness_kernel(
    pts, idx, keys, starts, ends, dims, origin, edge,
    queries, self_idx, radii, min_nb, p2p, out,
):
    m = queries.shape[0]
    K = radii.shape[0]
    r2 = radii * radii
    rmax = radii[K - 1]
    nchunks = (m + CHUNK - 1) // CHUNK
    for ci in prange(nchunks):
        cap = 64
        work = _alloc_work_jit(cap)
        stop = min(m, (ci + 1) * CHUNK)
        for qi in range(ci * CHUNK, stop):
            qx = queries[qi, 0]
            qy = queries[qi, 1]
            qz = queries[qi, 2]
            need = _window_size(keys, starts, ends, dims, origin, edge, qx, qy, qz, rmax)
            if need > cap:
                cap = max(need, 2 * cap)
                work = _alloc_work_jit(cap)
            _roughness_one(
                pts, idx, keys, starts, ends, dims, origin, edge,
                qx, qy, qz, self_idx[qi], radii, r2, min_nb, p2p, out[qi], work,
            )


@njit(cache=True, parallel=True)
def normals_kernel(
    pts, idx, keys, starts, ends, dims, origin, edge,
    queries, self_idx, r, min_nb, out,
):
    m = queries.shape[0]
    nchunks = (m + CHUNK - 1) // CHUNK
    for ci in prange(nchunks):
        cap = 64
        work = _alloc_work_jit(cap)
        s1 = np.zeros(3)
        s2 = np.zeros(6)
        stop = min(m, (ci + 1) * CHUNK)
        for qi in range(ci * CHUNK, stop):
            qx = queries[qi, 0]
            qy = queries[qi, 1]
            qz = queries[qi, 2]
            need = _window_size(keys, starts, ends, dims, origin, edge, qx, qy, qz, r)
            if need > cap:
                cap = max(need, 2 * cap)
                work = _alloc_work_jit(cap)
            bj, bx, by, bz, bd = work[0], work[1], work[2], work[3], work[4]
            n = _gather(
                pts, idx, keys, starts, ends, dims, origin, edge,
                qx, qy, qz, r, self_idx[qi], bj, bx, by, bz, bd,
            )
            if n < min_nb:
                out[qi, 0] = _NAN
                out[qi, 1] = _NAN
                out[qi, 2] = _NAN
                continue
            c1 = np.zeros(3)
            c2 = np.zeros(6)
            s1[:] = 0.0
            s2[:] = 0.0
            for j in range(n):
                x = bx[j]
                y = by[j]
                z = bz[j]
                s1[0], c1[0] = _neumaier(s1[0], c1[0], x)
                s1[1], c1[1] = _neumaier(s1[1], c1[1], y)
                s1[2], c1[2] = _neumaier(s1[2], c1[2], z)
                s2[0], c2[0] = _neumaier(s2[0], c2[0], x * x)
                s2[1], c2[1] = _neumaier(s2[1], c2[1], x * y)
                s2[2], c2[2] = _neumaier(s2[2], c2[2], x * z)
                s2[3], c2[3] = _neumaier(s2[3], c2[3], y * y)
                s2[4], c2[4] = _neumaier(s2[4], c2[4], y * z)
                s2[5], c2[5] = _neumaier(s2[5], c2[5], z * z)
            ok, mx, my, mz, nx, ny, nz, l0, l1, l2 = plane_from_moments(n, s1 + c1, s2 + c2)
            if ok:
                out[qi, 0] = nx
                out[qi, 1] = ny
                out[qi, 2] = nz
            else:
                out[qi, 0] = _NAN
                out[qi, 1] = _NAN
                out[qi, 2] = _NAN
