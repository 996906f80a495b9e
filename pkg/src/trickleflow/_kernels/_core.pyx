# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel lane. Twin of `_pure.py`: identical arithmetic in
identical evaluation order — edit both or neither."""

from libc.math cimport ceil, exp, floor
from libc.stdlib cimport free, malloc


def member_r0(double[::1] f, double[::1] base, double[::1] human,
              unsigned char[::1] valid, int n_days, int n_cells,
              double r_m, double k0, double beta, double mu_m,
              double nodata, double[::1] out):
    cdef int c, d, lo
    cdef double m, kd, fd, growth, decay, r0, h, h_eff
    cdef double m_floor = 1e-6 * k0
    cdef bint host
    for c in range(n_cells):
        if not valid[c]:
            for d in range(n_days):
                out[d * n_cells + c] = nodata
            continue
        h = human[c]
        h_eff = h if h > 1.0 else 1.0
        host = h > 0.0
        m = 0.0
        for d in range(n_days):
            lo = d * n_cells
            fd = f[lo + c]
            kd = k0 * base[lo + c]
            if d == 0:
                m = 0.01 * kd
            else:
                growth = r_m * fd * m * (1.0 - m / kd)
                decay = mu_m * (1.0 - fd) * m
                m = m + growth - decay
                if m < m_floor:
                    m = m_floor
            r0 = beta * fd * m / h_eff
            if not host:
                r0 = 0.0
            out[lo + c] = r0
    return out


def welford_update(double[::1] mean, double[::1] m2, double[::1] x, int n):
    cdef Py_ssize_t i
    cdef double delta
    for i in range(mean.shape[0]):
        delta = x[i] - mean[i]
        mean[i] = mean[i] + delta / n
        m2[i] = m2[i] + delta * (x[i] - mean[i])


cdef long long _find(long long* parent, long long i) nogil:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def persistence_pairs(double[::1] values, long long[::1] order,
                      unsigned char[::1] valid, int ncols, int nrows):
    cdef Py_ssize_t n = ncols * nrows
    cdef long long* parent = <long long*> malloc(n * sizeof(long long))
    cdef long long* peak = <long long*> malloc(n * sizeof(long long))
    if parent == NULL or peak == NULL:
        free(parent)
        free(peak)
        raise MemoryError()
    cdef Py_ssize_t i
    cdef long long p, q, rq, elder, r
    cdef long long roots[4]
    cdef int n_roots, k, kk, row, col
    cdef bint dup
    cdef double global_min
    pairs = []
    try:
        for i in range(n):
            parent[i] = -1
            peak[i] = 0
        for i in range(order.shape[0]):
            p = order[i]
            row = <int> (p // ncols)
            col = <int> (p % ncols)
            n_roots = 0
            for k in range(4):
                if k == 0:
                    q = p - 1 if col > 0 else -1
                elif k == 1:
                    q = p + 1 if col < ncols - 1 else -1
                elif k == 2:
                    q = p - ncols if row > 0 else -1
                else:
                    q = p + ncols if row < nrows - 1 else -1
                if q >= 0 and parent[q] != -1:
                    rq = _find(parent, q)
                    dup = False
                    for kk in range(n_roots):
                        if roots[kk] == rq:
                            dup = True
                            break
                    if not dup:
                        roots[n_roots] = rq
                        n_roots += 1
            if n_roots == 0:
                parent[p] = p
                peak[p] = p
                continue
            elder = roots[0]
            for k in range(1, n_roots):
                r = roots[k]
                if (values[peak[r]] > values[peak[elder]]
                        or (values[peak[r]] == values[peak[elder]]
                            and peak[r] < peak[elder])):
                    elder = r
            for k in range(n_roots):
                r = roots[k]
                if r != elder:
                    pairs.append((values[peak[r]], values[p], peak[r], False))
                    parent[r] = elder
            parent[p] = elder
        global_min = values[order[order.shape[0] - 1]]
        for i in range(n):
            if parent[i] == i:
                pairs.append((values[peak[i]], global_min, peak[i], True))
    finally:
        free(parent)
        free(peak)
    return pairs


def resample_field(double[::1] values, unsigned char[::1] valid,
                   int ncols, int nrows, int factor, double sigma,
                   double nodata, double[::1] out):
    cdef double r = 3.0 * sigma
    cdef double r2 = r * r
    cdef double two_s2 = 2.0 * sigma * sigma
    cdef int fcols = ncols * factor
    cdef int frows = nrows * factor
    cdef int fi, fj, i, j, i_min, i_max, j_min, j_max
    cdef double x, y, dx, dy, d2, w, num, den
    for fi in range(frows):
        y = (fi + 0.5) / factor
        i_min = <int> ceil(y - r - 0.5)
        i_max = <int> floor(y + r - 0.5)
        if i_min < 0:
            i_min = 0
        if i_max > nrows - 1:
            i_max = nrows - 1
        for fj in range(fcols):
            x = (fj + 0.5) / factor
            j_min = <int> ceil(x - r - 0.5)
            j_max = <int> floor(x + r - 0.5)
            if j_min < 0:
                j_min = 0
            if j_max > ncols - 1:
                j_max = ncols - 1
            num = 0.0
            den = 0.0
            for i in range(i_min, i_max + 1):
                dy = y - (i + 0.5)
                for j in range(j_min, j_max + 1):
                    if not valid[i * ncols + j]:
                        continue
                    dx = x - (j + 0.5)
                    d2 = dx * dx + dy * dy
                    if d2 <= r2:
                        w = exp(-d2 / two_s2)
                        num += w * values[i * ncols + j]
                        den += w
            out[fi * fcols + fj] = num / den if den > 0.0 else nodata
    return out
