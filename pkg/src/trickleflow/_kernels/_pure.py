"""Pure-Python/numpy kernel lane.

Every function here mirrors its Cython twin in `_core.pyx` operation for
operation: same expression shapes, same accumulation order, same libm
calls. Keep the two files in lockstep — the parity tests assert exact
(bit-level) agreement.
"""
from __future__ import annotations

import math

import numpy as np


def member_r0(f, base, human, valid, n_days, n_cells, r_m, k0, beta, mu_m,
              nodata, out):
    """One ensemble member's daily R0 field.

    f, base: (n_days*n_cells,) thermal response and capacity base per day.
    human, valid: (n_cells,). out: (n_days*n_cells,), filled in place.
    """
    m_floor = 1e-6 * k0
    h_eff = np.where(human > 1.0, human, 1.0)
    host = human > 0.0
    valid_b = valid != 0
    m = None
    for d in range(n_days):
        lo = d * n_cells
        fd = f[lo:lo + n_cells]
        kd = k0 * base[lo:lo + n_cells]
        if d == 0:
            m = 0.01 * kd
        else:
            growth = r_m * fd * m * (1.0 - m / kd)
            decay = mu_m * (1.0 - fd) * m
            m = m + growth - decay
            m = np.where(m < m_floor, m_floor, m)
        r0 = beta * fd * m / h_eff
        r0 = np.where(host, r0, 0.0)
        out[lo:lo + n_cells] = np.where(valid_b, r0, nodata)
    return out


def welford_update(mean, m2, x, n):
    """One Welford step over flat arrays; n is the member count after x."""
    delta = x - mean
    mean += delta / n
    m2 += delta * (x - mean)


def persistence_pairs(values, order, valid, ncols, nrows):
    """Superlevel-set maxima pairing by union-find over 4-connected cells.

    order: valid cell indices sorted by (value desc, index asc). Returns
    [(birth, death, peak_cell, essential), ...]; one essential pair per
    surviving component, death = the domain's global minimum.
    """
    n = ncols * nrows
    parent = [-1] * n
    peak = [0] * n
    pairs: list[tuple[float, float, int, bool]] = []

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p in order:
        p = int(p)
        row, col = p // ncols, p % ncols
        roots: list[int] = []
        for q in (p - 1 if col > 0 else -1,
                  p + 1 if col < ncols - 1 else -1,
                  p - ncols if row > 0 else -1,
                  p + ncols if row < nrows - 1 else -1):
            if q >= 0 and parent[q] != -1:
                rq = find(q)
                if rq not in roots:
                    roots.append(rq)
        if not roots:
            parent[p] = p
            peak[p] = p
            continue
        elder = roots[0]
        for r in roots[1:]:
            # higher peak in the total order (value desc, index asc) wins
            if (values[peak[r]] > values[peak[elder]]
                    or (values[peak[r]] == values[peak[elder]]
                        and peak[r] < peak[elder])):
                elder = r
        for r in roots:
            if r != elder:
                pairs.append((float(values[peak[r]]), float(values[p]),
                              peak[r], False))
                parent[r] = elder
        parent[p] = elder

    global_min = float(values[int(order[len(order) - 1])])
    for i in range(n):
        if parent[i] == i:
            pairs.append((float(values[peak[i]]), global_min, peak[i], True))
    return pairs


def resample_field(values, valid, ncols, nrows, factor, sigma, nodata, out):
    """Gaussian-weighted resampling onto a factor-times-finer grid.

    Distances are in input-cell units; contributors are input centers
    within 3*sigma of the fine-cell center; fine cells with no
    contributor become nodata. out: (ncols*factor*nrows*factor,).
    """
    r = 3.0 * sigma
    r2 = r * r
    two_s2 = 2.0 * sigma * sigma
    fcols = ncols * factor
    frows = nrows * factor
    for fi in range(frows):
        y = (fi + 0.5) / factor
        i_min = int(math.ceil(y - r - 0.5))
        i_max = int(math.floor(y + r - 0.5))
        if i_min < 0:
            i_min = 0
        if i_max > nrows - 1:
            i_max = nrows - 1
        for fj in range(fcols):
            x = (fj + 0.5) / factor
            j_min = int(math.ceil(x - r - 0.5))
            j_max = int(math.floor(x + r - 0.5))
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
                        w = math.exp(-d2 / two_s2)
                        num += w * values[i * ncols + j]
                        den += w
            out[fi * fcols + fj] = num / den if den > 0.0 else nodata
    return out
