"""Brute-force maxima-persistence oracle.

Sweeps the superlevel filtration one threshold step at a time — cells
enter in (value descending, linear index ascending) order, the same
total order the library pins — and recomputes connected components of
the grown set from scratch by BFS (4-connectivity) at every step. No
union-find, no shared code with the implementation under test.

When a step fuses k >= 2 existing components, the peaks of all but the
highest-ordered one die at the entering cell's value (elder rule); ties
between equal-valued peaks go to the lower linear index. Equal-valued
plateau cells therefore yield zero-persistence pairs exactly when their
region attaches to an older component through a later-ordered cell.
"""
from __future__ import annotations

from collections import deque


def _components(cells: set[int], ncols: int, nrows: int) -> list[set[int]]:
    seen: set[int] = set()
    comps = []
    for start in cells:
        if start in seen:
            continue
        comp = set()
        todo = deque([start])
        seen.add(start)
        while todo:
            p = todo.popleft()
            comp.add(p)
            row, col = p // ncols, p % ncols
            for q in (p - 1 if col > 0 else -1,
                      p + 1 if col < ncols - 1 else -1,
                      p - ncols if row > 0 else -1,
                      p + ncols if row < nrows - 1 else -1):
                if q >= 0 and q in cells and q not in seen:
                    seen.add(q)
                    todo.append(q)
        comps.append(comp)
    return comps


def _beats(values, a: int, b: int) -> bool:
    """True if cell a is higher than b in the filtration's total order."""
    return values[a] > values[b] or (values[a] == values[b] and a < b)


def oracle_pairs(values, ncols: int, nrows: int,
                 nodata: float | None = None) -> set[tuple]:
    """Set of (birth, death, peak_cell, essential) for the grid."""
    domain = [i for i, v in enumerate(values)
              if nodata is None or v != nodata]
    if not domain:
        raise ValueError("empty domain")
    order = sorted(domain, key=lambda i: (-values[i], i))

    pairs: set[tuple] = set()
    prefix: set[int] = set()
    prev: list[tuple[set[int], int]] = []      # (component cells, peak cell)
    for p in order:
        prefix.add(p)
        comps = _components(prefix, ncols, nrows)
        merged: list[tuple[set[int], int]] = []
        for comp in comps:
            inside = [(cells, peak) for cells, peak in prev if cells & comp]
            if not inside:
                # a component that intersects no previous one is the
                # entering cell alone
                merged.append((comp, p))
                continue
            elder_peak = inside[0][1]
            for _, peak in inside[1:]:
                if _beats(values, peak, elder_peak):
                    elder_peak = peak
            for _, peak in inside:
                if peak != elder_peak:
                    pairs.add((values[peak], values[p], peak, False))
            merged.append((comp, elder_peak))
        prev = merged

    global_min = values[order[-1]]
    for _, peak in prev:
        pairs.add((values[peak], global_min, peak, True))
    return pairs
