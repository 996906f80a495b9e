"""Topological proxies of R0 fields.

Superlevel-set persistence of maxima over 4-connected grids (union-find,
elder rule, deterministic plateau handling via linear-index tiebreaks),
persistence thresholding, Gaussian resampling of sparse fields, and
barycentres of diagrams under exact squared-cost partial matching.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _kernels
from .grid import ScalarGrid

BARYCENTRE_CELL = -1  # sentinel: averaged pairs have no source cell


class EmptyDomainError(ValueError):
    """Every cell of the grid is nodata."""


@dataclass(frozen=True)
class GridMeta:
    ncols: int
    nrows: int
    x_origin: float
    y_origin: float
    cell_size_m: float

    @classmethod
    def of(cls, grid: ScalarGrid) -> "GridMeta":
        return cls(grid.ncols, grid.nrows, grid.x_origin, grid.y_origin,
                   grid.cell_size_m)


@dataclass(frozen=True)
class PersistencePair:
    birth: float
    death: float
    cell: int           # linear index of the maximum; BARYCENTRE_CELL if none
    essential: bool = False

    @property
    def persistence(self) -> float:
        return self.birth - self.death

    def point(self) -> tuple[float, float]:
        return (self.birth, self.death)


@dataclass
class PersistenceDiagram:
    pairs: list[PersistencePair]
    meta: GridMeta | None = None
    time_label: str = ""

    def __post_init__(self) -> None:
        self.pairs = canonical_order(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class MaximaBar:
    cell_x: int
    cell_y: int
    value: float        # birth of the pair
    persistence: float


def canonical_order(pairs: list[PersistencePair]) -> list[PersistencePair]:
    """Persistence descending, ties by cell ascending."""
    return sorted(pairs, key=lambda p: (-p.persistence, p.cell))


def persistence_maxima(grid: ScalarGrid, time_label: str = "") -> PersistenceDiagram:
    """Maxima persistence diagram of the superlevel-set filtration.

    The filtration's total order is value descending with linear index
    ascending as tiebreak; on a merge the component whose peak is lower
    in that order dies (elder rule). The surviving component's essential
    pair gets the global minimum as its death so the diagram embeds in
    the finite plane.
    """
    values = np.asarray(grid.values, dtype=np.float64)
    valid = (values != grid.nodata).astype(np.uint8)
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        raise EmptyDomainError("grid has no non-nodata cells")
    order = idx[np.lexsort((idx, -values[idx]))].astype(np.int64)
    raw = _kernels.persistence_pairs(values, order, valid,
                                     grid.ncols, grid.nrows)
    pairs = [PersistencePair(birth=b, death=d, cell=int(c), essential=bool(e))
             for b, d, c, e in raw]
    return PersistenceDiagram(pairs=pairs, meta=GridMeta.of(grid),
                              time_label=time_label)


def threshold_diagram(diagram: PersistenceDiagram, tau: float) -> PersistenceDiagram:
    """Keep pairs with persistence >= tau; essential pairs always survive."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    kept = [p for p in diagram.pairs if p.essential or p.persistence >= tau]
    return PersistenceDiagram(pairs=kept, meta=diagram.meta,
                              time_label=diagram.time_label)


def top_k_maxima(diagram: PersistenceDiagram, k: int) -> list[MaximaBar]:
    """The k most persistent maxima as bars at their 2D cell coordinates."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if diagram.meta is None:
        raise ValueError("diagram carries no grid geometry")
    bars = []
    for p in diagram.pairs[:k]:
        if p.cell == BARYCENTRE_CELL:
            continue
        bars.append(MaximaBar(cell_x=p.cell % diagram.meta.ncols,
                              cell_y=p.cell // diagram.meta.ncols,
                              value=p.birth, persistence=p.persistence))
    return bars


def gaussian_resample(grid: ScalarGrid, factor: int,
                      sigma_cells: float = 1.0) -> ScalarGrid:
    """Resample onto a factor-times-finer grid with a Gaussian kernel.

    sigma is in input-cell units; contributors are input centers within
    3*sigma. Fine cells with no contributor in radius become nodata, so
    nodata holes wider than the kernel stay holes.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if sigma_cells <= 0:
        raise ValueError("sigma_cells must be > 0")
    values = np.asarray(grid.values, dtype=np.float64)
    valid = (values != grid.nodata).astype(np.uint8)
    out = np.empty(grid.ncols * factor * grid.nrows * factor, dtype=np.float64)
    _kernels.resample_field(values, valid, grid.ncols, grid.nrows,
                            int(factor), float(sigma_cells), grid.nodata, out)
    return ScalarGrid(
        ncols=grid.ncols * factor,
        nrows=grid.nrows * factor,
        x_origin=grid.x_origin,
        y_origin=grid.y_origin,
        cell_size_m=grid.cell_size_m / factor,
        nodata=grid.nodata,
        values=out.tolist(),
    )


# -- matching and barycentres --------------------------------------------------

def _diag_cost(point: tuple[float, float]) -> float:
    b, d = point
    return (b - d) * (b - d) / 2.0


def _match(a_pts: list[tuple[float, float]],
           b_pts: list[tuple[float, float]]):
    """Optimal partial matching on the diagonally augmented cost matrix.

    Returns (cost, links) where links are (i, j), (i, None) for a_i sent
    to its diagonal projection, and (None, j) likewise for b_j.
    """
    m, n = len(a_pts), len(b_pts)
    if m == 0 and n == 0:
        return 0.0, []
    size = m + n
    cost = np.zeros((size, size), dtype=np.float64)
    finite_total = 0.0
    for i, (bi, di) in enumerate(a_pts):
        for j, (bj, dj) in enumerate(b_pts):
            c = (bi - bj) ** 2 + (di - dj) ** 2
            cost[i, j] = c
            finite_total += c
    a_diag = [_diag_cost(p) for p in a_pts]
    b_diag = [_diag_cost(p) for p in b_pts]
    finite_total += sum(a_diag) + sum(b_diag)
    big = finite_total + 1.0
    cost[:m, n:] = big
    for i in range(m):
        cost[i, n + i] = a_diag[i]
    cost[m:, :n] = big
    for j in range(n):
        cost[m + j, j] = b_diag[j]
    rows, cols = linear_sum_assignment(cost)
    total = 0.0
    links: list[tuple[int | None, int | None]] = []
    for r, c in zip(rows, cols):
        if r < m and c < n:
            links.append((r, c))
            total += cost[r, c]
        elif r < m:
            links.append((r, None))
            total += cost[r, c]
        elif c < n:
            links.append((None, c))
            total += cost[r, c]
    return total, links


def diagram_matching_cost(a: PersistenceDiagram, b: PersistenceDiagram) -> float:
    """Minimal total squared-distance cost over partial matchings,
    unmatched points paying their squared distance to the diagonal."""
    cost, _ = _match([p.point() for p in a.pairs],
                     [p.point() for p in b.pairs])
    return cost


def _median_cardinality_index(diagrams: list[PersistenceDiagram]) -> int:
    sizes = sorted(len(d) for d in diagrams)
    target = sizes[(len(sizes) - 1) // 2]
    for i, d in enumerate(diagrams):
        if len(d) == target:
            return i
    raise AssertionError("unreachable")


def barycentre(diagrams: list[PersistenceDiagram],
               initial: PersistenceDiagram | None = None,
               tol: float = 1e-9, max_iter: int = 100) -> PersistenceDiagram:
    """Average diagram by iterated matching and point-wise means.

    Starts from the input of median cardinality (ties: first in list
    order) unless `initial` is given; candidate points matched to the
    diagonal in a strict majority of inputs are dropped. Partner means
    use fsum, so the output does not depend on the input list order.
    """
    if not diagrams:
        raise ValueError("need at least one diagram")
    if initial is None:
        initial = diagrams[_median_cardinality_index(diagrams)]
    cand = [p.point() for p in initial.pairs]
    flags = [p.essential for p in initial.pairs]
    input_pts = [[p.point() for p in d.pairs] for d in diagrams]

    def total_cost(points: list[tuple[float, float]]) -> float:
        return sum(_match(points, pts)[0] for pts in input_pts)

    prev = total_cost(cand)
    for _ in range(max_iter):
        partners: list[list[tuple[float, float]]] = [[] for _ in cand]
        diag_hits = [0] * len(cand)
        for pts in input_pts:
            _, links = _match(cand, pts)
            for i, j in links:
                if i is None:
                    continue
                if j is None:
                    partners[i].append(((cand[i][0] + cand[i][1]) / 2.0,) * 2)
                    diag_hits[i] += 1
                else:
                    partners[i].append(pts[j])
        new_cand = [
            (math.fsum(b for b, _ in ps) / len(ps),
             math.fsum(d for _, d in ps) / len(ps))
            for ps in partners
        ]
        majority = len(diagrams) / 2.0
        keep = [k for k in range(len(new_cand)) if diag_hits[k] <= majority]
        cand = [new_cand[k] for k in keep]
        flags = [flags[k] for k in keep]
        cost = total_cost(cand)
        if prev - cost < tol:
            break
        prev = cost

    pairs = [PersistencePair(birth=b, death=d, cell=BARYCENTRE_CELL,
                             essential=flags[k])
             for k, (b, d) in enumerate(cand)]
    meta = next((d.meta for d in diagrams if d.meta is not None), None)
    return PersistenceDiagram(pairs=pairs, meta=meta, time_label="barycentre")


# -- serialization --------------------------------------------------------------

def diagram_to_dict(diagram: PersistenceDiagram) -> dict:
    ncols = diagram.meta.ncols if diagram.meta else 0
    doc = {
        "time_label": diagram.time_label,
        "pairs": [
            {
                "birth": p.birth,
                "death": p.death,
                "cell_x": p.cell % ncols if p.cell >= 0 and ncols else -1,
                "cell_y": p.cell // ncols if p.cell >= 0 and ncols else -1,
                "persistence": p.persistence,
                "essential": p.essential,
            }
            for p in diagram.pairs
        ],
    }
    if diagram.meta is not None:
        doc["meta"] = {
            "ncols": diagram.meta.ncols,
            "nrows": diagram.meta.nrows,
            "x_origin": diagram.meta.x_origin,
            "y_origin": diagram.meta.y_origin,
            "cell_size_m": diagram.meta.cell_size_m,
        }
    return doc


def diagram_from_dict(doc: dict) -> PersistenceDiagram:
    meta = None
    if "meta" in doc:
        meta = GridMeta(**doc["meta"])
    pairs = []
    for p in doc["pairs"]:
        if p["cell_x"] >= 0 and meta is not None:
            cell = p["cell_y"] * meta.ncols + p["cell_x"]
        else:
            cell = BARYCENTRE_CELL
        pairs.append(PersistencePair(birth=p["birth"], death=p["death"],
                                     cell=cell, essential=p["essential"]))
    return PersistenceDiagram(pairs=pairs, meta=meta,
                              time_label=doc.get("time_label", ""))


def write_diagram(path, diagram: PersistenceDiagram) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(diagram_to_dict(diagram), fh)


def read_diagram(path) -> PersistenceDiagram:
    with open(path, "r", encoding="utf-8") as fh:
        return diagram_from_dict(json.load(fh))
