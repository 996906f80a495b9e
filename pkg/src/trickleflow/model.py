"""Deterministic surrogate of the two-stage mosquito abundance / R0 model.

Per-cell daily abundance follows logistic growth gated by a thermal
response of the trailing-window mean temperature ("persisting favourable
conditions"), with carrying capacity set by trailing precipitation and
human density, and decay when conditions are unfavourable. R0 is
proportional to abundance per host. Ensembles draw per-member parameters
from counter-based streams so member i's output is a pure function of
(scenario_seed, i) — coarse ensembles are exact prefixes of fine ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .grid import ScalarGrid

MU_M = 0.05          # per-day decay when conditions are unfavourable
T_MIN = 10.0         # deg C, lower thermal bound
T_MAX = 35.0         # deg C, upper thermal bound
P_H = 10.0           # mm, precipitation half-saturation
H_H = 5000.0         # persons, host half-saturation
WINDOW = 7           # days of "persisting" conditions

R_M_RANGE = (0.1, 0.3)
K0_RANGE = (3000.0, 7000.0)
BETA_RANGE = (1.0, 3.0)


class ScenarioValidationError(ValueError):
    """Inputs are dimensionally or structurally inconsistent."""


@dataclass(frozen=True)
class ModelParams:
    """One ensemble member's sampled parameters plus the fixed constants."""

    r_m: float
    k0: float
    beta: float
    mu_m: float = MU_M
    t_min: float = T_MIN
    t_max: float = T_MAX
    p_h: float = P_H
    h_h: float = H_H
    window: int = WINDOW


@dataclass(frozen=True)
class EnsembleConfig:
    n_members: int
    scenario_seed: int
    species: str = "albopictus"
    disease: str = "chikungunya"

    def __post_init__(self) -> None:
        if self.n_members < 1:
            raise ValueError("n_members must be >= 1")


@dataclass
class ScenarioInputs:
    """Daily temperature/precipitation series plus static density grids."""

    temperature: list[ScalarGrid]
    precipitation: list[ScalarGrid]
    human_density: ScalarGrid
    gdp: ScalarGrid
    n_days: int
    gdp_weight: float = 0.0  # capacity modifier weight; 0 disables GDP

    def validate(self) -> None:
        if self.n_days < 1:
            raise ScenarioValidationError("n_days must be >= 1")
        if len(self.temperature) != self.n_days:
            raise ScenarioValidationError(
                f"temperature series has {len(self.temperature)} days, "
                f"expected {self.n_days}")
        if len(self.precipitation) != self.n_days:
            raise ScenarioValidationError(
                f"precipitation series has {len(self.precipitation)} days, "
                f"expected {self.n_days}")
        ref = self.human_density
        for g in [*self.temperature, *self.precipitation, self.gdp]:
            if not ref.same_geometry(g):
                raise ScenarioValidationError("input grids differ in geometry")


@dataclass
class R0Result:
    mean: list[ScalarGrid]
    stddev: list[ScalarGrid]
    fidelity: int
    scenario_id: str = ""


# -- scalar pieces of the per-cell update -------------------------------------
# The vectorized precompute and the compiled kernel repeat these expression
# shapes verbatim; composing the scalar pieces reproduces a member field
# bit-for-bit (see tests).

def thermal_response(t: float, t_min: float = T_MIN, t_max: float = T_MAX) -> float:
    """Quadratic suitability in [0, 1], peaking midway between the bounds."""
    den = (t_max - t_min) * (t_max - t_min)
    v = 4.0 * (t - t_min) * (t_max - t) / den
    return v if v > 0.0 else 0.0


def trailing_mean(series, day: int, window: int = WINDOW) -> float:
    """Mean of series[max(0, day-window+1) .. day], truncated at day 0."""
    if not 0 <= day < len(series):
        raise IndexError("day out of range")
    start = day - window + 1
    if start < 0:
        start = 0
    s = 0.0
    for k in range(start, day + 1):
        s += series[k]
    return s / (day - start + 1)


def carrying_capacity(pbar: float, h: float, k0: float,
                      p_h: float = P_H, h_h: float = H_H) -> float:
    """Capacity from trailing precipitation and host density; in (0.1, 2)*k0."""
    if pbar < 0 or h < 0:
        raise ValueError("pbar and h must be non-negative")
    base = (0.1 + 0.9 * pbar / (pbar + p_h)) * (1.0 + h / (h + h_h))
    return k0 * base


def step_abundance(m: float, k: float, f: float, r_m: float,
                   mu_m: float = MU_M, m_floor: float = 0.0) -> float:
    """One day of logistic growth (gated by f) and off-season decay."""
    if m < 0 or k <= 0:
        raise ValueError("m must be >= 0 and k > 0")
    growth = r_m * f * m * (1.0 - m / k)
    decay = mu_m * (1.0 - f) * m
    m_next = m + growth - decay
    if m_next < m_floor:
        m_next = m_floor
    return m_next


def r0_field(m: float, h: float, f: float, beta: float) -> float:
    """Transmission potential per host; zero where there are no hosts."""
    if h <= 0:
        return 0.0
    h_eff = h if h > 1.0 else 1.0
    return beta * f * m / h_eff


def sample_params(scenario_seed: int, member: int) -> ModelParams:
    """Member parameter draw from a counter-based stream.

    The stream is keyed by (scenario_seed, member), so draws are
    independent of how many members the ensemble has.
    """
    ss = np.random.SeedSequence(entropy=scenario_seed & (2**64 - 1),
                                spawn_key=(member,))
    gen = np.random.Generator(np.random.PCG64(ss))
    r_m = gen.uniform(*R_M_RANGE)
    k0 = gen.uniform(*K0_RANGE)
    beta = gen.uniform(*BETA_RANGE)
    return ModelParams(r_m=r_m, k0=k0, beta=beta)


# -- shared precompute ---------------------------------------------------------

@dataclass
class _Precomputed:
    f: np.ndarray        # (n_days*n_cells,) thermal response of trailing T
    base: np.ndarray     # (n_days*n_cells,) capacity base (excl. k0)
    human: np.ndarray    # (n_cells,)
    valid: np.ndarray    # (n_cells,) uint8
    n_days: int
    n_cells: int
    nodata: float
    geometry: ScalarGrid = field(repr=False, default=None)


def precompute(inputs: ScenarioInputs) -> _Precomputed:
    """Member-independent fields: thermal response and capacity base.

    Window sums accumulate day by day in ascending order so the result
    matches a per-cell composition of `trailing_mean` exactly.
    """
    inputs.validate()
    ref = inputs.human_density
    n_cells = ref.ncols * ref.nrows
    n_days = inputs.n_days
    nodata = ref.nodata

    temp = np.array([g.values for g in inputs.temperature], dtype=np.float64)
    prec = np.array([g.values for g in inputs.precipitation], dtype=np.float64)
    human = np.asarray(ref.values, dtype=np.float64)
    gdp = np.asarray(inputs.gdp.values, dtype=np.float64)

    valid = np.ones(n_cells, dtype=np.uint8)
    for g, arr in ((ref, human), (inputs.gdp, gdp)):
        valid &= (arr != g.nodata).astype(np.uint8)
    for d in range(n_days):
        valid &= (temp[d] != inputs.temperature[d].nodata).astype(np.uint8)
        valid &= (prec[d] != inputs.precipitation[d].nodata).astype(np.uint8)
    valid_b = valid != 0

    # placeholder values at invalid cells keep the arithmetic finite;
    # outputs there are masked to nodata by the kernel
    human = np.where(valid_b, human, 1.0)
    temp = np.where(valid_b[None, :], temp, 20.0)
    prec = np.where(valid_b[None, :], prec, 0.0)
    gdp = np.where(valid_b, gdp, 1.0)

    den = (T_MAX - T_MIN) * (T_MAX - T_MIN)
    host_factor = 1.0 + human / (human + H_H)
    if inputs.gdp_weight > 0.0:
        g_max = float(gdp[valid_b].max()) if valid_b.any() else 1.0
        if g_max <= 0.0:
            g_max = 1.0
        gdp_mod = 1.0 + inputs.gdp_weight * (1.0 - gdp / g_max)
    else:
        gdp_mod = None

    f = np.empty((n_days, n_cells), dtype=np.float64)
    base = np.empty((n_days, n_cells), dtype=np.float64)
    for d in range(n_days):
        start = d - WINDOW + 1
        if start < 0:
            start = 0
        width = d - start + 1
        t_acc = np.zeros(n_cells, dtype=np.float64)
        p_acc = np.zeros(n_cells, dtype=np.float64)
        for k in range(start, d + 1):
            t_acc += temp[k]
            p_acc += prec[k]
        tbar = t_acc / width
        pbar = p_acc / width
        v = 4.0 * (tbar - T_MIN) * (T_MAX - tbar) / den
        f[d] = np.where(v > 0.0, v, 0.0)
        b = (0.1 + 0.9 * pbar / (pbar + P_H)) * host_factor
        if gdp_mod is not None:
            b = b * gdp_mod
        base[d] = b

    return _Precomputed(
        f=f.reshape(-1), base=base.reshape(-1), human=human, valid=valid,
        n_days=n_days, n_cells=n_cells, nodata=nodata, geometry=ref,
    )


def member_r0_flat(pre: _Precomputed, scenario_seed: int, member: int,
                   out: np.ndarray | None = None) -> np.ndarray:
    """One member's R0 field as a flat (n_days*n_cells,) array."""
    params = sample_params(scenario_seed, member)
    if out is None:
        out = np.empty(pre.n_days * pre.n_cells, dtype=np.float64)
    _kernels.member_r0(pre.f, pre.base, pre.human, pre.valid,
                       pre.n_days, pre.n_cells,
                       params.r_m, params.k0, params.beta, params.mu_m,
                       pre.nodata, out)
    return out


class WelfordReducer:
    """Streaming mean/stddev over member fields, in member order.

    Population stddev (ddof=0), so a single member reduces to stddev 0.
    """

    def __init__(self, size: int):
        self.mean = np.zeros(size, dtype=np.float64)
        self.m2 = np.zeros(size, dtype=np.float64)
        self.count = 0

    def update(self, x: np.ndarray) -> None:
        self.count += 1
        _kernels.welford_update(self.mean, self.m2, x, self.count)

    def finalize(self) -> tuple[np.ndarray, np.ndarray]:
        if self.count == 0:
            raise ValueError("no members reduced")
        std = np.sqrt(np.where(self.m2 > 0.0, self.m2, 0.0) / self.count)
        return self.mean, std


def run_ensemble(inputs: ScenarioInputs, cfg: EnsembleConfig,
                 scenario_id: str = "") -> R0Result:
    """Mean/stddev R0 across n_members member runs; see module docstring."""
    pre = precompute(inputs)
    size = pre.n_days * pre.n_cells
    reducer = WelfordReducer(size)
    out = np.empty(size, dtype=np.float64)
    for i in range(cfg.n_members):
        member_r0_flat(pre, cfg.scenario_seed, i, out)
        reducer.update(out)
    mean, std = reducer.finalize()
    invalid = pre.valid == 0
    mean2 = mean.reshape(pre.n_days, pre.n_cells)
    std2 = std.reshape(pre.n_days, pre.n_cells)
    mean2[:, invalid] = pre.nodata
    std2[:, invalid] = pre.nodata

    ref = inputs.human_density
    mean_grids = [ref.copy_geometry(values=mean2[d].tolist())
                  for d in range(pre.n_days)]
    std_grids = [ref.copy_geometry(values=std2[d].tolist())
                 for d in range(pre.n_days)]
    return R0Result(mean=mean_grids, stddev=std_grids,
                    fidelity=cfg.n_members, scenario_id=scenario_id)


def stderr_of_mean(result: R0Result, day: int, cell: int) -> float:
    """Standard error of the ensemble mean at one (cell, day) site."""
    sd = result.stddev[day].values[cell]
    return sd / math.sqrt(result.fidelity)
