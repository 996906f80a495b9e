"""Synthetic scenario inputs for demos and tests.

Fields are smooth, seeded, and strictly inside the model's interesting
ranges (warm-season temperatures, moderate rainfall, nonzero hosts) so
every cell carries ensemble variance.
"""
from __future__ import annotations

import numpy as np

from .grid import ScalarGrid, daily_stack, format_grid, format_stack
from .model import ScenarioInputs


def synthetic_inputs(ncols: int, nrows: int, n_days: int, seed: int = 7,
                     cell_size_m: float = 250.0,
                     x_origin: float = 0.0, y_origin: float = 0.0,
                     gdp_weight: float = 0.0) -> ScenarioInputs:
    gen = np.random.Generator(np.random.PCG64(seed))
    n_cells = ncols * nrows

    def grid(values) -> ScalarGrid:
        return ScalarGrid(ncols=ncols, nrows=nrows, x_origin=x_origin,
                          y_origin=y_origin, cell_size_m=cell_size_m,
                          values=list(map(float, values)))

    base_t = gen.uniform(14.0, 30.0, size=n_cells)
    base_p = gen.uniform(2.0, 18.0, size=n_cells)
    temperature = []
    precipitation = []
    for d in range(n_days):
        season = 2.5 * np.sin(2.0 * np.pi * d / max(n_days, 1))
        temperature.append(grid(base_t + season
                                + gen.normal(0.0, 0.8, size=n_cells)))
        rain = base_p + gen.normal(0.0, 2.0, size=n_cells)
        precipitation.append(grid(np.clip(rain, 0.0, None)))
    human = grid(gen.uniform(200.0, 8000.0, size=n_cells))
    gdp = grid(gen.uniform(0.5, 1.5, size=n_cells))
    return ScenarioInputs(temperature=temperature,
                          precipitation=precipitation,
                          human_density=human, gdp=gdp, n_days=n_days,
                          gdp_weight=gdp_weight)


def inputs_as_push_content(inputs: ScenarioInputs) -> dict[str, bytes]:
    """The four EDI push payloads for a scenario input set."""
    temp = format_stack(daily_stack(inputs.temperature))
    prec = format_stack(daily_stack(inputs.precipitation))
    return {
        "temperature": temp.encode("ascii"),
        "precipitation": prec.encode("ascii"),
        "human_density": format_grid(inputs.human_density).encode("ascii"),
        "gdp": format_grid(inputs.gdp).encode("ascii"),
    }
