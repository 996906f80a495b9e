"""Command-line entry points: serve the API, run a scripted demo, and
benchmark the compiled kernel core against the pure fallback."""
from __future__ import annotations

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

import numpy as np


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="trickleflow",
        description="urgent-computing control service at desk scale")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP/SSE service")
    p_serve.add_argument("--workspace", default=None,
                         help="state directory (default: temp dir)")
    p_serve.add_argument("--mode", choices=["live", "virtual"],
                         default="live")
    p_serve.add_argument("--machines", default=None,
                         help="federation config JSON")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--time-scale", type=float, default=20.0)

    p_demo = sub.add_parser("demo", help="scripted end-to-end incident")
    p_demo.add_argument("--mode", choices=["virtual", "live"],
                        default="virtual")
    p_demo.add_argument("--ncols", type=int, default=8)
    p_demo.add_argument("--nrows", type=int, default=8)
    p_demo.add_argument("--days", type=int, default=7)
    p_demo.add_argument("--ladder", type=int, nargs="+",
                        default=[10, 1000, 3000])
    p_demo.add_argument("--workspace", default=None)

    p_bench = sub.add_parser("bench", help="compiled vs pure kernel timings")
    p_bench.add_argument("--cells", type=int, default=4096)
    p_bench.add_argument("--days", type=int, default=30)
    p_bench.add_argument("--members", type=int, default=50)
    p_bench.add_argument("--grid", type=int, default=128,
                         help="side length for persistence/resample")

    args = parser.parse_args(argv)
    if args.command == "serve":
        return _serve(args)
    if args.command == "demo":
        return _demo(args)
    if args.command == "bench":
        return _bench(args)
    return 2


def _workspace(arg) -> Path:
    if arg:
        path = Path(arg)
        path.mkdir(parents=True, exist_ok=True)
        return path
    return Path(tempfile.mkdtemp(prefix="trickleflow-"))


def _serve(args) -> int:
    import uvicorn

    from .api import create_app
    from .federation import load_machines
    from .incident import IncidentService

    machines = load_machines(args.machines) if args.machines else None
    service = IncidentService(workspace=_workspace(args.workspace),
                              mode=args.mode, machines=machines,
                              time_scale=args.time_scale)
    app = create_app(service)
    print(f"workspace: {service.workspace}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _demo(args) -> int:
    from .incident import IncidentService, Region
    from .federation import matrix_to_csv, scheduling_matrix
    from .synth import inputs_as_push_content, synthetic_inputs

    service = IncidentService(workspace=_workspace(args.workspace),
                              mode=args.mode, seed=11)
    print(f"workspace: {service.workspace}  mode: {args.mode}")
    incident_id = service.create_incident(
        kind="mosquito",
        region=Region(ncols=args.ncols, nrows=args.nrows),
        species="albopictus", disease="chikungunya",
        ladder=tuple(args.ladder))
    service.activate(incident_id)
    print(f"incident {incident_id} active; pushing synthetic inputs")

    inputs = synthetic_inputs(args.ncols, args.nrows, args.days, seed=3)
    for kind, content in inputs_as_push_content(inputs).items():
        service.edi.ingest(f"{incident_id}.{kind}", content)

    if args.mode == "virtual":
        service.run_virtual()
    else:
        deadline = time.monotonic() + 300
        while time.monotonic() < deadline:
            scenario_ids = service.incident(incident_id).scenario_ids
            if scenario_ids:
                scenario = service.scenario(scenario_ids[0])
                if scenario.visible_fidelity == max(args.ladder):
                    break
            time.sleep(0.25)

    scenario_id = service.incident(incident_id).scenario_ids[0]
    scenario = service.scenario(scenario_id)
    print(f"scenario {scenario_id} events:")
    for event in scenario.events:
        print(f"  [{event['seq']:3d}] {event['type']:16s} "
              f"{json.dumps(event['data'])}")
    result = service.visible_result(scenario_id)
    print("visible result:", json.dumps(result, indent=2))
    print("scheduling records:")
    for rec in service.federation.records():
        print(f"  {rec.job_id}: nodes={rec.nodes} runtime={rec.runtime_s:.1f}s"
              f" wait={rec.queue_wait_s:.1f}s coeff={rec.coefficient:.3f}")
    print(matrix_to_csv(scheduling_matrix(service.federation.records())))
    service.close()
    return 0


def _time(fn, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _bench(args) -> int:
    from ._kernels import _pure
    try:
        from ._kernels import _core
    except ImportError:
        _core = None

    lanes = [("pure", _pure)] + ([("compiled", _core)] if _core else [])
    if _core is None:
        print("compiled core not available; timing pure lane only")

    n_cells, n_days, n_members = args.cells, args.days, args.members
    gen = np.random.Generator(np.random.PCG64(5))
    f = gen.uniform(0.0, 1.0, size=n_days * n_cells)
    base = gen.uniform(0.5, 2.0, size=n_days * n_cells)
    human = gen.uniform(100.0, 9000.0, size=n_cells)
    valid = np.ones(n_cells, dtype=np.uint8)
    out = np.empty(n_days * n_cells)
    mean = np.zeros(n_days * n_cells)
    m2 = np.zeros(n_days * n_cells)

    side = args.grid
    values = gen.uniform(0.0, 5.0, size=side * side)
    gvalid = np.ones(side * side, dtype=np.uint8)
    idx = np.arange(side * side, dtype=np.int64)
    order = idx[np.lexsort((idx, -values))]
    rout = np.empty(side * 2 * side * 2)

    print(f"member kernel: {n_members} members x {n_days} days x "
          f"{n_cells} cells; persistence/resample grid {side}x{side}")
    results: dict[str, dict[str, float]] = {}
    for name, impl in lanes:
        def run_members(impl=impl):
            for i in range(n_members):
                impl.member_r0(f, base, human, valid, n_days, n_cells,
                               0.2, 5000.0, 2.0, 0.05, -9999.0, out)
                impl.welford_update(mean, m2, out, i + 1)

        results[name] = {
            "ensemble": _time(run_members),
            "persistence": _time(lambda impl=impl: impl.persistence_pairs(
                values, order, gvalid, side, side)),
            "resample": _time(lambda impl=impl: impl.resample_field(
                values, gvalid, side, side, 2, 1.0, -9999.0, rout)),
        }

    header = f"{'kernel':<14}" + "".join(f"{name:>12}" for name, _ in lanes)
    if len(lanes) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for kernel in ("ensemble", "persistence", "resample"):
        row = f"{kernel:<14}"
        for name, _ in lanes:
            row += f"{results[name][kernel] * 1000:>10.2f}ms"
        if len(lanes) == 2:
            ratio = results["pure"][kernel] / results["compiled"][kernel]
            row += f"{ratio:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
