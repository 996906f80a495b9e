"""Incident lifecycle, the mosquito workflow stages, and the
multi-fidelity trickling orchestrator with monotone supersession.

Stage chain (one message queue per stage):

    edi arrivals -> mosquito.init -> mosquito.simulate
        -> [one federation job per (rung, tile): preprocess, simulate,
            raster-export] -> mosquito.mosaic -> mosquito.topo
        -> mosquito.complete (supersession)

Every rung of the fidelity ladder runs the full chain concurrently; a
completed finer rung supersedes coarser ones and cancels their pending
jobs. The visible fidelity of a scenario never decreases.
"""
from __future__ import annotations

import json
import logging
import math
import queue as queue_mod
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tda
from .broker import Broker, Message
from .datamgr import CONTROL, DataManager
from .edi import EDIHandler, EDIService, decode_content
from .errors import ConflictError, NoCapacityError, NotFoundError
from .federation import Federation, Job, MachineSpec, QueueSpec
from .grid import (GridStack, ScalarGrid, parse_grid, parse_stack,
                   read_stack, write_stack)
from .model import EnsembleConfig, ScenarioInputs, run_ensemble
from .mosaic import stitch_stacks
from .workload import (ParameterDocument, Step, WorkloadDescription,
                       WorkloadRunner)

log = logging.getLogger(__name__)

INPUT_KINDS = ("temperature", "precipitation", "human_density", "gdp")
DEFAULT_LADDER = (10, 1000, 3000)
BUCKET_DAYS = {"day": 1, "week": 7, "month": 30}

Q_INIT = "mosquito.init"
Q_SIMULATE = "mosquito.simulate"
Q_MOSAIC = "mosquito.mosaic"
Q_TOPO = "mosquito.topo"
Q_COMPLETE = "mosquito.complete"
Q_FAILED = "mosquito.failed"

WORKLOAD_ID = "mosquito-pipeline"


@dataclass(frozen=True)
class Region:
    ncols: int
    nrows: int
    x_origin: float = 0.0
    y_origin: float = 0.0
    cell_size_m: float = 250.0

    def validate(self) -> None:
        if self.ncols <= 0 or self.nrows <= 0 or self.cell_size_m <= 0:
            raise ValueError("region dimensions must be positive")

    @property
    def cells(self) -> int:
        return self.ncols * self.nrows


@dataclass(frozen=True)
class FidelityLadder:
    rungs: tuple[int, ...] = DEFAULT_LADDER

    def __post_init__(self) -> None:
        if not self.rungs:
            raise ValueError("ladder must have at least one rung")
        if any(a >= b for a, b in zip(self.rungs, self.rungs[1:])):
            raise ValueError("ladder rungs must be strictly increasing")
        if any(r < 1 for r in self.rungs):
            raise ValueError("rungs must be >= 1")


@dataclass
class IncidentConfig:
    bucket: str = "week"                 # diagram time bucket
    resample_factor: int = 2
    sigma_cells: float = 1.0
    tau_fraction: float = 0.05           # of the mosaic's value range
    tile_cell_threshold: int = 250_000
    gdp_weight: float = 0.0


@dataclass
class Incident:
    id: str
    kind: str
    region: Region
    species: str
    disease: str
    ladder: FidelityLadder
    config: IncidentConfig
    status: str = "PENDING"              # PENDING|ACTIVE|COMPLETE|CANCELLED
    created_at: str = ""
    pending_inputs: dict[str, str] = field(default_factory=dict)
    latest_inputs: dict[str, str] = field(default_factory=dict)
    events: list[dict] = field(default_factory=list)
    scenario_ids: list[str] = field(default_factory=list)


@dataclass
class RungState:
    fidelity: int
    n_tiles: int
    job_ids: list[str] = field(default_factory=list)
    tile_rasters: dict[int, str] = field(default_factory=dict)
    raster_id: str = ""
    mosaic_id: str = ""
    diagrams_id: str = ""
    completed_stages: set[str] = field(default_factory=set)
    completed_at: float | None = None

    def result_set(self, scenario_id: str) -> dict:
        return {
            "scenario_id": scenario_id,
            "fidelity": self.fidelity,
            "raster_id": self.raster_id,
            "mosaic_id": self.mosaic_id,
            "diagrams_id": self.diagrams_id,
            "completed_stages": sorted(self.completed_stages),
            "completed_at": self.completed_at,
        }


@dataclass
class Scenario:
    id: str
    incident_id: str
    seed: int
    ladder: FidelityLadder
    input_ids: dict[str, str]
    rungs: dict[int, RungState] = field(default_factory=dict)
    visible_fidelity: int | None = None
    events: list[dict] = field(default_factory=list)
    subscribers: list[queue_mod.SimpleQueue] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class IncidentService:
    """Wires the broker, EDI, federation, data manager, and workload
    runner into the mosquito workflow; owns incident/scenario state."""

    def __init__(self, workspace: Path, mode: str = "virtual",
                 machines: list[MachineSpec] | None = None,
                 ladder: tuple[int, ...] = DEFAULT_LADDER,
                 config: IncidentConfig | None = None,
                 seed: int = 20260809, time_scale: float = 20.0):
        self.workspace = Path(workspace)
        self.workspace.mkdir(parents=True, exist_ok=True)
        self.default_ladder = FidelityLadder(tuple(ladder))
        self.default_config = config or IncidentConfig()
        self._seed_rng = np.random.Generator(np.random.PCG64(seed))

        self.broker = Broker(journal_path=self.workspace / "journal.jsonl")
        self.datamgr = DataManager(
            root=self.workspace,
            catalogue_path=self.workspace / "catalogue.jsonl")
        self.federation = Federation(mode=mode, broker=self.broker,
                                     datamgr=self.datamgr,
                                     time_scale=time_scale)
        self.datamgr.transfer_hook = self.federation.transfer_event
        self.runner = WorkloadRunner(workdir_root=self.workspace / "workdir")
        self.federation.workload_executor = self._execute_job
        self.edi = EDIService(self.broker,
                              staging_root=self.workspace / "edi")

        self.incidents: dict[str, Incident] = {}
        self.scenarios: dict[str, Scenario] = {}
        self._job_info: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._event_seq = 0

        self._register_operations()
        self._register_stages()
        for spec in machines or default_federation():
            self.federation.register_machine(spec)
        if mode == "live":
            self.federation.start_live()

    def close(self) -> None:
        if self.federation.mode == "live":
            self.federation.stop_live()
        self.broker.shutdown(wait=False)

    # -- incident lifecycle ------------------------------------------------------

    def create_incident(self, kind: str, region: Region, species: str,
                        disease: str, ladder: tuple[int, ...] | None = None,
                        config: IncidentConfig | None = None) -> str:
        if kind != "mosquito":
            raise ValueError(f"unsupported incident kind {kind!r}")
        region.validate()
        incident = Incident(
            id=f"inc-{uuid.uuid4().hex[:10]}",
            kind=kind,
            region=region,
            species=species,
            disease=disease,
            ladder=(FidelityLadder(tuple(ladder)) if ladder
                    else self.default_ladder),
            config=config or self.default_config,
        )
        with self._lock:
            self.incidents[incident.id] = incident
        return incident.id

    def incident(self, incident_id: str) -> Incident:
        with self._lock:
            if incident_id not in self.incidents:
                raise NotFoundError(incident_id)
            return self.incidents[incident_id]

    def activate(self, incident_id: str) -> None:
        incident = self.incident(incident_id)
        if incident.status != "PENDING":
            raise ConflictError(f"incident {incident_id} is {incident.status}")
        for kind in INPUT_KINDS:
            self.edi.register_handler(EDIHandler(
                name=f"{incident_id}.{kind}",
                mode="PUSH",
                target_queue=Q_INIT,
                incident_id=incident_id,
            ))
        incident.status = "ACTIVE"
        incident.events.append({"type": "activated"})

    def close_incident(self, incident_id: str) -> None:
        incident = self.incident(incident_id)
        self.edi.deactivate_handlers(incident_id)
        incident.status = "COMPLETE"

    def create_scenario(self, incident_id: str,
                        ladder: tuple[int, ...] | None = None,
                        seed: int | None = None) -> str:
        """Explicit what-if scenario over the incident's latest complete
        input set."""
        incident = self.incident(incident_id)
        missing = [k for k in INPUT_KINDS if k not in incident.latest_inputs]
        if missing:
            raise ConflictError(
                f"incident is missing inputs: {', '.join(missing)}")
        return self._new_scenario(incident, dict(incident.latest_inputs),
                                  ladder=ladder, seed=seed, emit=True)

    def _new_scenario(self, incident: Incident, input_ids: dict[str, str],
                      ladder: tuple[int, ...] | None = None,
                      seed: int | None = None, emit: bool = True) -> str:
        if seed is None:
            seed = int(self._seed_rng.integers(0, 2**63 - 1))
        scenario = Scenario(
            id=f"sc-{uuid.uuid4().hex[:10]}",
            incident_id=incident.id,
            seed=seed,
            ladder=(FidelityLadder(tuple(ladder)) if ladder
                    else incident.ladder),
            input_ids=input_ids,
        )
        with self._lock:
            self.scenarios[scenario.id] = scenario
        incident.scenario_ids.append(scenario.id)
        if emit:
            self.broker.send(Q_SIMULATE, incident.id,
                             {"scenario_id": scenario.id})
        return scenario.id

    def scenario(self, scenario_id: str) -> Scenario:
        with self._lock:
            if scenario_id not in self.scenarios:
                raise NotFoundError(scenario_id)
            return self.scenarios[scenario_id]

    def visible_result(self, scenario_id: str) -> dict:
        scenario = self.scenario(scenario_id)
        with scenario.lock:
            if scenario.visible_fidelity is None:
                raise NotFoundError(f"scenario {scenario_id} has no "
                                    "complete result set yet")
            rung = scenario.rungs[scenario.visible_fidelity]
            return rung.result_set(scenario_id)

    # -- events ------------------------------------------------------------------

    def emit_event(self, scenario: Scenario, event_type: str,
                   data: dict) -> None:
        with self._lock:
            self._event_seq += 1
            seq = self._event_seq
        event = {"type": event_type, "seq": seq,
                 "data": {"scenario_id": scenario.id, **data}}
        with scenario.lock:
            scenario.events.append(event)
            subscribers = list(scenario.subscribers)
        for sub in subscribers:
            sub.put(event)

    def subscribe(self, scenario_id: str, replay: bool = True):
        """Returns (backlog, queue); live events arrive on the queue."""
        scenario = self.scenario(scenario_id)
        sub: queue_mod.SimpleQueue = queue_mod.SimpleQueue()
        with scenario.lock:
            backlog = list(scenario.events) if replay else []
            scenario.subscribers.append(sub)
        return backlog, sub

    def unsubscribe(self, scenario_id: str, sub) -> None:
        scenario = self.scenario(scenario_id)
        with scenario.lock:
            if sub in scenario.subscribers:
                scenario.subscribers.remove(sub)

    # -- stage handlers ----------------------------------------------------------

    def _register_stages(self) -> None:
        self.broker.register_stage(Q_INIT, "stage_init", self.stage_init)
        self.broker.register_stage(Q_SIMULATE, "stage_simulate",
                                   self.stage_simulate)
        self.broker.register_stage(Q_MOSAIC, "stage_mosaic", self.stage_mosaic)
        self.broker.register_stage(Q_TOPO, "stage_topo", self.stage_topo)
        self.broker.register_stage(Q_COMPLETE, "stage_complete",
                                   self.stage_complete)
        self.broker.register_stage(Q_FAILED, "stage_failed", self.stage_failed)

    def stage_init(self, msg: Message) -> None:
        """Record an input arrival; once all four kinds are present,
        consume them into a scenario and trigger simulation."""
        incident = self.incident(msg.incident_id)
        handler_name = msg.payload["handler_name"]
        kind = handler_name.rsplit(".", 1)[-1]
        if kind not in INPUT_KINDS:
            raise ValueError(f"unexpected input kind {kind}")

        if "content_ref" in msg.payload:
            path = Path(msg.payload["content_ref"])
        else:
            content = decode_content(msg.payload)
            d = (self.datamgr.machine_dir(CONTROL) / "incidents"
                 / incident.id / "inputs")
            d.mkdir(parents=True, exist_ok=True)
            path = d / f"{kind}-{msg.payload['content_hash'][:12]}.asc"
            path.write_bytes(content)
        data_id = self.datamgr.register(
            path, CONTROL, incident.id, "input", description=kind)

        incident.pending_inputs[kind] = data_id      # latest wins
        incident.latest_inputs[kind] = data_id
        if all(k in incident.pending_inputs for k in INPUT_KINDS):
            input_ids = dict(incident.pending_inputs)
            incident.pending_inputs.clear()          # consume the quadruple
            self._new_scenario(incident, input_ids, emit=True)

    def stage_simulate(self, msg: Message) -> None:
        """Fan a scenario out across its fidelity ladder: estimate, pick
        a target, stage inputs, and submit one job per (rung, tile)."""
        scenario = self.scenario(msg.payload["scenario_id"])
        incident = self.incident(scenario.incident_id)
        region = incident.region
        n_tiles = max(1, math.ceil(region.cells
                                   / incident.config.tile_cell_threshold))
        tile_rows = self._tile_rows(region.nrows, n_tiles)
        copied: dict[tuple[str, str], str] = {}

        for rung in scenario.ladder.rungs:
            est = self.federation.estimate_runtime("mosquito", rung)
            rung_state = RungState(fidelity=rung, n_tiles=len(tile_rows))
            with scenario.lock:
                scenario.rungs[rung] = rung_state
            try:
                for tile_index, (row_start, row_end) in enumerate(tile_rows):
                    input_ids = list(scenario.input_ids.values())
                    machine, queue = self.federation.select_target(
                        nodes=1, est_runtime_s=est,
                        input_data_ids=input_ids)
                    local_ids = {}
                    for kind, data_id in scenario.input_ids.items():
                        key = (data_id, machine)
                        if key not in copied:
                            if self.datamgr.resident(data_id, machine):
                                copied[key] = data_id
                            else:
                                copied[key] = self.datamgr.copy(data_id,
                                                                machine)
                        local_ids[kind] = copied[key]
                    params_id = f"{scenario.id}-{rung}-t{tile_index}"
                    self.runner.register_params(ParameterDocument(
                        id=params_id, scope="RUN", values={
                            "scenario_id": scenario.id,
                            "incident_id": incident.id,
                            "n_members": rung,
                            "scenario_seed": scenario.seed,
                            "tile_index": tile_index,
                            "n_tiles": len(tile_rows),
                            "row_start": row_start,
                            "row_end": row_end,
                            "gdp_weight": incident.config.gdp_weight,
                            **{f"{k}_id": v for k, v in local_ids.items()},
                        }))
                    job = self.federation.create_job(
                        incident_id=incident.id,
                        machine=machine,
                        queue=queue,
                        nodes=1,
                        requested_walltime_s=int(math.ceil(est)),
                        est_runtime_s=est,
                        callbacks={"COMPLETED": Q_MOSAIC, "FAILED": Q_FAILED},
                        workload_ref=WORKLOAD_ID,
                        params_ref=params_id,
                    )
                    with self._lock:
                        self._job_info[job.id] = {
                            "scenario_id": scenario.id,
                            "fidelity": rung,
                            "tile_index": tile_index,
                            "produced": [],
                        }
                    rung_state.job_ids.append(job.id)
                    self.federation.submit(job)
            except NoCapacityError as exc:
                incident.events.append({
                    "type": "no-capacity", "fidelity": rung,
                    "error": str(exc)})
                self.emit_event(scenario, "error",
                                {"fidelity": rung, "error": str(exc)})
                continue
            self.emit_event(scenario, "stage", {
                "stage": "simulate", "fidelity": rung,
                "jobs": list(rung_state.job_ids)})

    @staticmethod
    def _tile_rows(nrows: int, n_tiles: int) -> list[tuple[int, int]]:
        n_tiles = min(n_tiles, nrows)
        bounds = []
        base = nrows // n_tiles
        extra = nrows % n_tiles
        row = 0
        for t in range(n_tiles):
            height = base + (1 if t < extra else 0)
            bounds.append((row, row + height))
            row += height
        return bounds

    def stage_mosaic(self, msg: Message) -> None:
        """Collect tile rasters of the finished job; once the rung's
        tiles are all present, stitch, register the mosaic, and hand the
        TDA workload to the topo stage."""
        job_id = msg.payload["job_id"]
        with self._lock:
            info = self._job_info[job_id]
        scenario = self.scenario(info["scenario_id"])
        rung_state = scenario.rungs[info["fidelity"]]
        raster_id = info["produced"][-1]
        with scenario.lock:
            rung_state.tile_rasters[info["tile_index"]] = raster_id
            rung_state.completed_stages.add("simulated")
            if len(rung_state.tile_rasters) < rung_state.n_tiles:
                return
            rung_state.raster_id = rung_state.tile_rasters[0]

        stacks = []
        for t in range(rung_state.n_tiles):
            text = self.datamgr.fetch_bytes(
                rung_state.tile_rasters[t]).decode("ascii")
            stacks.append(parse_stack(text))
        mosaic_stack = stitch_stacks(stacks)
        d = (self.datamgr.machine_dir(CONTROL) / "incidents"
             / scenario.incident_id / "mosaics")
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"mosaic_{scenario.id}_{rung_state.fidelity}.asc"
        write_stack(path, mosaic_stack)
        mosaic_id = self.datamgr.register(
            path, CONTROL, scenario.incident_id, "mosaic",
            description=f"{scenario.id}/{rung_state.fidelity}")
        with scenario.lock:
            rung_state.mosaic_id = mosaic_id
            rung_state.completed_stages.add("mosaicked")
        self.emit_event(scenario, "stage", {
            "stage": "mosaic", "fidelity": rung_state.fidelity,
            "mosaic_id": mosaic_id})
        self.broker.send(Q_TOPO, scenario.incident_id, {
            "scenario_id": scenario.id,
            "fidelity": rung_state.fidelity,
            "mosaic_id": mosaic_id,
        })

    def stage_topo(self, msg: Message) -> None:
        """Topological proxy generation: per time bucket, resample the
        aggregated mean-R0 field, extract the maxima diagram, threshold
        it; then the barycentre over the bucket diagrams."""
        scenario = self.scenario(msg.payload["scenario_id"])
        incident = self.incident(scenario.incident_id)
        cfg = incident.config
        fidelity = msg.payload["fidelity"]
        rung_state = scenario.rungs[fidelity]

        text = self.datamgr.fetch_bytes(msg.payload["mosaic_id"])
        stack = parse_stack(text.decode("ascii"))
        mean_layers = stack.select("day")
        mean_layers = [(lab, g) for lab, g in mean_layers
                       if lab.endswith(":mean")]
        n_days = len(mean_layers)
        grids = [g for _, g in mean_layers]

        all_values = [v for g in grids for v in g.data_values()]
        if not all_values:
            raise tda.EmptyDomainError("mosaic has no data cells")
        tau = cfg.tau_fraction * (max(all_values) - min(all_values))

        bucket_days = BUCKET_DAYS[cfg.bucket]
        diagrams = []
        for b in range(math.ceil(n_days / bucket_days)):
            days = range(b * bucket_days, min((b + 1) * bucket_days, n_days))
            agg = _aggregate_days([grids[d] for d in days])
            label = f"{cfg.bucket}{b}"
            fine = tda.gaussian_resample(agg, cfg.resample_factor,
                                         cfg.sigma_cells)
            diagram = tda.persistence_maxima(fine, time_label=label)
            diagrams.append(tda.threshold_diagram(diagram, tau))
        bary = tda.barycentre(diagrams)

        bundle = {
            "scenario_id": scenario.id,
            "fidelity": fidelity,
            "tau": tau,
            "resample_factor": cfg.resample_factor,
            "sigma_cells": cfg.sigma_cells,
            "buckets": [tda.diagram_to_dict(d) for d in diagrams],
            "barycentre": tda.diagram_to_dict(bary),
        }
        d = (self.datamgr.machine_dir(CONTROL) / "incidents"
             / scenario.incident_id / "diagrams")
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"diagrams_{scenario.id}_{fidelity}.json"
        path.write_text(json.dumps(bundle), encoding="utf-8")
        diagrams_id = self.datamgr.register(
            path, CONTROL, scenario.incident_id, "diagram",
            description=f"{scenario.id}/{fidelity}")
        with scenario.lock:
            rung_state.diagrams_id = diagrams_id
            rung_state.completed_stages.add("analysed")
        self.emit_event(scenario, "stage", {
            "stage": "topo", "fidelity": fidelity,
            "diagrams_id": diagrams_id})
        self.broker.send(Q_COMPLETE, scenario.incident_id, {
            "scenario_id": scenario.id,
            "fidelity": fidelity,
            "diagrams_id": diagrams_id,
        })

    def stage_complete(self, msg: Message) -> None:
        scenario = self.scenario(msg.payload["scenario_id"])
        self.complete_rung(scenario, msg.payload["fidelity"])

    def complete_rung(self, scenario: Scenario, fidelity: int) -> None:
        """Mark a rung complete and apply monotone supersession."""
        rung_state = scenario.rungs[fidelity]
        cancel_jobs: list[str] = []
        with scenario.lock:
            if not (rung_state.raster_id and rung_state.mosaic_id
                    and rung_state.diagrams_id):
                raise ValueError(
                    f"rung {fidelity} is missing result data ids")
            rung_state.completed_at = self.federation.now
            previous = scenario.visible_fidelity
            upgraded = previous is None or fidelity > previous
            if upgraded:
                scenario.visible_fidelity = fidelity
                for coarse, state in scenario.rungs.items():
                    if coarse < fidelity and state.completed_at is None:
                        cancel_jobs.extend(state.job_ids)
        self.emit_event(scenario, "stage",
                        {"stage": "complete", "fidelity": fidelity})
        self.emit_event(scenario, "rung_completed", {
            "fidelity": fidelity, "visible": upgraded})
        if upgraded:
            if previous is not None:
                self.emit_event(scenario, "superseded", {
                    "previous_fidelity": previous, "fidelity": fidelity})
            self.emit_event(scenario, "fidelity_changed", {
                "previous_fidelity": previous, "fidelity": fidelity})
            for job_id in cancel_jobs:
                self.federation.cancel(job_id)

    def stage_failed(self, msg: Message) -> None:
        incident = self.incident(msg.incident_id)
        incident.events.append({
            "type": "job_failed",
            "job_id": msg.payload["job_id"],
            "error": msg.payload.get("error_text", "")})
        with self._lock:
            info = self._job_info.get(msg.payload["job_id"])
        if info is not None:
            scenario = self.scenario(info["scenario_id"])
            self.emit_event(scenario, "stage", {
                "stage": "failed", "fidelity": info["fidelity"],
                "job_id": msg.payload["job_id"],
                "error": msg.payload.get("error_text", "")})

    # -- workload execution on the simulated machines -------------------------------

    def _execute_job(self, job: Job) -> None:
        outcomes = self.runner.execute_workload(
            job.workload_ref, job.params_ref, job.machine, job.id)
        produced = [i for o in outcomes for i in o.produced_data_ids]
        with self._lock:
            if job.id in self._job_info:
                self._job_info[job.id]["produced"] = produced

    def _register_operations(self) -> None:
        self.runner.register_description(WorkloadDescription(
            id=WORKLOAD_ID,
            steps=(
                Step(name="prepare", operation="mosquito.preprocess",
                     param_template={
                         "temperature_id": "${temperature_id}",
                         "precipitation_id": "${precipitation_id}",
                         "human_density_id": "${human_density_id}",
                         "gdp_id": "${gdp_id}",
                         "row_start": "${row_start}",
                         "row_end": "${row_end}",
                     }),
                Step(name="simulate", operation="mosquito.simulate",
                     param_template={
                         "n_members": "${n_members}",
                         "scenario_seed": "${scenario_seed}",
                         "gdp_weight": "${gdp_weight}",
                     }),
                Step(name="export", operation="raster.export",
                     param_template={
                         "scenario_id": "${scenario_id}",
                         "incident_id": "${incident_id}",
                         "n_members": "${n_members}",
                         "tile_index": "${tile_index}",
                     }),
            )))
        self.runner.register_operation("mosquito.preprocess",
                                       self._op_preprocess)
        self.runner.register_operation("mosquito.simulate", self._op_simulate)
        self.runner.register_operation("raster.export", self._op_export)

    def _load_input_layers(self, data_id: str) -> list[ScalarGrid]:
        """An input file is either a single ASCII grid or a stack whose
        layers, in order, are the days."""
        text = self.datamgr.fetch_bytes(data_id).decode("ascii")
        if text.startswith("NLAYERS"):
            return [g for _, g in parse_stack(text).layers]
        return [parse_grid(text)]

    def _op_preprocess(self, params: dict, workdir: Path) -> list[str]:
        """Crop the staged input grids to the job's tile and write the
        scenario-inputs manifest for the simulate step."""
        layers = {kind: self._load_input_layers(params[f"{kind}_id"])
                  for kind in INPUT_KINDS}
        n_days = len(layers["temperature"])
        if len(layers["precipitation"]) != n_days:
            raise ValueError("temperature and precipitation day counts differ")
        for kind in ("human_density", "gdp"):
            if len(layers[kind]) != 1:
                raise ValueError(f"{kind} must be a single grid")
        row_start, row_end = params["row_start"], params["row_end"]

        tile = GridStack()
        for d, g in enumerate(layers["temperature"]):
            tile.append(f"temperature:{d}", g.crop_rows(row_start, row_end))
        for d, g in enumerate(layers["precipitation"]):
            tile.append(f"precipitation:{d}", g.crop_rows(row_start, row_end))
        tile.append("human_density",
                    layers["human_density"][0].crop_rows(row_start, row_end))
        tile.append("gdp", layers["gdp"][0].crop_rows(row_start, row_end))
        write_stack(workdir / "tile_inputs.asc", tile)
        (workdir / "manifest.json").write_text(json.dumps({
            "n_days": n_days,
            "row_start": row_start,
            "row_end": row_end,
        }), encoding="utf-8")
        return []

    def _op_simulate(self, params: dict, workdir: Path) -> list[str]:
        """Run the ensemble over the tile inputs; write mean/stddev."""
        manifest = json.loads((workdir / "manifest.json").read_text())
        tile = read_stack(workdir / "tile_inputs.asc")
        n_days = manifest["n_days"]
        temperature = [tile.get(f"temperature:{d}") for d in range(n_days)]
        precipitation = [tile.get(f"precipitation:{d}")
                         for d in range(n_days)]
        inputs = ScenarioInputs(
            temperature=temperature,
            precipitation=precipitation,
            human_density=tile.get("human_density"),
            gdp=tile.get("gdp"),
            n_days=n_days,
            gdp_weight=float(params.get("gdp_weight", 0.0)),
        )
        cfg = EnsembleConfig(n_members=int(params["n_members"]),
                             scenario_seed=int(params["scenario_seed"]))
        result = run_ensemble(inputs, cfg)
        out = GridStack()
        for d in range(n_days):
            out.append(f"day{d}:mean", result.mean[d])
        for d in range(n_days):
            out.append(f"day{d}:stddev", result.stddev[d])
        write_stack(workdir / "r0_result.asc", out)
        return []

    def _op_export(self, params: dict, workdir: Path) -> list[str]:
        """Register the tile's R0 raster stack with the Data Manager."""
        src = workdir / "r0_result.asc"
        if not src.is_file():
            raise FileNotFoundError("simulate step output missing")
        machine = workdir.parent.name
        dest_dir = self.datamgr.machine_dir(machine) / "rasters"
        dest_dir.mkdir(parents=True, exist_ok=True)
        dest = dest_dir / (f"raster_{params['scenario_id']}_"
                           f"{params['n_members']}_t{params['tile_index']}.asc")
        dest.write_bytes(src.read_bytes())
        raster_id = self.datamgr.register(
            dest, machine, params["incident_id"], "raster",
            description=(f"{params['scenario_id']}/{params['n_members']}"
                         f"/tile{params['tile_index']}"))
        return [raster_id]

    # -- driving helpers -------------------------------------------------------------

    def run_virtual(self, horizon_s: float = 1e7, max_rounds: int = 100,
                    drain_timeout: float = 60.0) -> None:
        """Alternate broker drains and clock advances until both are
        quiet (virtual mode only)."""
        for _ in range(max_rounds):
            result = self.broker.drain(timeout=drain_timeout)
            if result.timed_out:
                raise TimeoutError("broker did not quiesce")
            if self.federation.pending_events() == 0:
                if self.broker.drain(timeout=drain_timeout).processed == 0:
                    return
                continue
            next_t = self.federation.next_event_time()
            self.federation.advance(min(horizon_s,
                                        max(next_t, self.federation.now)))
        raise TimeoutError("run_virtual did not settle")


def _aggregate_days(grids: list[ScalarGrid]) -> ScalarGrid:
    """Per-cell mean over a bucket's days; nodata propagates."""
    ref = grids[0]
    n = len(grids)
    acc = np.zeros(len(ref.values), dtype=np.float64)
    invalid = np.zeros(len(ref.values), dtype=bool)
    for g in grids:
        arr = np.asarray(g.values, dtype=np.float64)
        invalid |= arr == g.nodata
        acc += arr
    out = acc / n
    out[invalid] = ref.nodata
    return ref.copy_geometry(values=out.tolist())


def default_federation() -> list[MachineSpec]:
    """Two simulated machines: one with a short queue, one without."""
    return [
        MachineSpec(
            name="aster",
            total_nodes=16,
            queues=(
                QueueSpec(name="short", max_nodes=2,
                          max_walltime_s=1200, priority=10, is_short=True),
                QueueSpec(name="normal", max_nodes=16,
                          max_walltime_s=86400, priority=0),
            ),
            bandwidth_bytes_per_s=200 * 1024 * 1024,
        ),
        MachineSpec(
            name="betony",
            total_nodes=8,
            queues=(
                QueueSpec(name="normal", max_nodes=8,
                          max_walltime_s=172800, priority=0),
            ),
            bandwidth_bytes_per_s=100 * 1024 * 1024,
        ),
    ]
