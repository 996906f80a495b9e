"""Machine registry, discrete-event batch-queue simulator, target
selection, and job lifecycle with workflow callbacks.

Two clock modes:

* virtual — the clock only moves inside advance(); job durations come
  from the cost model, so Table-I-style routing experiments are exact
  and instantaneous. Workload compute still runs (synchronously, at the
  job's start event); only the *timestamps* are synthetic.
* live — a driver thread maps scaled wall time onto the virtual clock;
  workload compute runs on a worker pool and the job ends when the
  compute actually finishes.

Scheduling is strict priority-then-FIFO: queues are scanned in priority
order and a queue is served from its head only (no backfill, no
preemption). Ties everywhere are lexicographic or insertion-order so
runs are bit-stable.
"""
from __future__ import annotations

import heapq
import io
import json
import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .errors import ConflictError, NoCapacityError, NotFoundError

log = logging.getLogger(__name__)

SHORT_WALLTIME_S = 1200          # 20-minute short-queue cap
DEFAULT_WAIT_SHORT_S = 60.0
DEFAULT_WAIT_NORMAL_S = 1800.0
DEFAULT_ALPHA = 0.3

# total job time ~ t_fixed + t_member * n_members, fitted to the
# 86 s / 1803 s endpoints of the 10- and 3000-member configurations
DEFAULT_COST_MODEL = {"mosquito": (80.3, 0.574)}

JOB_STATES = ("PENDING", "QUEUED", "RUNNING", "COMPLETED", "FAILED", "CANCELLED")
TERMINAL = ("COMPLETED", "FAILED", "CANCELLED")


@dataclass(frozen=True)
class QueueSpec:
    name: str
    max_nodes: int
    max_walltime_s: int = SHORT_WALLTIME_S
    priority: int = 0
    is_short: bool = False


@dataclass(frozen=True)
class MachineSpec:
    name: str
    total_nodes: int
    queues: tuple[QueueSpec, ...]
    bandwidth_bytes_per_s: float = 100 * 1024 * 1024

    def validate(self) -> None:
        if self.total_nodes <= 0:
            raise ValueError("total_nodes must be > 0")
        if self.bandwidth_bytes_per_s <= 0:
            raise ValueError("bandwidth must be > 0")
        names = [q.name for q in self.queues]
        if len(set(names)) != len(names):
            raise ValueError("queue names must be unique per machine")
        if sum(1 for q in self.queues if q.is_short) > 1:
            raise ValueError("at most one queue may be flagged short")


@dataclass
class Job:
    id: str
    incident_id: str
    machine: str
    queue: str
    nodes: int
    requested_walltime_s: int
    est_runtime_s: float = 0.0           # virtual duration in virtual mode
    state: str = "PENDING"
    submit_t: float = math.nan
    start_t: float = math.nan
    end_t: float = math.nan
    callbacks: dict[str, str] = field(default_factory=dict)
    workload_ref: str = ""
    params_ref: str = ""
    error_text: str = ""


@dataclass(frozen=True)
class SchedulingRecord:
    job_id: str
    nodes: int
    runtime_s: float
    queue_wait_s: float
    coefficient: float


def coefficient(runtime_s: float, queue_wait_s: float) -> float:
    """Fraction of a job's total system time spent running; 1 means an
    instantaneous start."""
    total = runtime_s + queue_wait_s
    if total <= 0:
        return 1.0
    return runtime_s / total


class _MachineState:
    def __init__(self, spec: MachineSpec):
        self.spec = spec
        self.free_nodes = spec.total_nodes
        self.queues: dict[str, list[str]] = {q.name: [] for q in spec.queues}
        # scan order: priority descending, then queue name
        self.scan_order = sorted(spec.queues,
                                 key=lambda q: (-q.priority, q.name))


class Federation:
    def __init__(self, mode: str = "virtual", broker=None, datamgr=None,
                 alpha: float = DEFAULT_ALPHA, time_scale: float = 20.0,
                 cost_model: dict[str, tuple[float, float]] | None = None):
        if mode not in ("virtual", "live"):
            raise ValueError("mode must be 'virtual' or 'live'")
        self.mode = mode
        self.broker = broker
        self.datamgr = datamgr
        self.alpha = alpha
        self.time_scale = time_scale
        self.cost_model = dict(cost_model or DEFAULT_COST_MODEL)
        # invoked at job start with the Job; raises on workload failure
        self.workload_executor: Callable[[Job], None] | None = None

        self._lock = threading.RLock()
        self._machines: dict[str, _MachineState] = {}
        self._jobs: dict[str, Job] = {}
        self._ema: dict[tuple[str, str], float] = {}
        self._records: list[SchedulingRecord] = []
        self._events: list[tuple[float, int, str, object]] = []
        self._seq = 0
        self._jobseq = 0
        self._now = 0.0
        self._transfers: list[tuple[float, float, str]] = []  # (t, dur, dest)

        self._driver: threading.Thread | None = None
        self._driver_stop = threading.Event()
        self._exec_pool: ThreadPoolExecutor | None = None
        self._epoch: float | None = None

    # -- registry ---------------------------------------------------------------

    def register_machine(self, spec: MachineSpec) -> str:
        spec.validate()
        with self._lock:
            if spec.name in self._machines:
                raise ConflictError(f"machine {spec.name} already registered")
            self._machines[spec.name] = _MachineState(spec)
            for q in spec.queues:
                default = (DEFAULT_WAIT_SHORT_S if q.is_short
                           else DEFAULT_WAIT_NORMAL_S)
                self._ema[(spec.name, q.name)] = default
        return spec.name

    def machines(self) -> list[MachineSpec]:
        with self._lock:
            return [m.spec for m in self._machines.values()]

    def ema_wait(self, machine: str, queue: str) -> float:
        with self._lock:
            return self._ema[(machine, queue)]

    def set_ema_wait(self, machine: str, queue: str, value: float) -> None:
        """Seed the wait predictor (operator override / tests)."""
        with self._lock:
            if (machine, queue) not in self._ema:
                raise NotFoundError(f"{machine}/{queue}")
            self._ema[(machine, queue)] = value

    # -- cost model ----------------------------------------------------------------

    def estimate_runtime(self, workload_kind: str, n_members: int) -> float:
        if n_members < 1:
            raise ValueError("n_members must be >= 1")
        t_fixed, t_member = self.cost_model[workload_kind]
        return t_fixed + t_member * n_members

    # -- selection ------------------------------------------------------------------

    def select_target(self, nodes: int, est_runtime_s: float,
                      input_data_ids: list[str] | None = None) -> tuple[str, str]:
        """Cheapest eligible (machine, queue) by predicted wait plus
        runtime plus input transfer time; lexicographic tiebreak."""
        input_data_ids = input_data_ids or []
        with self._lock:
            best = None
            for mname in sorted(self._machines):
                mstate = self._machines[mname]
                transfer = self._transfer_time(mname, input_data_ids)
                for q in sorted(mstate.spec.queues, key=lambda q: q.name):
                    if nodes > min(q.max_nodes, mstate.spec.total_nodes):
                        continue
                    if est_runtime_s > q.max_walltime_s:
                        continue
                    cost = self._ema[(mname, q.name)] + est_runtime_s + transfer
                    key = (cost, mname, q.name)
                    if best is None or key < best:
                        best = key
            if best is None:
                raise NoCapacityError(
                    f"no eligible queue for nodes={nodes}, "
                    f"est_runtime_s={est_runtime_s}")
            return best[1], best[2]

    def _transfer_time(self, machine: str, input_data_ids: list[str]) -> float:
        if self.datamgr is None or not input_data_ids:
            return 0.0
        pending = 0
        for data_id in input_data_ids:
            entry = self.datamgr.entry(data_id)
            if entry.machine != machine:
                pending += entry.size_bytes
        return pending / self._machines[machine].spec.bandwidth_bytes_per_s

    # -- job lifecycle -----------------------------------------------------------------

    def create_job(self, incident_id: str, machine: str, queue: str,
                   nodes: int, requested_walltime_s: int,
                   est_runtime_s: float | None = None,
                   callbacks: dict[str, str] | None = None,
                   workload_ref: str = "", params_ref: str = "") -> Job:
        with self._lock:
            self._jobseq += 1
            return Job(
                id=f"j{self._jobseq:05d}",
                incident_id=incident_id,
                machine=machine,
                queue=queue,
                nodes=nodes,
                requested_walltime_s=requested_walltime_s,
                est_runtime_s=(requested_walltime_s if est_runtime_s is None
                               else est_runtime_s),
                callbacks=dict(callbacks or {}),
                workload_ref=workload_ref,
                params_ref=params_ref,
            )

    def submit(self, job: Job) -> str:
        with self._lock:
            mstate = self._machines.get(job.machine)
            if mstate is None:
                raise NotFoundError(f"unknown machine {job.machine}")
            qspec = next((q for q in mstate.spec.queues
                          if q.name == job.queue), None)
            if qspec is None:
                raise NotFoundError(
                    f"unknown queue {job.queue} on {job.machine}")
            if job.nodes > min(qspec.max_nodes, mstate.spec.total_nodes):
                raise ValueError(
                    f"job needs {job.nodes} nodes, queue allows "
                    f"{min(qspec.max_nodes, mstate.spec.total_nodes)}")
            if job.requested_walltime_s > qspec.max_walltime_s:
                raise ValueError(
                    f"walltime {job.requested_walltime_s} exceeds queue cap "
                    f"{qspec.max_walltime_s}")
            if job.id in self._jobs:
                raise ConflictError(f"job {job.id} already submitted")
            self._jobs[job.id] = job
            job.state = "QUEUED"
            job.submit_t = self._now
            mstate.queues[job.queue].append(job.id)
            self._emit(job, "QUEUED")
            self._post(self._now, "dispatch", job.machine)
        return job.id

    def job(self, job_id: str) -> Job:
        with self._lock:
            if job_id not in self._jobs:
                raise NotFoundError(job_id)
            return self._jobs[job_id]

    def cancel(self, job_id: str) -> str:
        with self._lock:
            job = self.job(job_id)
            prior = job.state
            if prior in TERMINAL:
                return prior
            mstate = self._machines[job.machine]
            if prior == "QUEUED":
                mstate.queues[job.queue].remove(job_id)
            elif prior == "RUNNING":
                mstate.free_nodes += job.nodes
            job.state = "CANCELLED"
            job.end_t = self._now
            self._emit(job, "CANCELLED")
            if prior == "RUNNING":
                self._dispatch(job.machine)
            return prior

    # -- transfers ---------------------------------------------------------------------

    def transfer_event(self, size_bytes: int, dest_machine: str) -> float:
        """Virtual transfer of size_bytes to dest; returns its duration."""
        with self._lock:
            if dest_machine not in self._machines:
                return 0.0
            bw = self._machines[dest_machine].spec.bandwidth_bytes_per_s
            duration = size_bytes / bw
            self._transfers.append((self._now, duration, dest_machine))
            self._post(self._now + duration, "transfer",
                       (size_bytes, dest_machine))
            return duration

    def transfers(self) -> list[tuple[float, float, str]]:
        with self._lock:
            return list(self._transfers)

    # -- clock -------------------------------------------------------------------------

    @property
    def now(self) -> float:
        with self._lock:
            return self._now

    def advance(self, until: float) -> int:
        """Process all events with timestamp <= until, in (time,
        insertion) order; returns the number processed."""
        if self.mode != "virtual":
            raise RuntimeError("advance() is only valid in virtual mode")
        return self._advance(until)

    def _advance(self, until: float) -> int:
        with self._lock:
            if until < self._now:
                raise ValueError("cannot advance backwards")
            processed = 0
            while self._events and self._events[0][0] <= until:
                t, _, kind, data = heapq.heappop(self._events)
                self._now = t
                self._handle(kind, data)
                processed += 1
            self._now = until
            return processed

    def pending_events(self) -> int:
        with self._lock:
            return len(self._events)

    def next_event_time(self) -> float | None:
        with self._lock:
            return self._events[0][0] if self._events else None

    def _post(self, t: float, kind: str, data) -> None:
        self._seq += 1
        heapq.heappush(self._events, (t, self._seq, kind, data))

    def _handle(self, kind: str, data) -> None:
        if kind == "dispatch":
            self._dispatch(data)
        elif kind == "end":
            self._end(data)
        elif kind == "transfer":
            pass  # time accounting only
        else:  # pragma: no cover
            raise AssertionError(f"unknown event kind {kind}")

    # -- scheduling core -----------------------------------------------------------------

    def _dispatch(self, machine: str) -> None:
        """Start every queue head that fits, scanning queues in priority
        order; a queue blocks at its first non-fitting head."""
        mstate = self._machines[machine]
        for qspec in mstate.scan_order:
            queue = mstate.queues[qspec.name]
            while queue:
                job = self._jobs[queue[0]]
                if job.nodes > mstate.free_nodes:
                    break
                queue.pop(0)
                self._start(mstate, job)

    def _start(self, mstate: _MachineState, job: Job) -> None:
        job.state = "RUNNING"
        job.start_t = self._now
        mstate.free_nodes -= job.nodes
        wait = job.start_t - job.submit_t
        key = (job.machine, job.queue)
        self._ema[key] = self.alpha * wait + (1 - self.alpha) * self._ema[key]
        self._emit(job, "RUNNING")
        if self.mode == "virtual":
            if self.workload_executor is not None:
                try:
                    self.workload_executor(job)
                except Exception as exc:  # noqa: BLE001
                    job.error_text = f"{type(exc).__name__}: {exc}"
            self._post(self._now + job.est_runtime_s, "end", job.id)
        else:
            if self.workload_executor is None:
                self._post(self._now + job.est_runtime_s, "end", job.id)
            else:
                self._exec_pool.submit(self._run_live, job)

    def _run_live(self, job: Job) -> None:
        try:
            self.workload_executor(job)
        except Exception as exc:  # noqa: BLE001
            job.error_text = f"{type(exc).__name__}: {exc}"
        with self._lock:
            self._post(self._now, "end", job.id)

    def _end(self, job_id: str) -> None:
        job = self._jobs[job_id]
        if job.state != "RUNNING":
            return  # stale event (job was cancelled)
        mstate = self._machines[job.machine]
        mstate.free_nodes += job.nodes
        job.end_t = self._now
        job.state = "FAILED" if job.error_text else "COMPLETED"
        runtime = job.end_t - job.start_t
        wait = job.start_t - job.submit_t
        self._records.append(SchedulingRecord(
            job_id=job.id, nodes=job.nodes, runtime_s=runtime,
            queue_wait_s=wait, coefficient=coefficient(runtime, wait)))
        self._emit(job, job.state)
        self._dispatch(job.machine)

    def _emit(self, job: Job, state: str) -> None:
        queue_name = job.callbacks.get(state)
        if queue_name and self.broker is not None:
            def ts(value: float):
                return None if math.isnan(value) else value

            self.broker.send(queue_name, job.incident_id, {
                "job_id": job.id,
                "state": state,
                "machine": job.machine,
                "queue": job.queue,
                "nodes": job.nodes,
                "submit_t": ts(job.submit_t),
                "start_t": ts(job.start_t),
                "end_t": ts(job.end_t),
                "workload_ref": job.workload_ref,
                "params_ref": job.params_ref,
                "error_text": job.error_text,
            })

    # -- live driver -------------------------------------------------------------------------

    def start_live(self) -> None:
        if self.mode != "live":
            raise RuntimeError("start_live() requires live mode")
        if self._driver is not None:
            return
        self._exec_pool = ThreadPoolExecutor(max_workers=4,
                                             thread_name_prefix="fed-exec")
        self._epoch = time.monotonic()
        self._driver_stop.clear()
        self._driver = threading.Thread(target=self._drive, daemon=True,
                                        name="fed-driver")
        self._driver.start()

    def stop_live(self) -> None:
        if self._driver is None:
            return
        self._driver_stop.set()
        self._driver.join(timeout=5)
        self._driver = None
        if self._exec_pool is not None:
            self._exec_pool.shutdown(wait=False)
            self._exec_pool = None

    def _drive(self) -> None:
        while not self._driver_stop.wait(0.02):
            target = (time.monotonic() - self._epoch) * self.time_scale
            try:
                self._advance(target)
            except Exception:  # pragma: no cover - driver must not die
                log.exception("live driver advance failed")

    # -- records & metrics ------------------------------------------------------------------------

    def records(self) -> list[SchedulingRecord]:
        with self._lock:
            return list(self._records)

    def state_snapshot(self) -> dict:
        with self._lock:
            return {
                "virtual_time": self._now,
                "mode": self.mode,
                "machines": [
                    {
                        "name": m.spec.name,
                        "total_nodes": m.spec.total_nodes,
                        "free_nodes": m.free_nodes,
                        "bandwidth_bytes_per_s": m.spec.bandwidth_bytes_per_s,
                        "queues": [
                            {
                                "name": q.name,
                                "max_nodes": q.max_nodes,
                                "max_walltime_s": q.max_walltime_s,
                                "priority": q.priority,
                                "is_short": q.is_short,
                                "waiting": len(m.queues[q.name]),
                                "ema_wait_s": self._ema[(m.spec.name, q.name)],
                            }
                            for q in m.spec.queues
                        ],
                    }
                    for m in self._machines.values()
                ],
            }


DEFAULT_NODE_BUCKETS = [1, 2, 4, 8, 16, 32, 64, 128]
DEFAULT_HOUR_BUCKETS = [1, 3, 6, 12, 24, 48]


def scheduling_matrix(records: list[SchedulingRecord],
                      node_buckets: list[int] | None = None,
                      hour_buckets: list[float] | None = None) -> dict:
    """Bucketed job counts and mean scheduling coefficients.

    Each record lands in the smallest enclosing (node, hour) bucket
    pair; records beyond the last bucket are clamped into it. Empty
    cells carry count 0 and mean None.
    """
    node_buckets = node_buckets or DEFAULT_NODE_BUCKETS
    hour_buckets = hour_buckets or DEFAULT_HOUR_BUCKETS
    for buckets in (node_buckets, hour_buckets):
        if any(b1 >= b2 for b1, b2 in zip(buckets, buckets[1:])):
            raise ValueError("buckets must be strictly increasing")

    def locate(value, buckets):
        for b in buckets:
            if value <= b:
                return b
        return buckets[-1]

    cells: dict[tuple, list[float]] = {
        (nb, hb): [] for nb in node_buckets for hb in hour_buckets}
    for rec in records:
        nb = locate(rec.nodes, node_buckets)
        hb = locate(rec.runtime_s / 3600.0, hour_buckets)
        cells[(nb, hb)].append(rec.coefficient)

    return {
        "node_buckets": list(node_buckets),
        "hour_buckets": list(hour_buckets),
        "cells": {
            key: {
                "count": len(vals),
                "mean_coefficient": (math.fsum(vals) / len(vals)
                                     if vals else None),
            }
            for key, vals in cells.items()
        },
    }


def matrix_to_csv(matrix: dict) -> str:
    out = io.StringIO()
    out.write("node_bucket,hour_bucket,count,mean_coefficient\n")
    for nb in matrix["node_buckets"]:
        for hb in matrix["hour_buckets"]:
            cell = matrix["cells"][(nb, hb)]
            mean = ("" if cell["mean_coefficient"] is None
                    else repr(cell["mean_coefficient"]))
            out.write(f"{nb},{hb},{cell['count']},{mean}\n")
    return out.getvalue()


def load_machines(path: Path) -> list[MachineSpec]:
    """Read a federation config file: {"machines": [MachineSpec...]}."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    specs = []
    for m in doc["machines"]:
        queues = tuple(QueueSpec(**q) for q in m["queues"])
        specs.append(MachineSpec(
            name=m["name"],
            total_nodes=m["total_nodes"],
            queues=queues,
            bandwidth_bytes_per_s=m.get("bandwidth_bytes_per_s",
                                        100 * 1024 * 1024),
        ))
    return specs
