"""Declarative multi-step workloads with parameter injection.

A workload is an ordered list of steps, each naming a registered
operation and a parameter template with ``${placeholder}`` references.
Placeholders resolve from run-scoped and machine-scoped parameter
documents (run wins). Steps execute strictly in order in a per-job
working directory; the first failure aborts the rest. The control plane
sees only job-level outcomes, never step-level events.
"""
from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .errors import ConflictError, NotFoundError

_PLACEHOLDER = re.compile(r"\$\{([A-Za-z0-9_.-]+)\}")


class UnresolvedPlaceholders(ValueError):
    def __init__(self, missing: list[str]):
        super().__init__(f"unresolved placeholders: {', '.join(sorted(missing))}")
        self.missing = sorted(missing)


@dataclass(frozen=True)
class Step:
    name: str
    operation: str
    param_template: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class WorkloadDescription:
    id: str
    steps: tuple[Step, ...]

    def __post_init__(self) -> None:
        names = [s.name for s in self.steps]
        if len(set(names)) != len(names):
            raise ValueError("step names must be unique")


@dataclass(frozen=True)
class ParameterDocument:
    id: str
    scope: str                      # RUN | MACHINE
    values: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.scope not in ("RUN", "MACHINE"):
            raise ValueError("scope must be RUN or MACHINE")


@dataclass
class StepOutcome:
    step_name: str
    ok: bool
    produced_data_ids: list[str] = field(default_factory=list)
    error_text: str = ""


class WorkloadFailure(RuntimeError):
    def __init__(self, outcomes: list[StepOutcome]):
        failed = next(o for o in outcomes if not o.ok)
        super().__init__(f"step {failed.step_name} failed: {failed.error_text}")
        self.outcomes = outcomes


def resolve(template: Any, run_params: ParameterDocument,
            machine_params: ParameterDocument) -> Any:
    """Substitute ${name} references; RUN values shadow MACHINE values.

    A string that is exactly one placeholder resolves to the parameter's
    native value; embedded placeholders interpolate as text. All missing
    keys are reported together.
    """
    merged = dict(machine_params.values)
    merged.update(run_params.values)
    missing: set[str] = set()

    def walk(node):
        if isinstance(node, str):
            whole = _PLACEHOLDER.fullmatch(node)
            if whole:
                key = whole.group(1)
                if key not in merged:
                    missing.add(key)
                    return node
                return merged[key]

            def sub(match):
                key = match.group(1)
                if key not in merged:
                    missing.add(key)
                    return match.group(0)
                return str(merged[key])

            return _PLACEHOLDER.sub(sub, node)
        if isinstance(node, dict):
            return {k: walk(v) for k, v in node.items()}
        if isinstance(node, list):
            return [walk(v) for v in node]
        return node

    resolved = walk(template)
    if missing:
        raise UnresolvedPlaceholders(sorted(missing))
    return resolved


class WorkloadRunner:
    """Registry of descriptions, parameter documents, and operations."""

    def __init__(self, workdir_root: Path):
        self.workdir_root = Path(workdir_root)
        self._lock = threading.Lock()
        self._descriptions: dict[str, WorkloadDescription] = {}
        self._params: dict[str, ParameterDocument] = {}
        self._machine_params: dict[str, ParameterDocument] = {}
        self._operations: dict[str, Callable[[dict, Path], list[str]]] = {}

    # -- registries ------------------------------------------------------------

    def register_operation(self, name: str,
                           impl: Callable[[dict, Path], list[str]]) -> None:
        with self._lock:
            if name in self._operations:
                raise ConflictError(f"operation {name} already registered")
            self._operations[name] = impl

    def register_description(self, desc: WorkloadDescription) -> str:
        with self._lock:
            self._descriptions[desc.id] = desc
        return desc.id

    def register_params(self, doc: ParameterDocument) -> str:
        with self._lock:
            if doc.scope == "MACHINE":
                self._machine_params[doc.id] = doc
            else:
                self._params[doc.id] = doc
        return doc.id

    def description(self, desc_id: str) -> WorkloadDescription:
        with self._lock:
            if desc_id not in self._descriptions:
                raise NotFoundError(desc_id)
            return self._descriptions[desc_id]

    def machine_params_for(self, machine_name: str) -> ParameterDocument:
        with self._lock:
            return self._machine_params.get(
                machine_name,
                ParameterDocument(id=machine_name, scope="MACHINE"))

    # -- execution ----------------------------------------------------------------

    def job_workdir(self, machine_name: str, job_id: str) -> Path:
        d = self.workdir_root / machine_name / job_id
        d.mkdir(parents=True, exist_ok=True)
        return d

    def execute_workload(self, desc_id: str, run_params_id: str,
                         machine_name: str, job_id: str) -> list[StepOutcome]:
        """Run the description's steps in order; raises WorkloadFailure
        (carrying all outcomes so far) on the first failing step."""
        desc = self.description(desc_id)
        with self._lock:
            if run_params_id not in self._params:
                raise NotFoundError(run_params_id)
            run_params = self._params[run_params_id]
        machine_params = self.machine_params_for(machine_name)
        workdir = self.job_workdir(machine_name, job_id)

        outcomes: list[StepOutcome] = []
        for step in desc.steps:
            with self._lock:
                impl = self._operations.get(step.operation)
            if impl is None:
                outcomes.append(StepOutcome(
                    step_name=step.name, ok=False,
                    error_text=f"unknown operation {step.operation}"))
                raise WorkloadFailure(outcomes)
            try:
                params = resolve(step.param_template, run_params,
                                 machine_params)
                produced = impl(params, workdir) or []
            except Exception as exc:  # noqa: BLE001 - step code is arbitrary
                outcomes.append(StepOutcome(
                    step_name=step.name, ok=False,
                    error_text=f"{type(exc).__name__}: {exc}"))
                raise WorkloadFailure(outcomes) from exc
            outcomes.append(StepOutcome(
                step_name=step.name, ok=True,
                produced_data_ids=list(produced)))
        return outcomes


# -- serialization ----------------------------------------------------------------

def description_to_dict(desc: WorkloadDescription) -> dict:
    return {
        "id": desc.id,
        "steps": [
            {"name": s.name, "operation": s.operation,
             "param_template": s.param_template}
            for s in desc.steps
        ],
    }


def description_from_dict(doc: dict) -> WorkloadDescription:
    return WorkloadDescription(
        id=doc["id"],
        steps=tuple(Step(name=s["name"], operation=s["operation"],
                         param_template=s.get("param_template", {}))
                    for s in doc["steps"]),
    )


def write_description(path, desc: WorkloadDescription) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(description_to_dict(desc), fh, indent=2)


def read_description(path) -> WorkloadDescription:
    with open(path, "r", encoding="utf-8") as fh:
        return description_from_dict(json.load(fh))


def params_from_yaml(path, doc_id: str, scope: str = "RUN") -> ParameterDocument:
    """Optional YAML reader for parameter documents (flat maps only)."""
    import yaml

    with open(path, "r", encoding="utf-8") as fh:
        values = yaml.safe_load(fh) or {}
    if not isinstance(values, dict):
        raise ValueError("parameter YAML must be a flat mapping")
    return ParameterDocument(id=doc_id, scope=scope, values=values)
