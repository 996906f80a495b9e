"""Desk-scale urgent-computing control service.

A workflow-driven orchestration core runs a surrogate mosquito-borne
disease ensemble across a simulated federation of batch-scheduled
machines, post-processes R0 fields into persistence-diagram proxies, and
trickles progressively finer results to a control-room UI.
"""
from ._kernels import COMPILED
from .broker import Broker
from .datamgr import DataManager
from .edi import EDIService
from .federation import Federation, MachineSpec, QueueSpec
from .grid import ScalarGrid
from .incident import IncidentService, Region
from .model import EnsembleConfig, ScenarioInputs, run_ensemble
from .tda import PersistenceDiagram, barycentre, persistence_maxima

__version__ = "0.1.0"

__all__ = [
    "COMPILED",
    "Broker",
    "DataManager",
    "EDIService",
    "EnsembleConfig",
    "Federation",
    "IncidentService",
    "MachineSpec",
    "PersistenceDiagram",
    "QueueSpec",
    "Region",
    "ScalarGrid",
    "ScenarioInputs",
    "barycentre",
    "persistence_maxima",
    "run_ensemble",
]
