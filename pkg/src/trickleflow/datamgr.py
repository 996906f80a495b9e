"""Data Manager: a catalogue of files across the federation.

Tracks location and status; never holds file bytes in its own records
(fetch streams from the recorded location). "Machines" are directories
under a single workspace root — location is a logical label.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator

from .errors import GoneError, IntegrityError, NotFoundError

KINDS = ("input", "raster", "mosaic", "diagram")
CONTROL = "control"
CHUNK = 64 * 1024


@dataclass
class DataEntry:
    id: str
    filename: str
    machine: str
    size_bytes: int
    description: str
    incident_id: str
    kind: str
    status: str          # AVAILABLE | DELETED
    created_at: str
    created_seq: int


class DataManager:
    def __init__(self, root: Path, catalogue_path: Path | None = None,
                 transfer_hook: Callable[[int, str], float] | None = None):
        self.root = Path(root)
        self._entries: dict[str, DataEntry] = {}
        self._lock = threading.Lock()
        self._seq = 0
        self._catalogue_path = catalogue_path
        # called with (size_bytes, dest_machine) on copy; returns the
        # virtual transfer duration (federation wires this in)
        self.transfer_hook = transfer_hook

    # -- paths -------------------------------------------------------------------

    def machine_dir(self, machine: str) -> Path:
        if machine == CONTROL:
            d = self.root / CONTROL
        else:
            d = self.root / "machines" / machine
        d.mkdir(parents=True, exist_ok=True)
        return d

    # -- catalogue operations -------------------------------------------------------

    def register(self, filename, machine: str, incident_id: str, kind: str,
                 description: str = "", size_bytes: int | None = None) -> str:
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        path = Path(filename)
        if not path.is_file():
            raise NotFoundError(f"no file at {filename}")
        if size_bytes is None:
            size_bytes = path.stat().st_size
        with self._lock:
            self._seq += 1
            entry = DataEntry(
                id=f"d{self._seq:06d}",
                filename=str(path),
                machine=machine,
                size_bytes=size_bytes,
                description=description,
                incident_id=incident_id,
                kind=kind,
                status="AVAILABLE",
                created_at=datetime.now(timezone.utc).isoformat(),
                created_seq=self._seq,
            )
            self._entries[entry.id] = entry
            self._append_event({"op": "register", **asdict(entry)})
            return entry.id

    def entry(self, data_id: str) -> DataEntry:
        with self._lock:
            if data_id not in self._entries:
                raise NotFoundError(data_id)
            return self._entries[data_id]

    def query(self, incident_id: str, kind: str | None = None) -> list[DataEntry]:
        with self._lock:
            out = [e for e in self._entries.values()
                   if e.incident_id == incident_id and e.status == "AVAILABLE"
                   and (kind is None or e.kind == kind)]
        return sorted(out, key=lambda e: e.created_seq)

    def fetch(self, data_id: str) -> Iterator[bytes]:
        # validate eagerly so callers see Gone/Integrity errors before
        # any bytes have been streamed
        entry = self.entry(data_id)
        if entry.status == "DELETED":
            raise GoneError(data_id)
        path = Path(entry.filename)
        if not path.is_file():
            raise IntegrityError(
                f"{data_id} catalogued at {entry.filename} but file is gone")
        return self._stream(path)

    @staticmethod
    def _stream(path: Path) -> Iterator[bytes]:
        with open(path, "rb") as fh:
            while True:
                chunk = fh.read(CHUNK)
                if not chunk:
                    return
                yield chunk

    def fetch_bytes(self, data_id: str) -> bytes:
        return b"".join(self.fetch(data_id))

    def copy(self, data_id: str, dest_machine: str) -> str:
        entry = self.entry(data_id)
        if entry.status == "DELETED":
            raise GoneError(data_id)
        src = Path(entry.filename)
        if not src.is_file():
            raise IntegrityError(f"{data_id} source file is gone")
        dest_dir = self.machine_dir(dest_machine) / "data"
        dest_dir.mkdir(parents=True, exist_ok=True)
        dest = dest_dir / f"{data_id}_{src.name}"
        dest.write_bytes(src.read_bytes())
        if self.transfer_hook is not None and dest_machine != entry.machine:
            self.transfer_hook(entry.size_bytes, dest_machine)
        return self.register(dest, dest_machine, entry.incident_id,
                             entry.kind, entry.description,
                             size_bytes=entry.size_bytes)

    def delete(self, data_id: str) -> None:
        with self._lock:
            entry = self._entries.get(data_id)
            if entry is None:
                raise NotFoundError(data_id)
            if entry.status == "DELETED":
                return
            entry.status = "DELETED"
            self._append_event({"op": "delete", "id": data_id})
        path = Path(entry.filename)
        if path.is_file():
            path.unlink()

    def resident(self, data_id: str, machine: str) -> bool:
        entry = self.entry(data_id)
        return entry.status == "AVAILABLE" and entry.machine == machine

    def content_hash(self, data_id: str) -> str:
        h = hashlib.sha256()
        for chunk in self.fetch(data_id):
            h.update(chunk)
        return h.hexdigest()

    def _append_event(self, event: dict) -> None:
        if self._catalogue_path is None:
            return
        with open(self._catalogue_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")


def load_catalogue(path: Path, root: Path) -> DataManager:
    """Rebuild a DataManager's entries by replaying a catalogue file."""
    dm = DataManager(root)
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            event = json.loads(line)
            op = event.pop("op")
            if op == "register":
                entry = DataEntry(**event)
                dm._entries[entry.id] = entry
                dm._seq = max(dm._seq, entry.created_seq)
            elif op == "delete":
                if event["id"] in dm._entries:
                    dm._entries[event["id"]].status = "DELETED"
    return dm
