"""External Data Interface: push endpoints and pull pollers.

Arriving data is packaged as a workflow message onto the handler's
target queue. Content is deduplicated by hash over a bounded window;
large payloads are staged to disk and referenced by path so the control
system never carries heavy data in messages.
"""
from __future__ import annotations

import base64
import hashlib
import logging
import threading
import time
import urllib.request
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .broker import Broker
from .errors import ConflictError, NotFoundError

log = logging.getLogger(__name__)

INLINE_LIMIT = 64 * 1024       # bytes; larger content goes to staging
DEDUP_WINDOW = 32              # content hashes retained per handler

PUSH = "PUSH"
PULL = "PULL"


@dataclass
class EDIHandler:
    name: str
    mode: str                       # PUSH | PULL
    target_queue: str
    incident_id: str
    pull_source: str | None = None
    poll_interval: float | None = None
    dedup_window: int = DEDUP_WINDOW

    def validate(self) -> None:
        if self.mode not in (PUSH, PULL):
            raise ValueError("mode must be PUSH or PULL")
        if not self.name or not self.target_queue:
            raise ValueError("name and target_queue must be non-empty")
        if self.mode == PULL:
            if not self.pull_source:
                raise ValueError("PULL handlers need a pull_source")
            if not self.poll_interval or self.poll_interval <= 0:
                raise ValueError("PULL handlers need poll_interval > 0")


@dataclass
class DataArrival:
    handler_name: str
    content_hash: str
    size_bytes: int
    received_at: float
    source: str                     # pushed | polled


@dataclass
class _HandlerState:
    spec: EDIHandler
    hashes: deque = field(default_factory=deque)
    dedup_count: int = 0
    arrivals: list[DataArrival] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    poller: "_Poller | None" = None
    fetch_failures: int = 0


class _Poller(threading.Thread):
    """Deadline-corrected polling loop, so cadence over k intervals is
    k plus or minus one regardless of handler latency."""

    def __init__(self, edi: "EDIService", handler_name: str, interval: float):
        super().__init__(daemon=True, name=f"edi-poll-{handler_name}")
        self.edi = edi
        self.handler_name = handler_name
        self.interval = interval
        self.stop_event = threading.Event()
        self.fire_count = 0

    def run(self) -> None:
        deadline = time.monotonic() + self.interval
        while True:
            delay = deadline - time.monotonic()
            if self.stop_event.wait(max(0.0, delay)):
                return
            deadline += self.interval
            self.fire_count += 1
            try:
                self.edi.poll_once(self.handler_name)
            except NotFoundError:
                return
            except Exception:  # noqa: BLE001 - keep polling through errors
                log.exception("poll of %s failed", self.handler_name)


class EDIService:
    def __init__(self, broker: Broker, staging_root: Path):
        self.broker = broker
        self.staging_root = Path(staging_root)
        self._lock = threading.Lock()
        self._handlers: dict[str, _HandlerState] = {}

    # -- registration ------------------------------------------------------------

    def register_handler(self, spec: EDIHandler) -> str:
        spec.validate()
        with self._lock:
            if spec.name in self._handlers:
                raise ConflictError(f"handler {spec.name} already registered")
            state = _HandlerState(spec=spec)
            self._handlers[spec.name] = state
        if spec.mode == PULL:
            poller = _Poller(self, spec.name, spec.poll_interval)
            state.poller = poller
            poller.start()
        return spec.name

    def handler(self, name: str) -> EDIHandler:
        with self._lock:
            if name not in self._handlers:
                raise NotFoundError(name)
            return self._handlers[name].spec

    def handlers_for(self, incident_id: str) -> list[EDIHandler]:
        with self._lock:
            return [s.spec for s in self._handlers.values()
                    if s.spec.incident_id == incident_id]

    def deactivate_handlers(self, incident_id: str) -> int:
        with self._lock:
            doomed = [name for name, s in self._handlers.items()
                      if s.spec.incident_id == incident_id]
            states = [self._handlers.pop(name) for name in doomed]
        for state in states:
            if state.poller is not None:
                state.poller.stop_event.set()
        return len(states)

    # -- ingestion ----------------------------------------------------------------

    def ingest(self, handler_name: str, content: bytes,
               source: str = "pushed") -> dict:
        """Returns {"deduplicated": bool, "message_id": str | None}."""
        with self._lock:
            if handler_name not in self._handlers:
                raise NotFoundError(handler_name)
            state = self._handlers[handler_name]
        # per-handler serialization keeps the dedup window deterministic
        with state.lock:
            digest = hashlib.sha256(content).hexdigest()
            if digest in state.hashes:
                state.dedup_count += 1
                return {"deduplicated": True, "message_id": None}
            state.hashes.append(digest)
            while len(state.hashes) > state.spec.dedup_window:
                state.hashes.popleft()
            state.arrivals.append(DataArrival(
                handler_name=handler_name,
                content_hash=digest,
                size_bytes=len(content),
                received_at=time.time(),
                source=source,
            ))
            payload = {
                "handler_name": handler_name,
                "content_hash": digest,
                "size_bytes": len(content),
                "source": source,
            }
            if len(content) > INLINE_LIMIT:
                path = self._stage(state.spec, digest, content)
                payload["content_ref"] = str(path)
            else:
                payload["content_b64"] = base64.b64encode(content).decode("ascii")
            message_id = self.broker.send(state.spec.target_queue,
                                          state.spec.incident_id, payload)
            return {"deduplicated": False, "message_id": message_id}

    def _stage(self, spec: EDIHandler, digest: str, content: bytes) -> Path:
        d = self.staging_root / spec.incident_id / spec.name
        d.mkdir(parents=True, exist_ok=True)
        path = d / f"{digest}.bin"
        path.write_bytes(content)
        return path

    def poll_once(self, handler_name: str) -> dict:
        """Fetch the handler's pull source once; on success behaves as
        ingest. Fetch failures are recorded and retried next interval."""
        spec = self.handler(handler_name)
        if spec.mode != PULL:
            raise ValueError(f"handler {handler_name} is not a PULL handler")
        try:
            with urllib.request.urlopen(spec.pull_source, timeout=10) as resp:
                content = resp.read()
        except Exception as exc:  # noqa: BLE001 - sensor outages are routine
            with self._lock:
                if handler_name in self._handlers:
                    self._handlers[handler_name].fetch_failures += 1
            log.warning("pull fetch for %s failed: %s", handler_name, exc)
            return {"fetched": False, "message_id": None}
        result = self.ingest(handler_name, content, source="polled")
        return {"fetched": True, "message_id": result["message_id"],
                "deduplicated": result["deduplicated"]}

    # -- introspection ---------------------------------------------------------------

    def dedup_count(self, handler_name: str) -> int:
        with self._lock:
            if handler_name not in self._handlers:
                raise NotFoundError(handler_name)
            return self._handlers[handler_name].dedup_count

    def fetch_failures(self, handler_name: str) -> int:
        with self._lock:
            if handler_name not in self._handlers:
                raise NotFoundError(handler_name)
            return self._handlers[handler_name].fetch_failures

    def poller_fire_count(self, handler_name: str) -> int:
        with self._lock:
            if handler_name not in self._handlers:
                raise NotFoundError(handler_name)
            poller = self._handlers[handler_name].poller
            return poller.fire_count if poller else 0


def decode_content(payload: dict) -> bytes:
    """Content bytes of an EDI message, inline or staged."""
    if "content_b64" in payload:
        return base64.b64decode(payload["content_b64"])
    if "content_ref" in payload:
        return Path(payload["content_ref"]).read_bytes()
    raise ValueError("message carries no content")
