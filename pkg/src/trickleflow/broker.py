"""In-process message broker and stage dispatcher.

Named queues activate registered handler stages with the delivered
message. Delivery is exactly-once: a handler failure routes the message
to the dead-letter list, never back onto the queue. Messages sent to a
queue with no registration are parked and delivered upon registration.
Handlers for different queues run concurrently; handlers for the same
queue are serialized in send (FIFO) order.
"""
from __future__ import annotations

import json
import logging
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Callable

log = logging.getLogger(__name__)


class BrokerShutDown(RuntimeError):
    """send() after shutdown()."""


@dataclass(frozen=True)
class Message:
    id: str
    queue_name: str
    incident_id: str
    payload: dict[str, Any]
    created_at: str
    attempt: int = 1


@dataclass(frozen=True)
class StageRegistration:
    queue_name: str
    stage_name: str
    handler: Callable[[Message], None]


@dataclass(frozen=True)
class DeadLetter:
    message: Message
    error_text: str
    failed_at: str


@dataclass(frozen=True)
class DrainResult:
    processed: int
    timed_out: bool


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class Broker:
    """See module docstring.

    Do not call drain() from inside a handler; it would wait on itself.
    """

    def __init__(self, journal_path=None, max_workers: int = 8):
        self._lock = threading.Lock()
        self._quiet = threading.Condition(self._lock)
        self._queues: dict[str, deque[Message]] = {}
        self._registrations: dict[str, StageRegistration] = {}
        self._active: set[str] = set()
        self._dead: list[DeadLetter] = []
        self._pending = 0          # deliverable messages not yet finished
        self._processed_total = 0
        self._drain_mark = 0
        self._counter = 0
        self._shut_down = False
        self._journal_path = journal_path
        self._journal_lock = threading.Lock()
        self._executor = ThreadPoolExecutor(
            max_workers=max_workers, thread_name_prefix="broker")

    # -- registration ---------------------------------------------------------

    def register_stage(self, queue_name: str, stage_name: str,
                       handler: Callable[[Message], None]) -> StageRegistration:
        if not queue_name:
            raise ValueError("queue_name must be non-empty")
        reg = StageRegistration(queue_name, stage_name, handler)
        with self._lock:
            if queue_name in self._registrations:
                old = self._registrations[queue_name]
                log.info("queue %s: replacing stage %s with %s",
                         queue_name, old.stage_name, stage_name)
            self._registrations[queue_name] = reg
            parked = len(self._queues.get(queue_name, ()))
            if parked:
                self._pending += parked
            self._maybe_pump(queue_name)
        return reg

    # -- send / dispatch --------------------------------------------------------

    def send(self, queue_name: str, incident_id: str,
             payload: dict[str, Any]) -> str:
        if not queue_name:
            raise ValueError("queue_name must be non-empty")
        with self._lock:
            if self._shut_down:
                raise BrokerShutDown("broker has been shut down")
            self._counter += 1
            msg = Message(
                id=f"m{self._counter:08d}",
                queue_name=queue_name,
                incident_id=incident_id,
                payload=payload,
                created_at=_now_iso(),
            )
            self._journal(msg)
            self._queues.setdefault(queue_name, deque()).append(msg)
            if queue_name in self._registrations:
                self._pending += 1
                self._maybe_pump(queue_name)
        return msg.id

    def _journal(self, msg: Message) -> None:
        if self._journal_path is None:
            return
        record = json.dumps({
            "id": msg.id,
            "queue_name": msg.queue_name,
            "incident_id": msg.incident_id,
            "payload": msg.payload,
            "created_at": msg.created_at,
            "attempt": msg.attempt,
        })
        with self._journal_lock:
            with open(self._journal_path, "a", encoding="utf-8") as fh:
                fh.write(record + "\n")

    def _maybe_pump(self, queue_name: str) -> None:
        # caller holds self._lock
        if (queue_name in self._active
                or queue_name not in self._registrations
                or not self._queues.get(queue_name)):
            return
        self._active.add(queue_name)
        self._executor.submit(self._pump, queue_name)

    def _pump(self, queue_name: str) -> None:
        while True:
            with self._lock:
                queue = self._queues.get(queue_name)
                if not queue:
                    self._active.discard(queue_name)
                    return
                msg = queue.popleft()
                handler = self._registrations[queue_name].handler
            try:
                handler(msg)
            except Exception as exc:  # noqa: BLE001 - handler code is arbitrary
                log.exception("handler for %s failed on %s", queue_name, msg.id)
                with self._lock:
                    self._dead.append(DeadLetter(
                        message=msg,
                        error_text=f"{type(exc).__name__}: {exc}",
                        failed_at=_now_iso(),
                    ))
            finally:
                with self._quiet:
                    self._pending -= 1
                    self._processed_total += 1
                    self._quiet.notify_all()

    # -- observability -----------------------------------------------------------

    def drain(self, timeout: float = 30.0) -> DrainResult:
        """Block until all registered queues are empty and no handler is
        in flight; returns messages processed since the previous drain.

        Parked messages (queues with no registration) cannot make
        progress and do not block draining.
        """
        deadline = time.monotonic() + timeout
        with self._quiet:
            while self._pending > 0:
                remaining = deadline - time.monotonic()
                if remaining <= 0 or not self._quiet.wait(remaining):
                    processed = self._processed_total - self._drain_mark
                    self._drain_mark = self._processed_total
                    return DrainResult(processed=processed, timed_out=True)
            processed = self._processed_total - self._drain_mark
            self._drain_mark = self._processed_total
            return DrainResult(processed=processed, timed_out=False)

    def dead_letters(self, queue_name: str | None = None) -> list[DeadLetter]:
        with self._lock:
            if queue_name is None:
                return list(self._dead)
            return [d for d in self._dead
                    if d.message.queue_name == queue_name]

    def parked_count(self, queue_name: str) -> int:
        with self._lock:
            if queue_name in self._registrations:
                return 0
            return len(self._queues.get(queue_name, ()))

    def shutdown(self, wait: bool = True) -> None:
        with self._lock:
            self._shut_down = True
        self._executor.shutdown(wait=wait)
