import json
import threading
import time

import pytest

from trickleflow.broker import Broker, BrokerShutDown


@pytest.fixture
def broker(tmp_path):
    b = Broker(journal_path=tmp_path / "journal.jsonl")
    yield b
    b.shutdown(wait=False)


def test_send_delivers_exactly_once(broker):
    seen = []
    broker.register_stage("q", "stage", seen.append)
    broker.send("q", "inc", {"k": 1})
    broker.drain(5)
    assert len(seen) == 1
    assert seen[0].payload == {"k": 1}
    assert seen[0].incident_id == "inc"


def test_reregistration_replaces_handler(broker):
    first, second = [], []
    broker.register_stage("q", "one", first.append)
    broker.register_stage("q", "two", second.append)
    broker.send("q", "inc", {})
    broker.drain(5)
    assert not first
    assert len(second) == 1


def test_empty_queue_name_rejected(broker):
    with pytest.raises(ValueError):
        broker.register_stage("", "stage", lambda m: None)
    with pytest.raises(ValueError):
        broker.send("", "inc", {})


def test_parked_message_delivered_on_registration(broker):
    broker.send("later", "inc", {"v": 7})
    assert broker.parked_count("later") == 1
    seen = []
    broker.register_stage("later", "stage", seen.append)
    broker.drain(5)
    assert [m.payload["v"] for m in seen] == [7]
    assert broker.parked_count("later") == 0


def test_fifo_across_many_queues(broker):
    received: dict[str, list[int]] = {f"q{i}": [] for i in range(10)}
    for name, log in received.items():
        broker.register_stage(name, name,
                              lambda m, log=log: log.append(m.payload["seq"]))
    for seq in range(1000):
        broker.send(f"q{seq % 10}", "inc", {"seq": seq})
    result = broker.drain(30)
    assert not result.timed_out
    assert result.processed == 1000
    assert sum(len(v) for v in received.values()) == 1000
    for log in received.values():
        assert log == sorted(log)


def test_handler_failure_produces_one_dead_letter(broker):
    def boom(msg):
        raise RuntimeError("kaput")

    broker.register_stage("q", "boom", boom)
    broker.send("q", "inc", {})
    broker.drain(5)
    letters = broker.dead_letters()
    assert len(letters) == 1
    assert "kaput" in letters[0].error_text
    assert letters[0].message.queue_name == "q"
    assert broker.dead_letters("other") == []
    assert len(broker.dead_letters("q")) == 1


def test_drain_empty_returns_zero(broker):
    result = broker.drain(1)
    assert result.processed == 0
    assert not result.timed_out


def test_chained_stages_drain_count(broker):
    broker.register_stage(
        "a", "a", lambda m: broker.send("b", m.incident_id, {}))
    broker.register_stage(
        "b", "b", lambda m: broker.send("c", m.incident_id, {}))
    broker.register_stage(
        "c", "c", lambda m: broker.send("sink", m.incident_id, {}))
    broker.send("a", "inc", {})
    result = broker.drain(10)
    assert result.processed == 3          # sink is unregistered: parked
    assert broker.parked_count("sink") == 1


def test_drain_timeout_on_stuck_handler(broker):
    release = threading.Event()
    broker.register_stage("q", "stuck", lambda m: release.wait(30))
    broker.send("q", "inc", {})
    t0 = time.monotonic()
    result = broker.drain(0.3)
    assert result.timed_out
    assert time.monotonic() - t0 < 5
    release.set()


def test_send_during_handling_does_not_deadlock(broker):
    done = threading.Event()
    broker.register_stage("loop", "loop", lambda m: (
        broker.send("loop2", m.incident_id, {"hop": 1}), done.set()))
    broker.register_stage("loop2", "loop2", lambda m: None)
    broker.send("loop", "inc", {})
    assert not broker.drain(5).timed_out
    assert done.is_set()


def test_journal_written_before_handler_runs(broker, tmp_path):
    journal = tmp_path / "journal.jsonl"
    observed = []

    def check(msg):
        lines = journal.read_text().splitlines()
        observed.append(any(json.loads(ln)["id"] == msg.id for ln in lines))

    broker.register_stage("q", "check", check)
    broker.send("q", "inc", {"x": 1})
    broker.drain(5)
    assert observed == [True]


def test_journal_records_complete(broker, tmp_path):
    broker.register_stage("q", "s", lambda m: None)
    ids = [broker.send("q", "inc", {"n": i}) for i in range(5)]
    broker.drain(5)
    records = [json.loads(ln) for ln
               in (tmp_path / "journal.jsonl").read_text().splitlines()]
    assert [r["id"] for r in records] == ids
    assert all(set(r) == {"id", "queue_name", "incident_id", "payload",
                          "created_at", "attempt"} for r in records)
    assert all(r["attempt"] == 1 for r in records)


def test_send_after_shutdown_rejected(tmp_path):
    broker = Broker(journal_path=tmp_path / "j.jsonl")
    broker.shutdown()
    with pytest.raises(BrokerShutDown):
        broker.send("q", "inc", {})
