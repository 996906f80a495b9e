import hashlib

import pytest

from trickleflow.datamgr import DataManager, load_catalogue
from trickleflow.errors import GoneError, IntegrityError, NotFoundError
from trickleflow.federation import Federation, MachineSpec, QueueSpec


@pytest.fixture
def dm(tmp_path):
    return DataManager(root=tmp_path / "ws",
                       catalogue_path=tmp_path / "catalogue.jsonl")


def make_file(dm, machine="control", name="f.bin", content=b"payload"):
    d = dm.machine_dir(machine)
    path = d / name
    path.write_bytes(content)
    return path


def test_register_and_query(dm):
    path = make_file(dm)
    data_id = dm.register(path, "control", "inc-1", "mosaic",
                          description="stitched")
    entries = dm.query("inc-1")
    assert [e.id for e in entries] == [data_id]
    assert entries[0].kind == "mosaic"
    assert entries[0].size_bytes == len(b"payload")
    assert dm.query("inc-1", kind="diagram") == []
    assert dm.query("other") == []


def test_register_missing_file(dm):
    with pytest.raises(NotFoundError):
        dm.register(dm.machine_dir("control") / "ghost.bin",
                    "control", "inc-1", "input")


def test_register_bad_kind(dm):
    path = make_file(dm)
    with pytest.raises(ValueError):
        dm.register(path, "control", "inc-1", "blob")


def test_same_path_registers_twice(dm):
    path = make_file(dm)
    a = dm.register(path, "control", "inc-1", "input")
    b = dm.register(path, "control", "inc-1", "input")
    assert a != b
    assert len(dm.query("inc-1")) == 2


def test_fetch_identity(dm):
    content = bytes(range(256)) * 1000
    path = make_file(dm, content=content)
    data_id = dm.register(path, "control", "inc-1", "raster")
    fetched = dm.fetch_bytes(data_id)
    assert hashlib.sha256(fetched).hexdigest() == \
        hashlib.sha256(content).hexdigest()
    assert dm.content_hash(data_id) == hashlib.sha256(content).hexdigest()


def test_fetch_after_delete_is_gone(dm):
    path = make_file(dm)
    data_id = dm.register(path, "control", "inc-1", "input")
    dm.delete(data_id)
    with pytest.raises(GoneError):
        dm.fetch_bytes(data_id)
    assert not path.exists()


def test_fetch_vanished_file_integrity_error(dm):
    path = make_file(dm)
    data_id = dm.register(path, "control", "inc-1", "input")
    path.unlink()
    with pytest.raises(IntegrityError):
        dm.fetch_bytes(data_id)


def test_delete_idempotent_and_query_excludes(dm):
    path = make_file(dm)
    data_id = dm.register(path, "control", "inc-1", "input")
    dm.delete(data_id)
    dm.delete(data_id)
    assert dm.query("inc-1") == []
    assert dm.entry(data_id).status == "DELETED"
    with pytest.raises(NotFoundError):
        dm.delete("d999999")


def test_copy_replicates_and_registers(dm):
    path = make_file(dm, content=b"to-travel")
    a = dm.register(path, "control", "inc-1", "input")
    b = dm.copy(a, "alpha")
    entry = dm.entry(b)
    assert entry.machine == "alpha"
    assert dm.fetch_bytes(b) == b"to-travel"
    assert dm.resident(b, "alpha") and not dm.resident(a, "alpha")


def test_copy_deleted_is_gone(dm):
    path = make_file(dm)
    a = dm.register(path, "control", "inc-1", "input")
    dm.delete(a)
    with pytest.raises(GoneError):
        dm.copy(a, "alpha")


def test_copy_schedules_transfer_event(tmp_path):
    dm = DataManager(root=tmp_path / "ws")
    fed = Federation(datamgr=dm)
    fed.register_machine(MachineSpec(
        name="alpha", total_nodes=1,
        queues=(QueueSpec(name="normal", max_nodes=1, max_walltime_s=1000),),
        bandwidth_bytes_per_s=100 * 1024 * 1024))
    dm.transfer_hook = fed.transfer_event

    content = b"\0" * (1024 ** 2)
    src = dm.machine_dir("control") / "big.bin"
    src.write_bytes(content)
    # register with the real size but pretend it is 1 GiB for timing
    a = dm.register(src, "control", "inc-1", "input",
                    size_bytes=1024 ** 3)
    dm.copy(a, "alpha")
    transfers = fed.transfers()
    assert len(transfers) == 1
    assert transfers[0][1] == pytest.approx(10.24)

    # same-machine copy is instant: no transfer event
    b = dm.register(src, "alpha", "inc-1", "input")
    dm.copy(b, "alpha")
    assert len(fed.transfers()) == 1


def test_catalogue_replay(tmp_path):
    catalogue = tmp_path / "catalogue.jsonl"
    dm = DataManager(root=tmp_path / "ws", catalogue_path=catalogue)
    path = make_file(dm)
    a = dm.register(path, "control", "inc-1", "input")
    b = dm.register(path, "control", "inc-1", "raster")
    dm.delete(b)

    restored = load_catalogue(catalogue, tmp_path / "ws")
    assert restored.entry(a).status == "AVAILABLE"
    assert restored.entry(b).status == "DELETED"
    assert [e.id for e in restored.query("inc-1")] == [a]
