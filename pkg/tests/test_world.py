import pytest

from tagperm.snapshot import SnapshotError, dump_blob, load_blob
from tagperm.world import World


def test_blob_format():
    blob = dump_blob(b"TEST", 1, {"b": 1, "a": [1, 2]})
    assert blob[:4] == b"TEST"
    assert load_blob(b"TEST", 1, blob) == {"a": [1, 2], "b": 1}
    with pytest.raises(SnapshotError, match="not a NOPE"):
        load_blob(b"NOPE", 1, blob)
    with pytest.raises(SnapshotError, match="version"):
        load_blob(b"TEST", 2, blob)
    with pytest.raises(SnapshotError):
        load_blob(b"TEST", 1, blob[:5])
    bad = bytearray(blob)
    bad[-1] ^= 1
    with pytest.raises(SnapshotError):
        load_blob(b"TEST", 1, bytes(bad))


def test_world_snapshot_is_stable(owned):
    owned.grant_access("A", "B", "t")
    blob = owned.snapshot()
    back = World.restore(blob)
    assert back.snapshot() == blob


def test_restored_world_keeps_working(owned):
    owned.grant_access("A", "B", "t")
    back = World.restore(owned.snapshot())
    back.reader("B").close_session(back.authenticate("B", "t"))
    back.transfer_ownership("A", "C", "t")
    assert back.tags["t"].tag.owner == back.domain_id("C")


def test_same_seed_same_world(group):
    def build():
        w = World(group, seed=11)
        w.add_domains("A")
        w.new_tag("t")
        w.take_ownership("A", "t")
        w.reader("A").close_session(w.authenticate("A", "t"))
        return w
    assert build().snapshot() == build().snapshot()


def test_duplicate_tag_name(world):
    with pytest.raises(ValueError):
        world.new_tag("t")
