import random
import threading

import pytest

from conftest import apply_op, rand_key, rand_ops
from oracles import StoreModel
from physweb.errors import CorruptRecordError, StoreError
from physweb.keys import BeaconKey
from physweb.store import (
    AttachmentStore,
    BeaconRegistration,
    JournalRecord,
    journal_replay,
    load_journal_file,
)

UID = BeaconKey.eddystone_uid(b"\xaa" * 10, b"\xbb" * 6)
MAC = BeaconKey.mac("aa:bb:cc:dd:ee:ff")


@pytest.fixture
def store():
    s = AttachmentStore()
    s.register_beacon(BeaconRegistration(UID))
    return s


def code_of(fn, *args):
    with pytest.raises(StoreError) as e:
        fn(*args)
    return e.value.code


def test_register_returns_canonical():
    s = AttachmentStore()
    assert s.register_beacon(BeaconRegistration(UID)) == "eddystone_uid:aaaaaaaaaaaaaaaaaaaabbbbbbbbbbbb"
    assert s.get_beacon(UID).status == "active"


def test_register_duplicate(store):
    assert code_of(store.register_beacon, BeaconRegistration(UID, status="inactive")) == "DUPLICATE_KEY"


@pytest.mark.parametrize(
    "kwargs, code",
    [
        (dict(latitude=91), "INVALID_COORDINATES"),
        (dict(longitude=-180.5), "INVALID_COORDINATES"),
        (dict(status="lost"), "INVALID_STATUS"),
        (dict(stability="floating"), "INVALID_STABILITY"),
        (dict(description="x" * 257), "INVALID_DESCRIPTION"),
        (dict(floor_level=1.5), "INVALID_FLOOR_LEVEL"),
    ],
)
def test_register_validation(kwargs, code):
    assert code_of(AttachmentStore().register_beacon, BeaconRegistration(MAC, **kwargs)) == code


def test_register_full_metadata():
    s = AttachmentStore()
    reg = BeaconRegistration(MAC, "inactive", "portable", 90, -180, "ChIJ123", -2, "x" * 256)
    s.register_beacon(reg)
    assert s.get_beacon(MAC) == reg


def test_invalid_key_from_dict():
    with pytest.raises(StoreError) as e:
        BeaconRegistration.from_dict({"key": "mac:aabb"})
    assert e.value.code == "INVALID_KEY"


def test_status_lifecycle(store):
    assert store.set_beacon_status(UID, "inactive") == "active"
    assert store.set_beacon_status(UID, "decommissioned") == "inactive"
    assert code_of(store.set_beacon_status, UID, "active") == "TERMINAL_STATUS"
    assert code_of(store.set_beacon_status, UID, "decommissioned") == "TERMINAL_STATUS"
    assert code_of(store.set_beacon_status, MAC, "active") == "UNREGISTERED_BEACON"


def test_attach_boundary(store):
    assert store.attach(UID, "menu", "text", b"x" * 1024) == "1"
    assert code_of(store.attach, UID, "menu", "text", b"x" * 1025) == "ATTACHMENT_TOO_LARGE"
    assert code_of(store.attach, MAC, "menu", "text", b"") == "UNREGISTERED_BEACON"


@pytest.mark.parametrize("ns", ["", "Menu", "a b", "x" * 65, "naïve"])
def test_attach_namespace_rules(store, ns):
    assert code_of(store.attach, UID, ns, "text", b"") == "INVALID_NAMESPACE"


def test_attach_data_type_rules(store):
    assert code_of(store.attach, UID, "ns", "Text/Plain", b"") == "INVALID_DATA_TYPE"
    store.attach(UID, "x" * 64, "application.json", b"{}")


def test_detach_idempotent(store):
    ident = store.attach(UID, "menu", "text", b"hi")
    assert store.detach(ident) is True
    assert store.detach(ident) is False
    assert store.detach("999") is False
    assert store.detach("not-a-number") is False


def test_ids_are_monotonic_after_detach(store):
    a = store.attach(UID, "m", "t", b"")
    store.detach(a)
    assert store.attach(UID, "m", "t", b"") == "2"


def test_get_for_observed(store):
    assert store.get_for_observed([]) == {}
    a1 = store.attach(UID, "menu", "text", b"one")
    a2 = store.attach(UID, "ads", "text", b"two")
    out = store.get_for_observed([UID, UID, MAC])
    assert list(out) == [UID.canonical]
    assert [a.attachment_id for a in out[UID.canonical]] == [a1, a2]
    assert [a.data for a in store.get_for_observed([UID], "ads")[UID.canonical]] == [b"two"]
    store.set_beacon_status(UID, "inactive")
    assert store.get_for_observed([UID]) == {}


def test_get_for_observed_accepts_canonical_strings(store):
    store.attach(UID, "menu", "text", b"one")
    assert list(store.get_for_observed([UID.canonical])) == [UID.canonical]


def test_resolution_matches_model():
    rng = random.Random(2)
    for _ in range(30):
        store, model = AttachmentStore(), StoreModel()
        for op in rand_ops(rng, rng.randint(0, 100), pool=8):
            apply_op(store, op)
            model.apply(op)
        for _ in range(20):
            keys = [rand_key(rng, 8) for _ in range(rng.randint(0, 10))]
            ns = rng.choice([None, "menu", "ads"])
            got = {
                c: [(int(a.attachment_id), a.namespace, a.data) for a in v]
                for c, v in store.get_for_observed(keys, ns).items()
            }
            assert got == model.resolve(keys, ns)


def test_decommissioned_never_leaves():
    rng = random.Random(4)
    for _ in range(20):
        store = AttachmentStore()
        dead = set()
        for op in rand_ops(rng, 200, pool=4):
            apply_op(store, op)
            for c in list(dead):
                assert store.get_beacon(c).status == "decommissioned"
            for c, reg in store.dump()["beacons"].items():
                if reg["status"] == "decommissioned":
                    dead.add(c)


# -- journal ----------------------------------------------------------------


def test_empty_journal():
    assert journal_replay([]).dump() == AttachmentStore().dump()


def test_replay_matches_live():
    rng = random.Random(9)
    for _ in range(20):
        live = AttachmentStore()
        for op in rand_ops(rng, 150):
            apply_op(live, op)
        lines = [r.to_line() for r in live.journal]
        assert journal_replay(lines).dump() == live.dump()
        assert journal_replay(live.journal).dump() == live.dump()


def test_replay_prefix_then_rest():
    rng = random.Random(10)
    live = AttachmentStore()
    for op in rand_ops(rng, 200):
        apply_op(live, op)
    cut = len(live.journal) // 2
    partial = journal_replay(live.journal[:cut])
    assert journal_replay(live.journal, partial).dump() == live.dump()
    assert journal_replay(live.journal[cut:], journal_replay(live.journal[:cut])).dump() == live.dump()


def test_replay_seq_gap(store):
    store.attach(UID, "m", "t", b"a")
    store.attach(UID, "m", "t", b"b")
    recs = list(store.journal)
    with pytest.raises(CorruptRecordError) as e:
        journal_replay([recs[0], recs[2]])
    assert e.value.position == 1
    assert e.value.store.seq == 1


def test_replay_unparseable_line(store):
    lines = [r.to_line() for r in store.journal] + ["2\tattach\t!!!notbase64"]
    with pytest.raises(CorruptRecordError) as e:
        journal_replay(lines)
    assert e.value.position == 1
    assert e.value.store.dump()["beacons"]


def test_replay_rejects_oversized_attachment(store):
    import base64
    import json

    payload = {"attachment_id": "1", "key": UID.canonical, "namespace": "m", "data_type": "t",
               "data": base64.b64encode(b"x" * 1025).decode()}
    bad = JournalRecord(2, "attach", json.dumps(payload).encode())
    with pytest.raises(CorruptRecordError):
        journal_replay(list(store.journal) + [bad])


def test_journal_line_format(store):
    line = store.journal[0].to_line()
    seq, op, b64 = line.split("\t")
    assert (seq, op) == ("1", "register")
    assert JournalRecord.from_line(line) == store.journal[0]


def test_journal_file_and_reopen(tmp_path):
    path = tmp_path / "bdp.journal"
    s = AttachmentStore.open(path)
    s.register_beacon(BeaconRegistration(MAC))
    s.attach(MAC, "menu", "text", b"soup")
    s.close()
    again = AttachmentStore.open(path)
    assert again.get_for_observed([MAC])[MAC.canonical][0].data == b"soup"
    again.attach(MAC, "menu", "text", b"bread")
    again.close()
    assert len(path.read_text().splitlines()) == 3
    assert load_journal_file(path).dump() == again.dump()


def test_snapshot_roundtrip(tmp_path):
    rng = random.Random(12)
    live = AttachmentStore()
    for op in rand_ops(rng, 300):
        apply_op(live, op)
    snap = tmp_path / "snap"
    live.write_snapshot(snap)
    assert snap.read_text().splitlines()[0] == f"SNAPSHOT seq={live.seq} next_id={live.dump()['next_attachment_id']}"
    restored = load_journal_file(snap)
    assert restored.dump() == live.dump()
    # journal records written after the snapshot continue from it
    before = len(live.journal)
    for op in rand_ops(rng, 50):
        apply_op(live, op)
    assert journal_replay(live.journal[before:], restored).dump() == live.dump()


def test_concurrent_attach_is_linearizable(store):
    def worker(n):
        for i in range(50):
            store.attach(UID, "menu", "text", f"{n}-{i}".encode())

    threads = [threading.Thread(target=worker, args=(n,)) for n in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    ids = [int(a.attachment_id) for a in store.get_for_observed([UID])[UID.canonical]]
    assert ids == list(range(1, 401))
    assert [r.seq for r in store.journal] == list(range(1, 402))
    assert journal_replay(store.journal).dump() == store.dump()
