import random
import string
from pathlib import Path

import pytest
from hypothesis import strategies as st

from physweb.codec import (
    EddystoneTlmFrame,
    EddystoneUidFrame,
    EddystoneUrlFrame,
    IBeaconFrame,
    URL_EXPANSIONS,
    URL_SCHEMES,
)
from physweb.keys import BeaconKey

ROOT = Path(__file__).resolve().parents[1]
VECTORS = ROOT / "vectors" / "frames.txt"

URL_BODY_CHARS = string.ascii_lowercase + string.digits + "-_/~.?=&%"


def rand_ibeacon(rng: random.Random) -> IBeaconFrame:
    return IBeaconFrame(rng.randbytes(16), rng.randrange(1 << 16), rng.randrange(1 << 16), rng.randint(-128, 127))


def rand_uid(rng: random.Random) -> EddystoneUidFrame:
    return EddystoneUidFrame(rng.randbytes(10), rng.randbytes(6))


def rand_tlm(rng: random.Random) -> EddystoneTlmFrame:
    return EddystoneTlmFrame(
        0,
        rng.randrange(1 << 16),
        rng.randint(-0x8000, 0x7FFF) / 256,
        rng.randrange(1 << 16),
        rng.randrange(1 << 16),
    )


def rand_url(rng: random.Random) -> str:
    """A URL guaranteed to compress into at most 18 bytes."""
    scheme = rng.choice(list(URL_SCHEMES.values()))
    parts = []
    budget = 17
    while budget > 0 and rng.random() < 0.8:
        if rng.random() < 0.3:
            parts.append(rng.choice(list(URL_EXPANSIONS.values())))
        else:
            parts.append(rng.choice(URL_BODY_CHARS))
        budget -= 1
    return scheme + "".join(parts)


def rand_url_frame(rng: random.Random) -> EddystoneUrlFrame:
    return EddystoneUrlFrame(rand_url(rng))


def rand_key(rng: random.Random, pool_size: int = 0) -> BeaconKey:
    kind = rng.choice(("eddystone_uid", "ibeacon", "ssid", "mac"))
    if pool_size:
        # small value space so collisions happen
        n = rng.randrange(pool_size)
        if kind == "ssid":
            return BeaconKey.ssid(f"net{n}")
        size = {"eddystone_uid": 16, "ibeacon": 20, "mac": 6}[kind]
        return BeaconKey(kind, n.to_bytes(size, "big"))
    if kind == "ssid":
        return BeaconKey.ssid("".join(rng.choice(string.printable[:94]) for _ in range(rng.randint(0, 32))))
    size = {"eddystone_uid": 16, "ibeacon": 20, "mac": 6}[kind]
    return BeaconKey(kind, rng.randbytes(size))


ssid_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=32
).filter(lambda s: len(s.encode("utf-8")) <= 32)

beacon_keys = st.one_of(
    st.builds(BeaconKey, st.just("eddystone_uid"), st.binary(min_size=16, max_size=16)),
    st.builds(BeaconKey, st.just("ibeacon"), st.binary(min_size=20, max_size=20)),
    st.builds(BeaconKey, st.just("mac"), st.binary(min_size=6, max_size=6)),
    st.builds(BeaconKey, st.just("ssid"), ssid_text),
)


def read_vectors():
    out = []
    for line in VECTORS.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        hex_, desc = (part.strip() for part in line.split("→"))
        out.append((hex_, desc))
    return out


@pytest.fixture
def rng():
    return random.Random(20240611)


def rand_scene(rng: random.Random, n_nodes: int = 8, n_observers: int = 3, ticks: int = 12):
    """Random mixed scene: fixed, walking and carried nodes; open and filtered observers."""
    from physweb.codec import EddystoneUrlFrame, parse_ssid_beacon
    from physweb.sim import Attached, ObserverDevice, Position, RadioNode, Scene, Waypoint

    def walk():
        t = 0.0
        pts = []
        for _ in range(rng.randint(1, 4)):
            pts.append(Waypoint(t, rng.uniform(-40, 40), rng.uniform(-40, 40)))
            t += rng.uniform(0.5, 6.0)
        return pts

    uuids = [rng.randbytes(16) for _ in range(4)]
    observers = []
    for j in range(n_observers):
        filtered = rng.random() < 0.5
        observers.append(
            ObserverDevice(
                f"obs{j}",
                walk(),
                "filtered" if filtered else "open",
                rng.uniform(-95, -60),
                rng.sample(uuids, rng.randint(0, 4)) if filtered else None,
            )
        )
    nodes = []
    for i in range(n_nodes):
        r = rng.random()
        if r < 0.5:
            frame = IBeaconFrame(rng.choice(uuids), i, rng.randrange(1 << 16), -59)
            key = BeaconKey.ibeacon(frame.proximity_uuid, frame.major, frame.minor)
        elif r < 0.7:
            frame = rand_uid(rng)
            key = BeaconKey.eddystone_uid(frame.namespace, frame.instance)
        elif r < 0.85:
            frame = parse_ssid_beacon(f"http://n{i}.io")
            key = BeaconKey.ssid(frame.ssid)
        else:
            frame = EddystoneUrlFrame("https://x.org")
            key = BeaconKey.mac(i.to_bytes(6, "big"))
        p = rng.random()
        if p < 0.4:
            placement = Position(rng.uniform(-40, 40), rng.uniform(-40, 40))
        elif p < 0.7:
            placement = walk()
        else:
            placement = Attached(rng.choice(observers).id)
        nodes.append(RadioNode(key, frame, placement, rng.uniform(-75, 0), f"n{i}"))
    return Scene(nodes, observers, rng.uniform(1.5, 4.0), rng.choice([0.5, 1.0, 2.0]), ticks)


NAMESPACES = ("menu", "ads", "com.shop", "x-1")
STATUSES = ("active", "inactive", "decommissioned")


def rand_ops(rng: random.Random, count: int, pool: int = 12) -> list:
    """Random store operations over a small key pool; some are meant to fail."""
    ops = []
    issued = 0
    for _ in range(count):
        r = rng.random()
        key = rand_key(rng, pool)
        if r < 0.25:
            ops.append(("register", key, rng.choice(STATUSES[:2]) if rng.random() < 0.9 else "decommissioned"))
        elif r < 0.4:
            ops.append(("status", key, rng.choice(STATUSES)))
        elif r < 0.85:
            size = rng.choice([0, 1, 17, 300, 1024, 1025]) if rng.random() < 0.2 else rng.randint(0, 64)
            ops.append(("attach", key, rng.choice(NAMESPACES), rng.randbytes(size)))
            issued += 1
        else:
            ops.append(("detach", str(rng.randint(1, max(issued, 1) + 2))))
    return ops


def apply_op(store, op):
    """Run one generated op against a real store; rejected ops are expected."""
    from physweb.errors import StoreError
    from physweb.store import BeaconRegistration

    try:
        if op[0] == "register":
            store.register_beacon(BeaconRegistration(op[1], status=op[2]))
        elif op[0] == "status":
            store.set_beacon_status(op[1], op[2])
        elif op[0] == "attach":
            store.attach(op[1], op[2], "text", op[3])
        else:
            store.detach(op[1])
    except StoreError:
        pass
