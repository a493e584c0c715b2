"""Independent brute-force oracles shared by unit and acceptance tests.

None of these import the code paths they check: geometry is recomputed
with numpy from raw scene fields, and the store oracle is a plain-list
model of the operation sequence.
"""

import numpy as np

from physweb.codec import IBeaconFrame
from physweb.sim import Attached, Position


def oracle_path_loss(tx, distance, n):
    d = np.maximum(np.asarray(distance, dtype=float), 0.1)
    return tx - 10.0 * n * np.log10(d)


def oracle_track(points, t):
    """np.interp over a waypoint list, clamped at the ends."""
    ts = np.array([p.t for p in points])
    xs = np.array([p.x for p in points])
    ys = np.array([p.y for p in points])
    return float(np.interp(t, ts, xs)), float(np.interp(t, ts, ys))


def oracle_visibility(scene, observer_id, tick):
    """{canonical key: rssi} for nodes this observer should hear at ``tick``."""
    t = tick * scene.tick_seconds
    obs = {o.id: o for o in scene.observers}
    me = obs[observer_id]
    ox, oy = oracle_track(me.path, t)
    out = {}
    for node in scene.nodes:
        p = node.placement
        if isinstance(p, Attached):
            if p.observer_id == observer_id:
                continue
            nx, ny = oracle_track(obs[p.observer_id].path, t)
        elif isinstance(p, Position):
            nx, ny = p.x, p.y
        else:
            nx, ny = oracle_track(p, t)
        if me.platform == "filtered":
            if not isinstance(node.frame, IBeaconFrame) or node.frame.proximity_uuid not in me.monitored_uuids:
                continue
        rssi = float(oracle_path_loss(node.tx_power_1m, np.hypot(ox - nx, oy - ny), scene.path_loss_exponent))
        if rssi >= me.sensitivity:
            out[node.key.canonical] = rssi
    return out


class StoreModel:
    """Naive model of registry + attachments, driven by the same op list as the store."""

    def __init__(self):
        self.status = {}
        self.attachments = []  # (id, canonical, namespace, data)
        self.next_id = 1

    def apply(self, op):
        kind = op[0]
        if kind == "register":
            _, key, status = op
            if key.canonical in self.status:
                return
            self.status[key.canonical] = status
        elif kind == "status":
            _, key, status = op
            if self.status.get(key.canonical) not in (None, "decommissioned"):
                self.status[key.canonical] = status
        elif kind == "attach":
            _, key, ns, data = op
            if key.canonical in self.status and len(data) <= 1024:
                self.attachments.append((self.next_id, key.canonical, ns, data))
                self.next_id += 1
        elif kind == "detach":
            _, ident = op
            self.attachments = [a for a in self.attachments if str(a[0]) != str(ident)]

    def resolve(self, keys, namespace=None):
        observed = {k.canonical for k in keys}
        live = {c for c in observed if self.status.get(c) == "active"}
        return {
            c: [(a[0], a[2], a[3]) for a in self.attachments if a[1] == c and namespace in (None, a[2])]
            for c in live
        }
